#pragma once

#include "yamabe/geometry.hpp"
#include "yamabe/sphere.hpp"

#include <Eigen/Sparse>
#include <string>

namespace yamabe {

struct CapacityConfig {
  enum class Method { Auto, Newton, Fista };
  Method method = Method::Auto;
  // accelerated projected gradient
  int maxIterations = 20000;
  double relTol = 1e-7;
  int window = 50;
  bool coarseToFine = true;
  // projected Newton on the smoothed integrand
  int maxNewtonPerLevel = 60;
  int smoothingLevels = 7;  // eps = scale * 10^{-k}, k = 1..levels
  long directLimit = 4000;  // largest Full-grid Newton system factorised directly
};

struct CapacityResult {
  double value = 0;
  ScalarField extremal;
  double meshSpacing = 0;
  int iterations = 0;
  std::vector<double> objectiveHistory;
  double constraintViolation = 0;
  bool converged = true;
  bool coarseWarning = false;
  long kCells = 0;
  std::string method;
  Eigen::MatrixXd rotation;  // set by capacity_on_sphere
};

// Central-difference Hessian on the grid, as a sparse map from the free cells
// (centres inside the open support ball) to per-cell Hessian components.
// |Hess|_F^2 = sum_k mult[k] H_k^2.
class HessianOperator {
public:
  HessianOperator(const GridSpec& grid, double supportRadius = 2.0);

  int components() const { return m_; }
  long variables() const { return long(varCell_.size()); }
  const GridSpec& grid() const { return grid_; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return D_; }
  const Eigen::VectorXd& multiplicity() const { return mult_; }
  const Eigen::VectorXd& weights() const { return w_; }
  long cellOf(long var) const { return varCell_[var]; }
  long varOf(long cell) const { return cellVar_[cell]; }

  Eigen::VectorXd gather(const Eigen::VectorXd& cellValues) const;
  Eigen::VectorXd scatter(const Eigen::VectorXd& x) const;

  // sum_cells w (|H|^2 + eps^2)^{p/2} - eps^p
  double energy(const Eigen::VectorXd& x, double p, double eps = 0) const;
  double energy_and_gradient(const Eigen::VectorXd& x, double p, double eps, Eigen::VectorXd& grad) const;
  Eigen::SparseMatrix<double> newton_matrix(const Eigen::VectorXd& x, double p, double eps) const;
  // per-cell |Hess|_F
  Eigen::VectorXd frobenius(const Eigen::VectorXd& x) const;

private:
  GridSpec grid_;
  int m_ = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> D_;
  Eigen::VectorXd mult_, w_;
  std::vector<long> varCell_, cellVar_;
};

CapacityResult estimate_capacity(const CompactSetSpec& spec, const GridSpec& grid, const CapacityConfig& cfg = {});

// rotation == empty: canonical rotate_to_cap
CapacityResult capacity_on_sphere(const SphereSet& K, int cellsPerAxis, const CapacityConfig& cfg = {},
                                  const Eigen::MatrixXd& rotation = {});

// 6s^5 - 15s^4 + 10s^3 on [1/3, 1/2]
double smoothstep_H(double t);

struct CutoffPair {
  ScalarField phiTilde;
  ScalarField phi;
  ScalarField eta;
  double m = 0;
  double hessianBudget = 0;
  double capacity = 0;
  double cCut = 0;  // hessianBudget / capacity
};

CutoffPair build_cutoff(const CompactSetSpec& spec, double m, const GridSpec& grid, const CapacityConfig& cfg = {});
CutoffPair cutoff_from_extremal(const CapacityResult& cap, double m);

struct CutoffIntegrals {
  double I_grad = 0;
  double I_power = 0;
  double gradRatio = 0;
  double powerRatio = 0;
};

CutoffIntegrals cutoff_integral_checks(const CutoffPair& pair, const ScalarField& u);

struct HausdorffContentEstimate {
  double alpha = 0;
  double upperBound = 0;
  double lowerBound = 0;
  long coversUsed = 0;
  double cPack = 0;  // upperBound / r^alpha for the smallest enclosing ball radius r
};

HausdorffContentEstimate hausdorff_content(const CompactSetSpec& spec, double alpha, int depth);

struct ClosedFormShape {
  enum class Kind { Ball, Cylinder };
  Kind kind = Kind::Ball;
  int n = 3;
  double r = 0;
  double delta = 0;
};

double closed_form_capacity(const ClosedFormShape& s);

}  // namespace yamabe
