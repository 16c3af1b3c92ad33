#pragma once

#include "yamabe/capacity.hpp"

#include <limits>
#include <string>
#include <utility>

namespace yamabe {

enum class CellRole : std::uint8_t { Excluded = 0, Fixed = 1, Free = 2 };

struct SolveConfig {
  double newtonTol = 1e-10;  // max over free cells of |residual| / (size of the stencil terms)
  int maxNewton = 200;
  double damping = 0.5;
  double collarWidth = 2;  // grid cells
  std::vector<double> exhaustionLevels{10, 100, 1000};
  std::vector<double> outerRadii{2, 4};
  bool crossValidate = true;  // run exhaustion next to the collar mode
  int cgMaxIterations = 50000;

  void validate() const;
};

// Delta_h u = u^q on Free cells. Fixed cells hold data, Excluded cells must not
// touch a Free cell. `values` on Free cells is the starting guess (ignored unless positive).
struct DirichletProblem {
  GridSpec grid;
  std::vector<CellRole> role;
  Eigen::VectorXd values;
};

// Free cells form the open set; Excluded cells are the blow-up set; Fixed cells carry
// finite data. `distance` is the distance from each cell centre to the blow-up set.
struct LargeProblem {
  GridSpec grid;
  std::vector<CellRole> role;
  Eigen::VectorXd data;
  Eigen::VectorXd distance;
};

struct RadiusStep {
  double R = 0;
  double fittedA = 0;
  double monotoneViolation = 0;  // max of (u_prev - u) / scale over shared cells
};

struct SolutionField {
  enum class Kind { Dirichlet, Large, Maximal };

  ScalarField u;
  Kind kind = Kind::Dirichlet;
  std::vector<CellRole> role;
  double residualNorm = 0;
  int newtonIterations = 0;
  bool converged = false;
  bool trivial = false;
  Eigen::VectorXd distance;  // to the blow-up set, +inf without one
  // (m_k, sup relative change from the previous level on cells >= collar from the blow-up set)
  std::vector<std::pair<double, double>> exhaustionTrace;
  double exhaustionFarChange = 0;  // last change on cells at distance >= max(0.2, 2 collar)
  double modeDisagreement = 0;     // collar vs exhaustion beyond 2 collar widths
  std::vector<RadiusStep> radiusTrace;
  std::optional<double> farFieldA;
  double outerRadius = std::numeric_limits<double>::infinity();
  Vec domainCenter;
  std::vector<std::string> flags;

  bool flagged() const { return !flags.empty(); }
};

const char* to_string(SolutionField::Kind k);

SolutionField solve_dirichlet(const DirichletProblem& P, const SolveConfig& cfg = {});
SolutionField solve_large(const LargeProblem& P, const SolveConfig& cfg = {});

// Maximal solution of R^n \ K, approximated on B(c, R_k) \ K with zero data on the sphere.
// `grid` fixes reduction, spacing, lattice and symmetry data; its box is regrown per R_k.
// c is the grid center for reduced grids and 0 for full grids.
SolutionField maximal_solution(const CompactSetSpec& spec, const GridSpec& grid, const SolveConfig& cfg = {});

// max relative residual of a field under the discrete operator, on Free cells
double residual_norm(const ScalarField& u, const std::vector<CellRole>& role);

// a^{(n-2)/2} u(a x) on the grid scaled by 1/a
SolutionField rescale_solution(const SolutionField& u, double a);
// same, sampled on a given grid; rejects cells whose image a x leaves u's grid
ScalarField rescale_solution(const SolutionField& u, double a, const GridSpec& target);

// sample onto another grid; undefined where u has no defined cell nearby
ScalarField resample(const ScalarField& u, const GridSpec& target);

// least squares A in u ~ A (|x-c|^{2-n} - R^{2-n}) over the outer 20% shell
double far_field_fit(const ScalarField& u, const std::vector<CellRole>& role, const Vec& c, double R);

// sup over Free cells of u dist^{(n-2)/2}, dist = min(distance to the blow-up set, R - |x - c|)
double keller_osserman_sup(const SolutionField& s);

// 2 h^{1/2} times the local magnitude
inline double mesh_tolerance(double h, double localScale) { return 2.0 * std::sqrt(h) * std::abs(localScale); }

struct EstimateSetup {
  GridSpec pdeGrid;
  GridSpec capGrid;
  SolveConfig solve;
  CapacityConfig cap;
};

struct PointwiseEstimate {
  double lowerRatio = 0;
  double upperRatio = 0;
  double capacity = 0;
  long shellCells = 0;
  std::vector<std::string> flags;
};

// min and max of u(x) |x|^{n-2} / C(K) over 2r <= |x| <= 4r
PointwiseEstimate verify_pointwise_estimate(const CompactSetSpec& spec, double r, const EstimateSetup& setup);

struct IntegralEstimate {
  double ratio = 0;
  double integral = 0;
  double capacity = 0;
  double m = 0;
};

// sum over B(0,10) of u^{2/(n-2)} (1-phi)^m h^n divided by C(K)^{2/(n-2)}, m = (n+2)/2 + 100 n.
// The largest outer radius must be at least 10.
IntegralEstimate verify_integral_estimate(const CompactSetSpec& spec, const EstimateSetup& setup);

}  // namespace yamabe
