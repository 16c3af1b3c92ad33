#pragma once

#include "yamabe/pde.hpp"
#include "yamabe/sphere.hpp"

#include <functional>

namespace yamabe {

struct SphereSample {
  Vec point;  // unit vector in R^{n+1}
  double value = 0;
};

using SphereField = std::vector<SphereSample>;

// u(x) = Y(x) v(sigma^{-1} x) at paired points, Y the conformal factor
struct TransferredSolution {
  std::vector<Vec> planePoints;
  std::vector<double> planeValues;
  SphereField sphereSamples;
  std::vector<double> factorUsed;
  std::vector<std::string> flags;  // nonpositive values
};

// samples inside K or at the north pole are rejected
TransferredSolution pull_to_plane(const SphereField& v, const SphereSet& K);
// v evaluated at the sphere image of every cell centre
ScalarField pull_to_plane(const std::function<double(const Vec&)>& v, const GridSpec& grid);

struct PushedField {
  SphereField samples;
  std::vector<long> cells;  // source cell of each sample
  double poleValue = 0;  // A / 2^{(n-2)/2}
  // max relative deviation from the pole value on the plane shells rho_k <= |x| <= 2 rho_k,
  // rho_k doubling, i.e. on shrinking neighbourhoods of N
  std::vector<std::pair<double, double>> poleDeviation;
  std::vector<std::string> flags;
};

// v = u / Y on every defined cell, v(N) from the far-field coefficient.
// Refuses without a coefficient.
PushedField push_to_sphere(const ScalarField& u, std::optional<double> farFieldA);
// Solution on B(c, R): the pole check compares against the truncated far field
// A (|x|^{2-n} - R^{2-n}), so the shells stay inside 0.4 R.
PushedField push_to_sphere(const SolutionField& s);

struct LaplacianDefect {
  double maxDefect = 0;  // max |lhs - rhs| over interior cells, over max |rhs|
  long interiorCells = 0;
};

// L_hat v against phi^{-q} L(phi v) on the plane, L = -c_n Delta, with
// discrete Laplacian and central gradients
LaplacianDefect conformal_laplacian_check(const ScalarField& phi, const ScalarField& v);

// length of a polyline in v^{4/(n-2)} g_round, segments measured along great circles
double sphere_curve_length(const std::vector<Vec>& points, const std::function<double(const Vec&)>& v, int subdivisions = 16);
// same in u^{4/(n-2)} g_E
double plane_curve_length(const std::vector<Vec>& points, const std::function<double(const Vec&)>& u, int subdivisions = 16);

struct FactorBounds {
  double lower = 0;
  double upper = 0;
};

// 2^{(n-2)/2} (1 + R^2)^{-(n-2)/2} <= Y <= 2^{(n-2)/2} on B(0, R)
FactorBounds factor_bounds(int n, double R);

}  // namespace yamabe
