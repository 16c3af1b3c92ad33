#include "yamabe/conformal.hpp"
#include "yamabe/stencil.hpp"

namespace yamabe {

namespace {

double alpha_n(int n) { return 0.5 * (n - 2); }

bool in_sphere_set(const SphereSet& K, const Vec& p) {
  for (const auto& c : K.caps)
    if (sphere_distance(c.center, p) <= c.radius) return true;
  return false;
}

void check_unit(const Vec& p, size_t i) {
  if (std::abs(p.norm() - 1.0) > 1e-10) throw InputError("sphere sample " + std::to_string(i) + " is not a unit vector");
}

}  // namespace

TransferredSolution pull_to_plane(const SphereField& v, const SphereSet& K) {
  TransferredSolution out;
  const int n = K.n;
  check_dimension(n);
  for (size_t i = 0; i < v.size(); ++i) {
    const Vec& p = v[i].point;
    if (p.size() != n + 1) throw InputError("sphere sample " + std::to_string(i) + " has the wrong dimension");
    check_unit(p, i);
    if (in_sphere_set(K, p)) throw InputError("sphere sample " + std::to_string(i) + " lies in K, outside the domain");
    if (p.head(n).squaredNorm() == 0 && p(n) > 0) throw InputError("sphere sample " + std::to_string(i) + " is the north pole");
    Vec x = stereo(p);
    double f = conformal_factor(x);
    out.planePoints.push_back(x);
    out.planeValues.push_back(f * v[i].value);
    out.factorUsed.push_back(f);
    out.sphereSamples.push_back(v[i]);
    if (!(v[i].value > 0)) out.flags.push_back("nonpositive value at sample " + std::to_string(i));
  }
  return out;
}

ScalarField pull_to_plane(const std::function<double(const Vec&)>& v, const GridSpec& grid) {
  grid.validate();
  ScalarField u(grid, 0.0);
  for (long c = 0; c < grid.size(); ++c) {
    Vec x = grid.physical_center(c);
    u.values(c) = conformal_factor(x) * v(stereo_inv(x));
  }
  return u;
}

PushedField push_to_sphere(const ScalarField& u, std::optional<double> farFieldA) {
  if (!farFieldA) throw InputError("push_to_sphere: no far-field coefficient, the pole value is undefined");
  const GridSpec& g = u.grid;
  const int n = g.dimension;
  PushedField out;
  out.poleValue = *farFieldA / std::pow(2.0, alpha_n(n));
  if (!(out.poleValue > 0)) out.flags.push_back("pole value " + std::to_string(out.poleValue) + " violates positivity");
  long bad = 0;
  for (long c = 0; c < g.size(); ++c) {
    if (!u.defined[c]) continue;
    Vec x = g.physical_center(c);
    double v = u.values(c) / conformal_factor(x);
    if (!(v > 0)) ++bad;
    out.samples.push_back({stereo_inv(x), v});
    out.cells.push_back(c);
  }
  if (bad) out.flags.push_back(std::to_string(bad) + " nonpositive samples");
  return out;
}

PushedField push_to_sphere(const SolutionField& s) {
  const GridSpec& g = s.u.grid;
  const int n = g.dimension;
  const double R = s.outerRadius;
  const Vec c = s.domainCenter.size() ? s.domainCenter : Vec(Vec::Zero(n));
  // the zero data on the truncation sphere is not part of the solution
  ScalarField inner = s.u;
  for (long i = 0; i < g.size(); ++i)
    if (s.role[i] == CellRole::Excluded || (g.physical_center(i) - c).norm() >= R) inner.defined[i] = 0;
  PushedField out = push_to_sphere(inner, s.farFieldA);
  if (!(out.poleValue > 0)) return out;
  double top = std::isfinite(R) ? 0.4 * R : 0.0;
  if (!std::isfinite(R))
    for (int a = 0; a < g.axes(); ++a) top = std::max(top, 0.25 * std::min(std::abs(g.lo[a]), std::abs(g.hi[a])));
  // shells [rho, 2 rho] with 2 rho = top, top/2, top/4
  std::vector<double> rhos;
  for (int k = 3; k >= 1; --k) rhos.push_back(top * std::ldexp(1.0, -k));
  for (double rho : rhos) {
    double dev = 0;
    long hits = 0;
    for (long i = 0; i < g.size(); ++i) {
      if (!s.u.defined[i] || s.role[i] != CellRole::Free) continue;
      Vec x = g.physical_center(i);
      double r = (x - c).norm();
      if (r < rho || r > 2 * rho) continue;
      double model = std::isfinite(R) ? 1.0 - std::pow(r / R, n - 2) : 1.0;
      // the truncated far field divided by the factor tends to the pole value
      double v = s.u.values(i) / (conformal_factor(x) * model);
      dev = std::max(dev, std::abs(v / out.poleValue - 1));
      ++hits;
    }
    if (hits) out.poleDeviation.emplace_back(rho, dev);
  }
  bool shrinking = out.poleDeviation.size() >= 2;
  for (size_t k = 1; k < out.poleDeviation.size(); ++k)
    if (out.poleDeviation[k].second > out.poleDeviation[k - 1].second * 1.05) shrinking = false;
  if (!shrinking) out.flags.push_back("continuity at the pole not confirmed on shrinking neighbourhoods");
  return out;
}

LaplacianDefect conformal_laplacian_check(const ScalarField& phi, const ScalarField& v) {
  const GridSpec& g = phi.grid;
  if (!v.grid.same_geometry(g)) throw InputError("conformal_laplacian_check: fields on different grids");
  const int n = g.dimension;
  const double cn = 4.0 * (n - 1) / (n - 2), q = Exponents(n).q.value(), e = 4.0 / (n - 2);
  for (long c = 0; c < g.size(); ++c)
    if (!(phi.values(c) > 0)) throw InputError("conformal_laplacian_check: phi must be positive");
  Eigen::VectorXd pv = phi.values.cwiseProduct(v.values);
  Eigen::VectorXd lapPhi = apply_laplacian(g, phi.values), lapV = apply_laplacian(g, v.values), lapPV = apply_laplacian(g, pv);
  LaplacianDefect out;
  double worst = 0, scale = 0;
  for (long c = 0; c < g.size(); ++c) {
    LaplaceStencil s = laplace_stencil(g, c);
    bool interior = true;
    for (int k = 0; k < s.count; ++k) interior &= s.nb[k] >= 0;
    // central gradients need both neighbours too
    int ijk[8];
    g.unravel(c, ijk);
    for (int a = 0; a < g.axes(); ++a)
      if (ijk[a] == g.cells[a] - 1 || (ijk[a] == 0 && !g.reflects(a))) interior = false;
    if (!interior) continue;
    ++out.interiorCells;
    double p = phi.values(c);
    double cross = gradient_at(g, phi.values, c).dot(gradient_at(g, v.values, c));
    double lhs = -cn * std::pow(p, -e) * (lapV(c) + 2 * cross / p) + std::pow(p, -q) * (-cn * lapPhi(c)) * v.values(c);
    double rhs = -cn * std::pow(p, -q) * lapPV(c);
    worst = std::max(worst, std::abs(lhs - rhs));
    scale = std::max(scale, std::abs(rhs));
  }
  out.maxDefect = scale > 0 ? worst / scale : worst;
  return out;
}

double sphere_curve_length(const std::vector<Vec>& pts, const std::function<double(const Vec&)>& v, int sub) {
  if (pts.size() < 2) return 0.0;
  const int n = int(pts[0].size()) - 1;
  const double e = 2.0 / (n - 2);
  double L = 0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec &a = pts[i], &b = pts[i + 1];
    double th = sphere_distance(a, b);
    if (th == 0) continue;
    // slerp midpoints
    for (int k = 0; k < sub; ++k) {
      double t = (k + 0.5) / sub;
      Vec m = (std::sin((1 - t) * th) * a + std::sin(t * th) * b) / std::sin(th);
      L += std::pow(v(m.normalized()), e) * th / sub;
    }
  }
  return L;
}

double plane_curve_length(const std::vector<Vec>& pts, const std::function<double(const Vec&)>& u, int sub) {
  if (pts.size() < 2) return 0.0;
  const int n = int(pts[0].size());
  const double e = 2.0 / (n - 2);
  double L = 0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double len = (pts[i + 1] - pts[i]).norm();
    for (int k = 0; k < sub; ++k) {
      double t = (k + 0.5) / sub;
      L += std::pow(u((1 - t) * pts[i] + t * pts[i + 1]), e) * len / sub;
    }
  }
  return L;
}

FactorBounds factor_bounds(int n, double R) {
  check_dimension(n);
  double a = alpha_n(n);
  return {std::pow(2.0, a) * std::pow(1 + R * R, -a), std::pow(2.0, a)};
}

}  // namespace yamabe
