#include "doctest.h"

#include "yamabe/capacity.hpp"

#include <random>

using namespace yamabe;

namespace {
Vec origin(int n) { return Vec::Zero(n); }
Vec e_last(int n) {
  Vec a = Vec::Zero(n);
  a(n - 1) = 1;
  return a;
}
CompactSetSpec ball(int n, double r) { return CompactSetSpec(n, {Ball{origin(n), r}}, r); }

double radial_cap(double r, int N = 192) {
  return estimate_capacity(ball(3, r), GridSpec::capacity(3, Reduction::Radial1D, N)).value;
}
}  // namespace

TEST_CASE("empty set and point have zero capacity") {
  CompactSetSpec empty(3, {}, 1.0);
  auto res = estimate_capacity(empty, GridSpec::capacity(3, Reduction::Radial1D, 64));
  CHECK(res.value == 0);
  CHECK(res.extremal.values.cwiseAbs().maxCoeff() == 0);
  CompactSetSpec pt(3, {Point{origin(3)}}, 0.01);
  CHECK(estimate_capacity(pt, GridSpec::capacity(3, Reduction::Radial1D, 64)).value == 0);
}

TEST_CASE("monotone in K") {
  double a = radial_cap(0.2), b = radial_cap(0.4);
  CHECK(a > 0);
  CHECK(a <= b);
}

TEST_CASE("constraint and history") {
  auto res = estimate_capacity(ball(3, 0.3), GridSpec::capacity(3, Reduction::Radial1D, 128));
  CHECK(res.converged);
  CHECK(res.constraintViolation <= 1e-6);
  CHECK(res.kCells > 0);
  for (size_t i = 11; i < res.objectiveHistory.size(); ++i)
    CHECK(res.objectiveHistory[i] <= res.objectiveHistory[i - 1] * (1 + 1e-12));
  const GridSpec& g = res.extremal.grid;
  for (long c = 0; c < g.size(); ++c)
    if (g.physical_center(c).norm() >= 2.0) CHECK(res.extremal.values(c) == 0);
}

TEST_CASE("newton and fista agree on a small full grid") {
  GridSpec g = GridSpec::capacity(3, Reduction::Full, 16);
  CapacityConfig a, b;
  a.method = CapacityConfig::Method::Newton;
  b.method = CapacityConfig::Method::Fista;
  double va = estimate_capacity(ball(3, 0.5), g, a).value, vb = estimate_capacity(ball(3, 0.5), g, b).value;
  CHECK(vb == doctest::Approx(va).epsilon(2e-3));
}

TEST_CASE("reductions agree for a centred ball") {
  double rad = estimate_capacity(ball(3, 0.5), GridSpec::capacity(3, Reduction::Radial1D, 48)).value;
  double axi = estimate_capacity(ball(3, 0.5), GridSpec::capacity(3, Reduction::Axisymmetric2D, 48, 2.25, origin(3), e_last(3))).value;
  CHECK(axi == doctest::Approx(rad).epsilon(0.1));
}

TEST_CASE("slab grids are refused") {
  CHECK_THROWS_AS(estimate_capacity(ball(3, 0.5), GridSpec::slab(3, -2.5, 2.5, 50)), InputError);
}

TEST_CASE("subadditive on two balls") {
  Vec c1 = origin(3), c2 = origin(3);
  c1(2) = -0.5;
  c2(2) = 0.5;
  GridSpec g = GridSpec::capacity(3, Reduction::Axisymmetric2D, 48, 2.25, origin(3), e_last(3));
  double u = estimate_capacity(CompactSetSpec(3, {Ball{c1, 0.2}, Ball{c2, 0.2}}, 0.7), g).value;
  double a = estimate_capacity(CompactSetSpec(3, {Ball{c1, 0.2}}, 0.7), g).value;
  double b = estimate_capacity(CompactSetSpec(3, {Ball{c2, 0.2}}, 0.7), g).value;
  CHECK(u <= 1.05 * (a + b));
  CHECK(u >= std::max(a, b) * (1 - 1e-9));
}

TEST_CASE("discrete objective is convex along random segments") {
  HessianOperator op(GridSpec::capacity(3, Reduction::Axisymmetric2D, 24, 2.25, origin(3), e_last(3)));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0, 2);
  const double p = Exponents(3).qPrime.value();
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x(op.variables()), y(op.variables());
    for (long i = 0; i < x.size(); ++i) {
      x(i) = U(rng);
      y(i) = U(rng);
    }
    double l = U(rng) / 2;
    double mix = op.energy(l * x + (1 - l) * y, p);
    CHECK(mix <= l * op.energy(x, p) + (1 - l) * op.energy(y, p) + 1e-9);
  }
}

TEST_CASE("gradient matches finite differences") {
  HessianOperator op(GridSpec::capacity(3, Reduction::Axisymmetric2D, 16, 2.25, origin(3), e_last(3)));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  Eigen::VectorXd x(op.variables()), g;
  for (long i = 0; i < x.size(); ++i) x(i) = U(rng);
  const double p = 1.25, eps = 1e-2;
  op.energy_and_gradient(x, p, eps, g);
  for (long i : {0L, x.size() / 3, x.size() / 2, x.size() - 1}) {
    Eigen::VectorXd a = x, b = x;
    a(i) += 1e-6;
    b(i) -= 1e-6;
    double fd = (op.energy(a, p, eps) - op.energy(b, p, eps)) / 2e-6;
    CHECK(g(i) == doctest::Approx(fd).epsilon(1e-5).scale(1e-8));
  }
}

TEST_CASE("smoothstep plateaus") {
  CHECK(smoothstep_H(0.0) == 0);
  CHECK(smoothstep_H(1.0 / 3.0) == 0);
  CHECK(smoothstep_H(0.5) == 1);
  CHECK(smoothstep_H(2.0) == 1);
  double prev = 0;
  for (double t = 0.33; t <= 0.51; t += 0.001) {
    CHECK(smoothstep_H(t) >= prev);
    prev = smoothstep_H(t);
  }
  CHECK(smoothstep_H(5.0 / 12.0) == doctest::Approx(0.5));
}

TEST_CASE("cutoff pair invariants") {
  GridSpec g = GridSpec::capacity(3, Reduction::Radial1D, 128);
  auto K = ball(3, 0.3);
  CutoffPair pair = build_cutoff(K, 2.5, g);
  RasterMask mask = rasterize(K, g);
  for (long c = 0; c < g.size(); ++c) {
    double ph = pair.phi.values(c);
    CHECK(ph >= 0);
    CHECK(ph <= 1);
    if (mask.inside[c]) CHECK(ph == 1);
    CHECK(pair.eta.values(c) == doctest::Approx(std::pow(1 - ph, 2.5)).epsilon(1e-12));
    if (pair.phiTilde.values(c) >= 0.5) CHECK(pair.eta.values(c) == 0);
    if (g.physical_center(c).norm() >= 2) CHECK(pair.eta.values(c) == 1);
  }
  CHECK(pair.hessianBudget > 0);
  CHECK(pair.cCut == doctest::Approx(pair.hessianBudget / pair.capacity));
  CHECK_THROWS_AS(build_cutoff(K, 2.0, g), InputError);
}

TEST_CASE("cutoff constant is stable across radii") {
  GridSpec g = GridSpec::capacity(3, Reduction::Radial1D, 256);
  double a = build_cutoff(ball(3, 0.15), 2.5, g).cCut, b = build_cutoff(ball(3, 0.3), 2.5, g).cCut;
  CHECK(a / b < 1.5);
  CHECK(b / a < 1.5);
}

TEST_CASE("cutoff integrals") {
  GridSpec g = GridSpec::capacity(3, Reduction::Radial1D, 64);
  CutoffPair pair = build_cutoff(ball(3, 0.3), 2.5, g);
  ScalarField zero(g, 0.0);
  auto I = cutoff_integral_checks(pair, zero);
  CHECK(I.I_grad == 0);
  CHECK(I.I_power == 0);
  ScalarField holes(g, 1.0);
  holes.defined[g.size() - 1] = 0;
  CHECK_THROWS_AS(cutoff_integral_checks(pair, holes), InputError);
  ScalarField one(g, 1.0);
  auto J = cutoff_integral_checks(pair, one);
  CHECK(J.I_grad > 0);
  CHECK(J.I_power > 0);
}

TEST_CASE("sphere caps") {
  auto cap = [](double r) {
    SphereSet K{3, {SphereCap{south_pole(3), r}}};
    return capacity_on_sphere(K, 192);
  };
  double a = cap(0.1).value, b = cap(0.2).value;
  CHECK(a / b == doctest::Approx(std::pow(2.0, -0.5)).epsilon(0.2));
  SphereSet pt{3, {SphereCap{south_pole(3), 0}}};
  CHECK(capacity_on_sphere(pt, 64).value == 0);

  // an off-centre cap under two admissible rotations
  Vec c = south_pole(3);
  c(0) = 0.3;
  c.normalize();
  SphereSet K{3, {SphereCap{c, 0.15}}};
  double v1 = capacity_on_sphere(K, 96).value;
  double v2 = capacity_on_sphere(K, 96, {}, Eigen::MatrixXd::Identity(4, 4)).value;
  CHECK(v1 / v2 < 2);
  CHECK(v2 / v1 < 2);
  SphereSet wide{3, {SphereCap{south_pole(3), 0.6}}};
  CHECK_THROWS_AS(capacity_on_sphere(wide, 32), InputError);
}

TEST_CASE("closed form catalog") {
  CHECK(closed_form_capacity({ClosedFormShape::Kind::Cylinder, 3, 0.2, 0.01}) == 1);
  CHECK(closed_form_capacity({ClosedFormShape::Kind::Cylinder, 4, 0.16, 0.01}) == doctest::Approx(1 / std::log(16.0)));
  CHECK(closed_form_capacity({ClosedFormShape::Kind::Cylinder, 5, 0.2, 0.05 - 1e-15}) == doctest::Approx(0.5));
  CHECK(closed_form_capacity({ClosedFormShape::Kind::Ball, 5, 0.25, 0}) == doctest::Approx(0.125));
  CHECK_THROWS_AS(closed_form_capacity({ClosedFormShape::Kind::Cylinder, 4, 0.2, 0.05}), InputError);
}

TEST_CASE("hausdorff content") {
  double a = hausdorff_content(ball(3, 0.2), 3, 6).upperBound, b = hausdorff_content(ball(3, 0.4), 3, 6).upperBound;
  CHECK(b / a == doctest::Approx(8).epsilon(1.0));
  for (double r : {0.2, 0.4}) {
    auto e = hausdorff_content(ball(3, r), 3, 6);
    CHECK(e.lowerBound <= e.upperBound);
  }
  CompactSetSpec pt(3, {Point{origin(3)}}, 0.01);
  double prev = hausdorff_content(pt, 0.5, 2).upperBound;
  for (int d = 4; d <= 10; d += 2) {
    double v = hausdorff_content(pt, 0.5, d).upperBound;
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(prev < 0.05);
  Vec lo = origin(3), hi = origin(3);
  lo(2) = -0.5;
  hi(2) = 0.5;
  CompactSetSpec seg(3, {SegmentTube{lo, hi, 1e-4}}, 0.6);
  double s6 = hausdorff_content(seg, 1, 6).upperBound, s9 = hausdorff_content(seg, 1, 9).upperBound;
  CHECK(s9 == doctest::Approx(s6).epsilon(0.5));
  CHECK(s9 > 0.1);
  CHECK_THROWS_AS(hausdorff_content(pt, 0, 3), InputError);
  CHECK_THROWS_AS(hausdorff_content(pt, 1, 13), InputError);
}
