#include "doctest.h"

#include "yamabe/conformal.hpp"

#include <random>

using namespace yamabe;

namespace {
Vec origin(int n) { return Vec::Zero(n); }

SphereField random_samples(int n, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.5, 2.0);
  SphereField f;
  for (int i = 0; i < count; ++i) {
    Vec p(n + 1);
    for (int a = 0; a <= n; ++a) p(a) = N(rng);
    f.push_back({p.normalized(), U(rng)});
  }
  return f;
}

double bump(const Vec& x) {
  Vec c = Vec::Constant(x.size(), 0.1);
  return std::exp(-4 * (x - c).squaredNorm()) + 0.5 * std::exp(-8 * (x + c).squaredNorm());
}

LaplacianDefect defect_at(int N) {
  GridSpec g = GridSpec::full(3, 1.0, N);
  ScalarField phi(g), v(g);
  for (long c = 0; c < g.size(); ++c) {
    Vec x = g.physical_center(c);
    phi.values(c) = conformal_factor(x);
    v.values(c) = bump(x);
  }
  return conformal_laplacian_check(phi, v);
}
}  // namespace

TEST_CASE("constant sphere field") {
  SphereSet none{3, {}};
  SphereField f{{south_pole(3), 2.0}};
  auto t = pull_to_plane(f, none);
  REQUIRE(t.planeValues.size() == 1);
  CHECK(t.planePoints[0].norm() == 0);
  CHECK(t.planeValues[0] == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
  GridSpec g = GridSpec::full(3, 2.0, 8);
  ScalarField u = pull_to_plane([](const Vec&) { return 2.0; }, g);
  for (long c = 0; c < g.size(); ++c) CHECK(u.values(c) == doctest::Approx(2.0 * conformal_factor(g.physical_center(c))));
}

TEST_CASE("pull checks its samples") {
  SphereSet K{3, {SphereCap{south_pole(3), 0.2}}};
  CHECK_THROWS_AS(pull_to_plane(SphereField{{south_pole(3), 1.0}}, K), InputError);
  CHECK_THROWS_AS(pull_to_plane(SphereField{{north_pole(3), 1.0}}, SphereSet{3, {}}), InputError);
  CHECK_THROWS_AS(pull_to_plane(SphereField{{2 * north_pole(3), 1.0}}, SphereSet{3, {}}), InputError);
  auto t = pull_to_plane(SphereField{{-south_pole(3) * 0 + Vec::Unit(4, 0), -1.0}}, SphereSet{3, {}});
  CHECK(!t.flags.empty());
}

TEST_CASE("pull then push is the identity") {
  std::mt19937_64 rng(17);
  for (int n = 3; n <= 5; ++n) {
    SphereField f = random_samples(n, 500, rng);
    auto t = pull_to_plane(f, SphereSet{n, {}});
    for (size_t i = 0; i < f.size(); ++i) {
      CHECK(t.planeValues[i] == doctest::Approx(t.factorUsed[i] * f[i].value).epsilon(1e-14));
      // push back: v = u / Y at the sphere image
      Vec p = stereo_inv(t.planePoints[i]);
      double v = t.planeValues[i] / conformal_factor(t.planePoints[i]);
      CHECK((p - f[i].point).norm() < 1e-12);
      CHECK(std::abs(v - f[i].value) <= 1e-12 * f[i].value);
    }
  }
}

TEST_CASE("push then pull on a grid is the identity") {
  GridSpec g = GridSpec::full(3, 3.0, 12);
  ScalarField u(g);
  for (long c = 0; c < g.size(); ++c) u.values(c) = 1.0 + bump(g.physical_center(c));
  auto p = push_to_sphere(u, 1.0);
  auto back = pull_to_plane(p.samples, SphereSet{3, {}});
  REQUIRE(back.planeValues.size() == size_t(g.size()));
  for (long c = 0; c < g.size(); ++c) CHECK(std::abs(back.planeValues[c] - u.values(c)) <= 1e-12 * u.values(c));
}

TEST_CASE("the factor pushes to one") {
  GridSpec g = GridSpec::full(4, 3.0, 8);
  ScalarField u(g);
  for (long c = 0; c < g.size(); ++c) u.values(c) = conformal_factor(g.physical_center(c));
  auto p = push_to_sphere(u, 2.0);
  CHECK(p.poleValue == doctest::Approx(1.0));
  for (const auto& s : p.samples) CHECK(s.value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(p.flags.empty());
}

TEST_CASE("half-space profile on an annulus pushes to a positive band") {
  const double A = Exponents(3).blowupConstant();
  GridSpec g = GridSpec::full(3, 2.0, 16);
  ScalarField u(g);
  for (long c = 0; c < g.size(); ++c) {
    Vec x = g.physical_center(c);
    double r = x.norm(), t = x(2) + 3;
    u.defined[c] = r >= 0.5 && r <= 1.5;
    u.values(c) = A / std::sqrt(t);
  }
  auto p = push_to_sphere(u, A);
  CHECK(!p.samples.empty());
  for (const auto& s : p.samples) {
    CHECK(std::isfinite(s.value));
    CHECK(s.value > 0);
  }
}

TEST_CASE("push refuses without a fit and flags a zero pole") {
  ScalarField u(GridSpec::full(3, 1.0, 4), 1.0);
  CHECK_THROWS_AS(push_to_sphere(u, std::nullopt), InputError);
  auto p = push_to_sphere(u, 0.0);
  CHECK(p.poleValue == 0);
  CHECK(!p.flags.empty());
}

TEST_CASE("maximal solution extends across the pole") {
  SolveConfig cfg;
  cfg.crossValidate = false;
  cfg.outerRadii = {4, 16};
  CompactSetSpec K(3, {Ball{origin(3), 0.25}}, 0.25);
  auto s = maximal_solution(K, GridSpec::radial(3, 1.0, 100, origin(3)), cfg);
  auto p = push_to_sphere(s);
  CHECK(p.flags.empty());
  REQUIRE(p.poleDeviation.size() == 3);
  CHECK(p.poleDeviation.back().second < 0.1);
  // the pulled field solves the plane equation as well as the original
  auto back = pull_to_plane(p.samples, SphereSet{3, {}});
  ScalarField w = s.u;
  REQUIRE(p.cells.size() == back.planeValues.size());
  for (size_t k = 0; k < p.cells.size(); ++k) w.values(p.cells[k]) = back.planeValues[k];
  CHECK(residual_norm(w, s.role) <= 10 * cfg.newtonTol);
}

TEST_CASE("conformal laplacian identity") {
  GridSpec g = GridSpec::full(3, 1.0, 12);
  ScalarField one(g, 1.0), zero(g, 0.0), v(g);
  for (long c = 0; c < g.size(); ++c) v.values(c) = bump(g.physical_center(c));
  CHECK(conformal_laplacian_check(one, v).maxDefect < 1e-14);
  ScalarField phi(g);
  for (long c = 0; c < g.size(); ++c) phi.values(c) = conformal_factor(g.physical_center(c));
  CHECK(conformal_laplacian_check(phi, zero).maxDefect == 0);
  auto a = defect_at(16), b = defect_at(32);
  CHECK(a.interiorCells == 14 * 14 * 14);
  double rate = std::log2(a.maxDefect / b.maxDefect);
  CHECK(rate == doctest::Approx(2).epsilon(0.15));
  ScalarField neg(g, -1.0);
  CHECK_THROWS_AS(conformal_laplacian_check(neg, v), InputError);
}

TEST_CASE("curve lengths agree in both pictures") {
  auto v = [](const Vec& p) { return 1.0 + 0.5 * p(0) * p(0) + 0.3 * p(2); };
  auto u = [&](const Vec& x) { return conformal_factor(x) * v(stereo_inv(x)); };
  // great-circle arc through the southern hemisphere, away from N
  Vec a = Vec::Zero(4), b = Vec::Zero(4);
  a << 0.8, 0, 0, -0.6;
  b << 0, 0.6, 0.48, -0.64;
  b.normalize();
  std::vector<Vec> sph, pl;
  const int M = 200;
  double th = sphere_distance(a, b);
  for (int k = 0; k <= M; ++k) {
    double t = double(k) / M;
    Vec p = (std::sin((1 - t) * th) * a + std::sin(t * th) * b) / std::sin(th);
    sph.push_back(p);
    pl.push_back(stereo(p));
  }
  double Ls = sphere_curve_length(sph, v), Lp = plane_curve_length(pl, u);
  CHECK(Lp == doctest::Approx(Ls).epsilon(0.01));
  CHECK(Ls > 0);
}

TEST_CASE("factor bounds on B(0,10)") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-10, 10);
  for (int n = 3; n <= 5; ++n) {
    FactorBounds fb = factor_bounds(n, 10);
    CHECK(fb.lower == doctest::Approx(std::pow(2.0, 0.5 * (n - 2)) * std::pow(101.0, -0.5 * (n - 2))));
    CHECK(fb.upper == doctest::Approx(std::pow(2.0, 0.5 * (n - 2))));
    for (int t = 0; t < 2000; ++t) {
      Vec x(n);
      for (int a = 0; a < n; ++a) x(a) = U(rng);
      if (x.norm() > 10) continue;
      double f = conformal_factor(x);
      CHECK(f >= fb.lower * (1 - 1e-14));
      CHECK(f <= fb.upper * (1 + 1e-14));
    }
  }
}
