#include "doctest.h"

#include "yamabe/parallel.hpp"
#include "yamabe/wiener.hpp"

using namespace yamabe;

namespace {
Vec origin(int n) { return Vec::Zero(n); }

WienerConfig radial_cfg(int cells = 96) {
  WienerConfig c;
  c.oracle.reduction = Reduction::Radial1D;
  c.oracle.cells = cells;
  return c;
}

CatalogShape cusp(int n, double c, double a, double b = 0) {
  CatalogShape s;
  s.kind = CatalogShape::Kind::Cusp;
  s.n = n;
  s.profile.c = c;
  s.profile.a = a;
  s.profile.b = b;
  return s;
}

CatalogShape exp_cusp(int n, double a, double b) {
  CatalogShape s = cusp(n, 0.5, a, b);
  s.profile.kind = CuspProfile::Kind::ExpThin;
  return s;
}
}  // namespace

TEST_CASE("ball: terms are one at scales inside K") {
  CompactSetSpec K(3, {Ball{origin(3), 0.25}}, 0.25);
  WienerConfig cfg = radial_cfg();
  auto rep = wiener_terms(K, origin(3), cfg);
  REQUIRE(rep.terms.size() == 8);
  for (const auto& t : rep.terms) {
    CHECK(!t.missing);
    if (t.r <= 0.25) CHECK(t.term == doctest::Approx(1.0).epsilon(0.2));
  }
  CHECK(rep.verdict == WienerVerdict::DivergesNumerically);
  // the catalog has no answer at r = 1/2 and 1/4 < r
  cfg.oracle.kind = ScaleOracle::Kind::Catalog;
  auto cat = wiener_terms(K, origin(3), cfg);
  CHECK(cat.terms[0].missing);
  CHECK(cat.verdict == WienerVerdict::Inconclusive);
  cfg.jMin = 2;
  cat = wiener_terms(K, origin(3), cfg);
  for (const auto& t : cat.terms) CHECK(t.term == 1.0);
  CHECK(cat.verdict == WienerVerdict::DivergesNumerically);
  for (size_t i = 1; i < rep.partialSums.size(); ++i) CHECK(rep.partialSums[i] >= rep.partialSums[i - 1]);
}

TEST_CASE("point: terms vanish") {
  CompactSetSpec K(3, {Point{origin(3)}}, 1e-9);
  for (auto kind : {ScaleOracle::Kind::Variational, ScaleOracle::Kind::Catalog}) {
    WienerConfig cfg = radial_cfg();
    cfg.oracle.kind = kind;
    auto rep = wiener_terms(K, origin(3), cfg);
    for (const auto& t : rep.terms) CHECK(t.term == 0);
    CHECK(rep.verdict == WienerVerdict::ConvergesNumerically);
  }
}

TEST_CASE("segment in R^3: terms stay away from zero") {
  Vec e = Vec::Unit(3, 2);
  const double d = 0.006;
  CompactSetSpec K(3, {SegmentTube{-e, e, d}}, 1 + d);
  WienerConfig cfg;
  cfg.jMin = 4;
  cfg.oracle.reduction = Reduction::Axisymmetric2D;
  cfg.oracle.axis = e;
  cfg.oracle.cells = 48;
  CatalogShape line;
  line.n = 3;
  line.k = 1;
  auto rep = wiener_terms(K, origin(3), cfg, line);
  REQUIRE(rep.terms.size() == 5);
  for (const auto& t : rep.terms) {
    CHECK(!t.missing);
    CHECK(t.term > 0.2);
  }
  CHECK(rep.verdict == WienerVerdict::DivergesNumerically);
  REQUIRE(rep.catalogVerdict);
  CHECK(*rep.catalogVerdict == ThinVerdict::NotThin);
  CHECK(rep.flags.empty());
  // catalog oracle: thin cylinder, ratio one in n = 3
  cfg.oracle.kind = ScaleOracle::Kind::Catalog;
  auto cat = wiener_terms(K, origin(3), cfg);
  for (const auto& t : cat.terms) {
    if (t.r > 4 * d || t.r <= d) CHECK(t.term == 1.0);
    else CHECK(t.missing);  // neither a thin cylinder nor inside the tube
  }
}

TEST_CASE("unresolved scales are missing, verdict inconclusive") {
  Vec e = Vec::Unit(3, 2);
  CompactSetSpec K(3, {SegmentTube{-e, e, 1e-5}}, 1.0001);
  WienerConfig cfg;
  cfg.jMin = 1;
  cfg.jMax = 5;
  cfg.oracle.reduction = Reduction::Axisymmetric2D;
  cfg.oracle.axis = e;
  cfg.oracle.cells = 24;
  auto rep = wiener_terms(K, origin(3), cfg);
  CHECK(rep.terms.front().missing);
  CHECK(rep.verdict == WienerVerdict::Inconclusive);
  CHECK(!rep.flags.empty());
}

TEST_CASE("wiener preconditions") {
  CompactSetSpec K(3, {Ball{origin(3), 0.25}}, 0.25);
  WienerConfig cfg = radial_cfg(32);
  CHECK_THROWS_AS(wiener_terms(K, Vec::Constant(3, 1.0), cfg), InputError);
  cfg.jMax = 11;
  CHECK_THROWS_AS(wiener_terms(K, origin(3), cfg), InputError);
}

TEST_CASE("verdict rules") {
  WienerConfig cfg;
  auto make = [](std::vector<double> v) {
    std::vector<WienerTerm> t;
    for (size_t i = 0; i < v.size(); ++i) {
      WienerTerm w;
      w.j = int(i) + 1;
      w.term = v[i];
      t.push_back(w);
    }
    return t;
  };
  CHECK(wiener_verdict(make({1, 1, 1, 1, 1}), cfg) == WienerVerdict::DivergesNumerically);
  CHECK(wiener_verdict(make({0, 0, 0, 0, 0}), cfg) == WienerVerdict::ConvergesNumerically);
  double fit = 0;
  CHECK(wiener_verdict(make({0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625}), cfg, &fit) == WienerVerdict::ConvergesNumerically);
  CHECK(fit == doctest::Approx(0.5));
  // oscillating: neither
  CHECK(wiener_verdict(make({0.02, 0.005, 0.02, 0.005, 0.02}), cfg) == WienerVerdict::Inconclusive);
  auto gap = make({1, 1, 1, 1, 1});
  gap[2].missing = true;
  CHECK(wiener_verdict(gap, cfg) == WienerVerdict::Inconclusive);
  CHECK(wiener_verdict(make({1, 1, 1}), cfg) == WienerVerdict::Inconclusive);
}

TEST_CASE("catalog classification") {
  CatalogShape s;
  s.n = 3;
  s.k = 1;
  CHECK(classify_catalog(s).verdict == MetricVerdict::MetricExists);
  s.k = 0;
  CHECK(classify_catalog(s).verdict == MetricVerdict::NoMetric);
  s.n = 5;
  s.k = 1;
  CHECK(classify_catalog(s).verdict == MetricVerdict::NoMetric);
  s.k = 2;
  CHECK(classify_catalog(s).verdict == MetricVerdict::MetricExists);
  s.k = 5;
  CHECK_THROWS_AS(classify_catalog(s), InputError);

  CatalogShape dens;
  dens.kind = CatalogShape::Kind::DensitySet;
  dens.n = 4;
  dens.d = 1.3;
  dens.C = 0.5;
  dens.validityRange = 0.1;
  CHECK(classify_catalog(dens).verdict == MetricVerdict::MetricExists);
  dens.d = 1.0;
  CHECK(classify_catalog(dens).verdict == MetricVerdict::Inconclusive);
  dens.C = 0;
  CHECK_THROWS_AS(classify_catalog(dens), InputError);

  CatalogShape fm;
  fm.kind = CatalogShape::Kind::FiniteMeasureSet;
  fm.n = 4;
  CHECK(classify_catalog(fm).verdict == MetricVerdict::NoMetric);

  CHECK(classify_catalog(cusp(3, 1, 2)).verdict == MetricVerdict::MetricExists);
  CHECK(classify_catalog(cusp(4, 1, 2)).verdict == MetricVerdict::MetricExists);
  CHECK(classify_catalog(cusp(5, 1, 2)).verdict == MetricVerdict::NoMetric);
  // n = 5, h = r log^b(1/r): exponent b/3 against -1
  CHECK(classify_catalog(cusp(5, 0.5, 1, -2)).verdict == MetricVerdict::MetricExists);
  CHECK(classify_catalog(cusp(5, 0.5, 1, -3)).verdict == MetricVerdict::MetricExists);
  CHECK(classify_catalog(cusp(5, 0.5, 1, -4)).verdict == MetricVerdict::NoMetric);
  CHECK(classify_catalog(cusp(4, 0.5, 1)).verdict == MetricVerdict::MetricExists);
  CHECK_THROWS_AS(classify_catalog(cusp(4, 1, 1)), InputError);
  CHECK_THROWS_AS(classify_catalog(cusp(5, 1, 0.5)), InputError);
  CHECK(!classify_catalog(cusp(5, 1, 2)).criterion.empty());
}

TEST_CASE("exponentially thin cusps go through quadrature") {
  // n = 4: log(r/h) ~ r^{-b}, the integral of r^{b-1} converges
  CHECK(classify_catalog(exp_cusp(4, 1, 0.5)).verdict == MetricVerdict::NoMetric);
  // n = 5: (h/r)^{1/3} = exp(-r^{-b}/3) decays, converges
  CHECK(classify_catalog(exp_cusp(5, 1, 0.5)).verdict == MetricVerdict::NoMetric);
  CHECK(classify_catalog(exp_cusp(3, 1, 0.5)).verdict == MetricVerdict::MetricExists);
}

TEST_CASE("dyadic bridge") {
  std::vector<double> one(12, 1.0);
  auto b = dyadic_bridge(one, 1.0, 0, Monotone::NonIncreasing);
  CHECK(!b.divergent);
  CHECK(b.lowerSum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b.upperSum == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(b.integralEstimate == doctest::Approx(1.0).epsilon(0.05));
  CHECK(b.lowerConstant == doctest::Approx(1.0).epsilon(0.05));

  // zeta(r) = r, kappa = 0
  std::vector<double> lin;
  for (int j = 2; j < 14; ++j) lin.push_back(dyadic(j));
  auto c = dyadic_bridge(lin, 0.0, 2, Monotone::NonIncreasing);
  CHECK(!c.divergent);
  CHECK(c.integralEstimate == doctest::Approx(0.25).epsilon(0.05));
  CHECK(c.lowerSum <= c.integralEstimate * 1.05);
  CHECK(c.upperSum >= c.integralEstimate);
  CHECK(c.upperConstant <= 2.1);

  auto d = dyadic_bridge(one, 0.0, 0, Monotone::NonDecreasing);
  CHECK(d.divergent);
  CHECK(d.partialSums.back() == doctest::Approx(12.0));

  std::vector<double> bad{1, 0.5, 0.7, 0.2};
  try {
    dyadic_bridge(bad, 1.0, 0, Monotone::NonIncreasing);
    FAIL("accepted a non-monotone sequence");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("index 2") != std::string::npos);
  }
}

TEST_CASE("wiener runs are deterministic across thread counts") {
  CompactSetSpec K(3, {Ball{origin(3), 0.25}, Ball{Vec::Unit(3, 0) * 0.3, 0.1}}, 0.45);
  WienerConfig cfg;
  cfg.jMax = 5;
  cfg.oracle.reduction = Reduction::Axisymmetric2D;
  cfg.oracle.axis = Vec::Unit(3, 0);
  cfg.oracle.cells = 24;
  set_threads(1);
  auto a = wiener_terms(K, origin(3), cfg);
  set_threads(3);
  auto b = wiener_terms(K, origin(3), cfg);
  set_threads(1);
  REQUIRE(a.terms.size() == b.terms.size());
  for (size_t i = 0; i < a.terms.size(); ++i) CHECK(a.terms[i].term == b.terms[i].term);
}
