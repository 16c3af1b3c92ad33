#include "yamabe/wiener.hpp"
#include "yamabe/parallel.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace yamabe {

const char* to_string(WienerVerdict v) {
  switch (v) {
    case WienerVerdict::DivergesNumerically: return "DivergesNumerically";
    case WienerVerdict::ConvergesNumerically: return "ConvergesNumerically";
    case WienerVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

const char* to_string(ThinVerdict v) { return v == ThinVerdict::NotThin ? "NotThin" : "Thin"; }

const char* to_string(MetricVerdict v) {
  switch (v) {
    case MetricVerdict::MetricExists: return "MetricExists";
    case MetricVerdict::NoMetric: return "NoMetric";
    case MetricVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// integral over t = log(1/r) in [1, 600] in doubling pieces; decides convergence of the tail
MetricVerdict numeric_tail(const std::function<double(double)>& f, std::string& why) {
  std::vector<double> T{1.0};
  while (T.back() < 600) T.push_back(std::min(600.0, T.back() * 2));
  std::vector<double> inc;
  double total = 0;
  for (size_t k = 1; k < T.size(); ++k) {
    // composite Simpson, 2000 panels
    const int m = 2000;
    double a = T[k - 1], b = T[k], hh = (b - a) / m, s = f(a) + f(b);
    for (int i = 1; i < m; ++i) s += f(a + i * hh) * (i % 2 ? 4 : 2);
    double v = s * hh / 3;
    if (!std::isfinite(v) || v < 0) {
      why = "integrand not finite and positive on the tail";
      return MetricVerdict::Inconclusive;
    }
    inc.push_back(v);
    total += v;
  }
  const size_t K = inc.size();
  double r1 = inc[K - 3] > 0 ? inc[K - 2] / inc[K - 3] : 0, r2 = inc[K - 2] > 0 ? inc[K - 1] / inc[K - 2] : 0;
  if (r1 <= 0.7 && r2 <= 0.7) {
    double tail = r2 < 1 ? inc[K - 1] * r2 / (1 - r2) : std::numeric_limits<double>::infinity();
    if (tail <= 1e-3 * std::max(total, 1e-300) || inc[K - 1] == 0) {
      why = "tail integral converges (extrapolated remainder " + fmt(tail) + ")";
      return MetricVerdict::NoMetric;
    }
  }
  if (r1 >= 0.97 && r2 >= 0.97) {
    why = "tail integral does not decay over doubling intervals (ratio " + fmt(r2) + ")";
    return MetricVerdict::MetricExists;
  }
  why = "extrapolation of the tail integral is unstable (ratios " + fmt(r1) + ", " + fmt(r2) + ")";
  return MetricVerdict::Inconclusive;
}

Classification classify_cusp(const CatalogShape& s) {
  const int n = s.n;
  const CuspProfile& h = s.profile;
  if (n == 3) return {MetricVerdict::MetricExists, "n = 3: every cusp admits the metric"};
  if (h.kind == CuspProfile::Kind::PowerLog) {
    const double a = h.a, b = h.b, c = h.c;
    if (!(c > 0)) throw InputError("cusp profile: c must be positive");
    bool linear = same(a, 1.0);
    if (a < 1 && !linear) throw InputError("cusp profile: h(r) = O(r) needs a >= 1");
    if (linear && b > 0 && !same(b, 0.0)) throw InputError("cusp profile: h(r) = O(r) needs b <= 0 when a = 1");
    if (n == 4) {
      if (!linear) return {MetricVerdict::MetricExists, "n = 4, a > 1: log(r/h) ~ (a-1) log(1/r), the integral of dr/(r log(r/h)) diverges"};
      if (!same(b, 0.0)) return {MetricVerdict::MetricExists, "n = 4, a = 1, b < 0: log(r/h) ~ |b| log log(1/r), the integral diverges"};
      if (!(c < 1)) throw InputError("cusp profile: h(r) = c r needs c < 1 for log(r/h) > 0");
      return {MetricVerdict::MetricExists, "n = 4, h = c r: log(r/h) is constant, the integral diverges"};
    }
    const double g = double(n - 4) / (n - 2);
    if (!linear) return {MetricVerdict::NoMetric, "n = " + std::to_string(n) + ", a > 1: (h/r)^" + fmt(g) + " ~ r^" + fmt((a - 1) * g) + ", the integral converges"};
    if (b * g >= -1 - 1e-12)
      return {MetricVerdict::MetricExists, "n = " + std::to_string(n) + ", a = 1: integrand ~ log^" + fmt(b * g) + "(1/r) dr/r with exponent >= -1, diverges"};
    return {MetricVerdict::NoMetric, "n = " + std::to_string(n) + ", a = 1: integrand ~ log^" + fmt(b * g) + "(1/r) dr/r with exponent < -1, converges"};
  }
  // outside the recognised family: quadrature in t = log(1/r)
  std::function<double(double)> f;
  if (n == 4) {
    f = [&h](double t) {
      double r = std::exp(-t), v = h(r);
      if (v <= 0) return 0.0;  // h underflowed: log(r/h) is infinite
      double L = std::log(r / v);
      return L > 0 ? 1.0 / L : std::numeric_limits<double>::quiet_NaN();
    };
  } else {
    const double g = double(n - 4) / (n - 2);
    f = [&h, g](double t) {
      double r = std::exp(-t);
      return std::pow(h(r) / r, g);
    };
  }
  std::string why;
  MetricVerdict v = numeric_tail(f, why);
  return {v, "n = " + std::to_string(n) + ", numeric: " + why};
}

WienerTerm missing_term(int j, double r, std::string note) {
  WienerTerm t;
  t.j = j;
  t.r = r;
  t.missing = true;
  t.note = std::move(note);
  return t;
}

}  // namespace

Classification classify_catalog(const CatalogShape& s) {
  check_dimension(s.n);
  const double crit = 0.5 * (s.n - 2);
  switch (s.kind) {
    case CatalogShape::Kind::Submanifold:
      if (s.k < 0 || s.k >= s.n) throw InputError("submanifold dimension must be in [0, n)");
      if (s.k > crit) return {MetricVerdict::MetricExists, "k = " + std::to_string(s.k) + " > (n-2)/2 = " + fmt(crit)};
      // k <= (n-2)/2: a compact piece has finite H^{(n-2)/2}, so its capacity vanishes
      return {MetricVerdict::NoMetric, "k = " + std::to_string(s.k) + " <= (n-2)/2 = " + fmt(crit) + ": finite (n-2)/2-measure"};
    case CatalogShape::Kind::DensitySet:
      if (!(s.C > 0)) throw InputError("density constant C must be positive");
      if (!(s.validityRange > 0)) throw InputError("density validity range must be positive");
      if (s.d > crit) return {MetricVerdict::MetricExists, "density exponent d = " + fmt(s.d) + " > (n-2)/2 = " + fmt(crit)};
      return {MetricVerdict::Inconclusive, "density exponent d = " + fmt(s.d) + " does not exceed (n-2)/2; the criterion is silent"};
    case CatalogShape::Kind::FiniteMeasureSet:
      return {MetricVerdict::NoMetric, "finite (n-2)/2-dimensional Hausdorff measure forces zero capacity"};
    case CatalogShape::Kind::Cusp:
      return classify_cusp(s);
  }
  return {};
}

ScaleRatio capacity_ratio_at_scale(const CompactSetSpec& spec, const Vec& p, double r, const ScaleOracle& o,
                                   std::optional<double> reference) {
  const int n = spec.dimension();
  if (!(r > 0)) throw InputError("scale must be positive");
  ScaleRatio out;
  if (o.kind == ScaleOracle::Kind::Catalog) {
    // ball inside K, points only, straight tube or cusp with p on the axis / at the apex
    if (spec.signed_distance(p) <= -r) {
      out.ratio = 1.0;
      out.note = "B(p, r) inside K";
      return out;
    }
    bool allPoints = true;
    for (const auto& prim : spec.primitives())
      if (signed_distance(prim, p) <= r && !is_point(prim)) allPoints = false;
    if (allPoints) {
      out.ratio = 0.0;
      out.note = "only points meet B(p, r)";
      return out;
    }
    for (const auto& prim : spec.primitives()) {
      double delta = -1;
      if (auto* t = std::get_if<SegmentTube>(&prim)) {
        Vec ab = t->b - t->a;
        double s = std::clamp((p - t->a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        bool onAxis = (t->a + s * ab - p).norm() <= 1e-12 * std::max(1.0, ab.norm());
        double reach = std::max(s, 1 - s) * ab.norm();
        if (onAxis && reach >= r) delta = t->thickness;
      } else if (auto* c = std::get_if<Cusp>(&prim)) {
        if ((c->apex - p).norm() <= 1e-12 && c->height >= r) delta = c->profile(0.5 * r);
      }
      if (delta <= 0) continue;
      if (4 * delta >= r) {
        out.note = "tube is not thin at this scale (4 delta >= r)";
        return out;
      }
      out.ratio = closed_form_capacity({ClosedFormShape::Kind::Cylinder, n, r, delta});
      out.note = "cylinder of width " + fmt(delta);
      return out;
    }
    out.note = "no closed form for this set";
    return out;
  }

  GridSpec grid = oracle_grid(n, o);
  double cb = 0;
  try {
    cb = reference ? *reference : reference_ball_capacity(n, o);
  } catch (const NumericalError& e) {
    out.note = e.what();
    return out;
  }
  CompactSetSpec local = localized(spec, p, r);
  if (local.empty()) {
    out.ratio = 0.0;
    out.note = "K does not meet B(p, r)";
    return out;
  }
  CapacityResult ck = estimate_capacity(local, grid, o.cap);
  if (!ck.converged) {
    out.note = "capacity solve did not converge";
    return out;
  }
  if (ck.coarseWarning) {
    out.note = "part of K ∩ B(p, r) is thinner than the mesh";
    return out;
  }
  out.ratio = ck.value / cb;
  return out;
}

GridSpec oracle_grid(int n, const ScaleOracle& o) {
  return GridSpec::capacity(n, o.reduction, o.cells, 2.25, Vec::Zero(n), o.axis);
}

double reference_ball_capacity(int n, const ScaleOracle& o) {
  CompactSetSpec ball(n, {Ball{Vec::Zero(n), 0.5}}, 0.5);
  CapacityResult cb = estimate_capacity(ball, oracle_grid(n, o), o.cap);
  if (!cb.converged || !(cb.value > 0)) throw NumericalError("reference ball capacity failed");
  return cb.value;
}

CompactSetSpec localized(const CompactSetSpec& spec, const Vec& p, double r) {
  const int n = spec.dimension();
  // keep the pieces that meet B(p, r), rescale by 1/(2r) about p
  std::vector<Primitive> kept;
  double R = 0.5;
  for (const auto& prim : spec.primitives())
    if (signed_distance(prim, p) <= r) {
      kept.push_back(transformed(prim, 0.5 / r, p));
      R = std::max(R, outer_radius(kept.back()));
    }
  if (kept.empty()) return CompactSetSpec(n, {}, 0.5);
  return CompactSetSpec(n, kept, R, CompactSetSpec::Clip{Vec::Zero(n), 0.5});
}

WienerVerdict wiener_verdict(const std::vector<WienerTerm>& terms, const WienerConfig& cfg, double* decayFit) {
  if (decayFit) *decayFit = 0;
  for (const auto& t : terms)
    if (t.missing) return WienerVerdict::Inconclusive;
  if (terms.size() < 5) return WienerVerdict::Inconclusive;
  const size_t K = terms.size();
  bool big = true, tiny = true, positive = true;
  for (size_t i = K - 5; i < K; ++i) {
    big &= terms[i].term > cfg.divergenceFloor;
    tiny &= terms[i].term < cfg.zeroFloor;
    positive &= terms[i].term > 0;
  }
  double fit = 0;
  if (positive) {
    // least squares slope of log term against j
    double sj = 0, sl = 0, sjj = 0, sjl = 0;
    for (size_t i = K - 5; i < K; ++i) {
      double j = terms[i].j, l = std::log(terms[i].term);
      sj += j;
      sl += l;
      sjj += j * j;
      sjl += j * l;
    }
    fit = std::exp((5 * sjl - sj * sl) / (5 * sjj - sj * sj));
  }
  if (decayFit) *decayFit = fit;
  if (tiny) return WienerVerdict::ConvergesNumerically;
  // geometric decay wins over the floor: 0.5^j stays above any floor for a while
  if (positive && fit < cfg.decayRatio) {
    bool decaying = true;
    for (size_t i = K - 4; i < K; ++i) decaying &= terms[i].term < terms[i - 1].term;
    if (decaying) return WienerVerdict::ConvergesNumerically;
  }
  if (big) return WienerVerdict::DivergesNumerically;
  return WienerVerdict::Inconclusive;
}

WienerReport wiener_terms(const CompactSetSpec& spec, const Vec& p, const WienerConfig& cfg, const std::optional<CatalogShape>& catalog) {
  const int n = spec.dimension();
  if (p.size() != n) throw InputError("base point has the wrong dimension");
  if (!spec.contains(p)) throw InputError("base point is not in K");
  if (cfg.jMax > 10) throw InputError("jMax must be at most 10");
  if (cfg.jMin < 0 || cfg.jMin > cfg.jMax) throw InputError("need 0 <= jMin <= jMax");
  const double e = 2.0 / (n - 2);

  WienerReport rep;
  rep.basePoint = p;
  rep.testedPoints = {p};
  const int J = cfg.jMax - cfg.jMin + 1;
  rep.terms.resize(J);
  // scales are independent; each writes its own slot
  std::optional<double> ref;
  if (cfg.oracle.kind == ScaleOracle::Kind::Variational) {
    try {
      ref = reference_ball_capacity(n, cfg.oracle);
    } catch (const NumericalError& e) {
      for (int i = 0; i < J; ++i) rep.terms[i] = missing_term(cfg.jMin + i, dyadic(cfg.jMin + i), e.what());
    }
  }
  auto work = [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i) {
      int j = cfg.jMin + int(i);
      double r = dyadic(j);
      try {
        if (cfg.oracle.kind == ScaleOracle::Kind::Variational && !ref) continue;
        ScaleRatio s = capacity_ratio_at_scale(spec, p, r, cfg.oracle, ref);
        if (!s.ratio) {
          rep.terms[i] = missing_term(j, r, s.note);
          continue;
        }
        WienerTerm t;
        t.j = j;
        t.r = r;
        t.capRatio = *s.ratio;
        t.term = std::pow(std::max(0.0, *s.ratio), e);
        t.note = s.note;
        rep.terms[i] = t;
      } catch (const std::exception& ex) {
        rep.terms[i] = missing_term(j, r, ex.what());
      }
    }
  };
  {
    // one scale per worker
    const int T = std::min(thread_cap(), J);
    std::vector<std::thread> pool;
    for (int t = 1; t < T; ++t)
      pool.emplace_back([&, t] {
        for (long i = t; i < J; i += T) work(i, i + 1);
      });
    for (long i = 0; i < J; i += std::max(T, 1)) work(i, i + 1);
    for (auto& th : pool) th.join();
  }

  double S = 0;
  for (const auto& t : rep.terms) {
    if (!t.missing) S += t.term;
    rep.partialSums.push_back(S);
    if (t.missing) rep.flags.push_back("term j = " + std::to_string(t.j) + " missing: " + t.note);
    else if (t.capRatio > 1 + cfg.ratioSlack) rep.flags.push_back("term j = " + std::to_string(t.j) + " exceeds 1 beyond the mesh tolerance");
  }
  if (J >= 5) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = J - 5; i < J; ++i) {
      if (!(rep.partialSums[i] > 0)) continue;
      double x = std::log(double(std::max(1, rep.terms[i].j))), y = std::log(rep.partialSums[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++m;
    }
    if (m >= 2 && m * sxx - sx * sx > 0) rep.tailSlope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  rep.verdict = wiener_verdict(rep.terms, cfg, &rep.decayFit);
  if (catalog) {
    Classification c = classify_catalog(*catalog);
    if (c.verdict == MetricVerdict::MetricExists) rep.catalogVerdict = ThinVerdict::NotThin;
    if (c.verdict == MetricVerdict::NoMetric) rep.catalogVerdict = ThinVerdict::Thin;
    if (rep.catalogVerdict && rep.verdict != WienerVerdict::Inconclusive &&
        (rep.verdict == WienerVerdict::DivergesNumerically) != (*rep.catalogVerdict == ThinVerdict::NotThin))
      rep.flags.push_back("numeric verdict disagrees with the catalog verdict");
  }
  return rep;
}

BridgeResult dyadic_bridge(const std::vector<double>& zeta, double kappa, int J, Monotone declared) {
  if (zeta.size() < 2) throw InputError("dyadic_bridge needs at least two samples");
  for (size_t i = 0; i < zeta.size(); ++i)
    if (!std::isfinite(zeta[i]) || zeta[i] < 0) throw InputError("zeta sample " + std::to_string(i) + " must be finite and nonnegative");
  for (size_t i = 1; i < zeta.size(); ++i) {
    bool ok = declared == Monotone::NonIncreasing ? zeta[i] <= zeta[i - 1] : zeta[i] >= zeta[i - 1];
    if (!ok) throw InputError("zeta is not monotone as declared: first violation at index " + std::to_string(i));
  }
  BridgeResult out;
  const size_t M = zeta.size();
  std::vector<double> term(M), r(M);
  for (size_t i = 0; i < M; ++i) {
    r[i] = dyadic(J + int(i));
    term[i] = zeta[i] * std::pow(r[i], kappa);
  }
  double S = 0;
  for (double t : term) out.partialSums.push_back(S += t);
  // trapezoid in r of zeta r^{kappa-1} on the dyadic points
  double I = 0;
  for (size_t i = 0; i + 1 < M; ++i) {
    double f0 = term[i] / r[i], f1 = term[i + 1] / r[i + 1];
    I += 0.5 * (f0 + f1) * (r[i] - r[i + 1]);
  }
  double upper = S, lower = S - term[0];
  // tail beyond the last sample: geometric in j when the terms decay
  double rho = 0;
  if (M >= 3 && term[M - 2] > 0 && term[M - 3] > 0) {
    double a = term[M - 1] / term[M - 2], b = term[M - 2] / term[M - 3];
    rho = std::max(a, b);
  } else if (term[M - 1] == 0) {
    rho = 0;
  } else {
    rho = 1;
  }
  out.tailRatio = rho;
  if (rho < 1 - 1e-9) {
    double tail = term[M - 1] * rho / (1 - rho);
    upper += tail;
    lower += tail;
    // int_0^{r_last} C r^{s-1} dr = term_last / s with 2^{-s} = rho
    if (term[M - 1] > 0) I += term[M - 1] / (-std::log2(rho));
  } else {
    out.divergent = true;
  }
  out.lowerSum = lower;
  out.upperSum = upper;
  out.integralEstimate = I;
  if (lower > 0) out.lowerConstant = I / lower;
  if (I > 0) out.upperConstant = upper / I;
  return out;
}

}  // namespace yamabe
