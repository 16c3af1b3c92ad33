#include "yamabe/metriclen.hpp"
#include "yamabe/parallel.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace yamabe {

const char* to_string(CompletenessVerdict v) {
  switch (v) {
    case CompletenessVerdict::CompleteTrend: return "CompleteTrend";
    case CompletenessVerdict::IncompleteTrend: return "IncompleteTrend";
    case CompletenessVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

namespace {

// shell index of a distance below 1: r_j < d <= r_{j-1}
int shell_of(double d) { return int(std::floor(std::log2(1.0 / d))) + 1; }

bool nondecreasing_tail(const std::vector<double>& c, double slack) {
  if (c.size() < 5) return false;
  for (size_t i = c.size() - 5; i < c.size(); ++i) {
    if (!(c[i] > 0)) return false;
    if (i > c.size() - 5 && c[i] < (1 - slack) * c[i - 1]) return false;
  }
  return true;
}

long cell_of(const GridSpec& g, const Vec& x) {
  Eigen::VectorXd y = g.to_grid(x);
  int ijk[8];
  for (int a = 0; a < g.axes(); ++a) {
    double f = (y(a) - g.lo[a]) / g.h;
    if (f < 0 || f >= g.cells[a]) return -1;
    ijk[a] = int(f);
  }
  return g.index(ijk);
}

// one segment, so the integration may stop where the ray enters K
Curve ray_curve(const Vec& p, const Vec& w, double L) { return Curve({p + L * w, p}, p); }

GridSpec refined(const GridSpec& g) {
  GridSpec f = g;
  f.h = 0.5 * g.h;
  for (auto& c : f.cells) c *= 2;
  return f;
}

double e_of(int n) { return 2.0 / (n - 2); }

struct RayHits {
  bool k = false, sigma = false;
};

// march from p outwards past the mesh-scale ball s < s0
RayHits ray_hits(const CompactSetSpec& spec, const SolutionField& u, const Vec& p, const Vec& w, double s0, double L,
                 double step, const Mask* sigma) {
  const GridSpec& g = u.u.grid;
  RayHits out;
  for (double s = s0; s <= L; s += step) {
    Vec x = p + s * w;
    long c = cell_of(g, x);
    bool inK = spec.contains(x) || (c >= 0 && u.role[c] == CellRole::Excluded);
    if (inK) {
      out.k = true;
      break;
    }
    if (sigma && c >= 0 && (*sigma)[c]) out.sigma = true;
  }
  return out;
}

}  // namespace

LengthReport conformal_length(const FieldEval& u, int n, const Curve& curve, const LengthConfig& cfg) {
  check_dimension(n);
  if (int(curve.closedEnd.size()) != n) throw InputError("curve dimension does not match the field");
  std::vector<Vec> v = curve.samples;
  if ((v.back() - curve.closedEnd).norm() > 0) v.push_back(curve.closedEnd);
  const Vec& p = curve.closedEnd;
  const double e = e_of(n);
  const double rDeep = dyadic(cfg.maxDepth);

  LengthReport out;
  std::map<int, double> shells;
  if (!u(v[0])) throw InputError("curve leaves the defined region at sample 0");
  int jStop = cfg.maxDepth + 1;
  bool stopped = false;
  for (size_t k = 0; k + 1 < v.size() && !stopped; ++k) {
    const bool last = k + 2 == v.size();
    if (!last && !u(v[k + 1])) throw InputError("curve leaves the defined region at sample " + std::to_string(k + 1));
    const Vec a = v[k], d = v[k + 1] - v[k];
    const double len = d.norm();
    // cut where the segment crosses a shell sphere
    std::vector<double> cuts{0.0, 1.0};
    const Vec w = a - p;
    const double A = d.squaredNorm(), B = w.dot(d), C0 = w.squaredNorm();
    for (int j = 0; j <= cfg.maxDepth; ++j) {
      double r = dyadic(j), disc = B * B - A * (C0 - r * r);
      if (disc < 0) continue;
      double s = std::sqrt(disc);
      for (double t : {(-B - s) / A, (-B + s) / A})
        if (t > 0 && t < 1) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    for (size_t c = 0; c + 1 < cuts.size() && !stopped; ++c) {
      double t0 = cuts[c], t1 = cuts[c + 1];
      if (t1 - t0 <= 0) continue;
      double dm = (a + 0.5 * (t0 + t1) * d - p).norm();
      int j = dm >= 1 ? 0 : shell_of(dm);
      if (dm < rDeep) {
        stopped = true;
        out.stoppedAt = dm;
        jStop = std::min(jStop, cfg.maxDepth + 1);
        break;
      }
      double plen = (t1 - t0) * len;
      int m = cfg.samplesPerPiece;
      if (cfg.maxStep > 0) m = std::max<long>(m, long(std::ceil(plen / cfg.maxStep)));
      double acc = 0;
      for (int i = 0; i < m; ++i) {
        Vec x = a + (t0 + (i + 0.5) / m * (t1 - t0)) * d;
        auto val = u(x);
        if (!val) {
          if (!last) throw InputError("curve leaves the defined region between samples " + std::to_string(k) + " and " + std::to_string(k + 1));
          stopped = true;
          double ds = (x - p).norm();
          out.stoppedAt = ds;
          jStop = ds >= 1 ? 0 : shell_of(ds);
          break;
        }
        acc += std::pow(std::max(0.0, *val), e) * plen / m;
      }
      if (j == 0) out.outside += acc;
      else shells[j] += acc;
    }
  }
  std::vector<double> complete;
  for (int j = 1; j < jStop; ++j) {
    auto it = shells.find(j);
    if (it == shells.end() || dyadic(j) < cfg.resolvedRadius) break;
    complete.push_back(it->second);
  }
  out.completeShells = int(complete.size());
  out.totalLength = out.outside;
  for (const auto& [j, c] : shells) {
    out.perShell.emplace_back(j, c);
    out.totalLength += c;
  }
  out.divergent = nondecreasing_tail(complete, cfg.growthSlack);
  return out;
}

LengthReport conformal_length(const ScalarField& u, const Curve& curve, LengthConfig cfg) {
  if (cfg.maxStep <= 0) cfg.maxStep = 0.25 * u.grid.h;
  if (cfg.resolvedRadius <= 0) cfg.resolvedRadius = 2 * u.grid.h;
  return conformal_length([&u](const Vec& x) { return u.sample(x); }, u.grid.dimension, curve, cfg);
}

LengthReport conformal_length(const SolutionField& s, const Curve& curve, const LengthConfig& cfg) {
  return conformal_length(s.u, curve, cfg);
}

LengthReport length_trend(const std::vector<const SolutionField*>& fields, const Curve& curve, const LengthConfig& cfg) {
  if (fields.empty()) throw InputError("length_trend needs at least one field");
  LengthReport out;
  std::vector<double> trend;
  for (const auto* f : fields) {
    out = conformal_length(*f, curve, cfg);
    trend.push_back(out.totalLength);
  }
  out.refinementTrend = trend;
  return out;
}

ShellBoundSeries shell_lower_bound(const CompactSetSpec& spec, const Vec& p, int jMin, int jMax, const ScaleOracle& oracle) {
  if (!spec.contains(p)) throw InputError("base point is not in K");
  if (jMin < 0 || jMin > jMax || jMax + 2 > 12) throw InputError("need 0 <= jMin <= jMax <= 10");
  const int n = spec.dimension();
  ShellBoundSeries out;
  std::optional<double> ref;
  std::string refError;
  if (oracle.kind == ScaleOracle::Kind::Variational) {
    try {
      ref = reference_ball_capacity(n, oracle);
    } catch (const NumericalError& e) {
      refError = e.what();
    }
  }
  std::vector<WienerTerm> wt;
  double S = 0;
  for (int j = jMin; j <= jMax; ++j) {
    ShellBound b;
    b.j = j;
    b.r = dyadic(j);
    ScaleRatio s;
    if (oracle.kind == ScaleOracle::Kind::Variational && !ref) s.note = refError;
    else s = capacity_ratio_at_scale(spec, p, dyadic(j + 2), oracle, ref);
    b.note = s.note;
    if (s.ratio) b.b = 0.25 * std::pow(std::max(0.0, *s.ratio), e_of(n));
    else b.missing = true;
    S += b.b;
    out.partialSums.push_back(S);
    WienerTerm t;
    t.j = j;
    t.r = b.r;
    t.term = b.b;
    t.missing = b.missing;
    wt.push_back(t);
    out.terms.push_back(b);
  }
  WienerConfig wc;
  wc.divergenceFloor = 0.25 * wc.divergenceFloor;  // b_j carries the factor r_{j+2}/r_j
  out.trend = wiener_verdict(wt, wc);
  return out;
}

std::vector<ShellCutoff> shell_cutoffs(const CompactSetSpec& spec, const Vec& p, const ProbeConfig& cfg) {
  const int n = spec.dimension();
  const double m = cfg.m > 0 ? cfg.m : 0.5 * (n + 2);
  std::vector<ShellCutoff> out;
  std::optional<double> ref;
  std::string refError;
  try {
    ref = reference_ball_capacity(n, cfg.oracle);
  } catch (const NumericalError& e) {
    refError = e.what();
  }
  GridSpec grid = oracle_grid(n, cfg.oracle);
  for (int j = cfg.J; j <= cfg.jMax; ++j) {
    ShellCutoff s;
    s.j = j;
    if (!ref) {
      s.note = refError;
      out.push_back(std::move(s));
      continue;
    }
    CompactSetSpec local = localized(spec, p, dyadic(j));
    if (local.empty()) {
      s.ratio = 0.0;
      s.note = "K misses the ball";
      out.push_back(std::move(s));
      continue;
    }
    CapacityResult cap = estimate_capacity(local, grid, cfg.oracle.cap);
    if (!cap.converged) s.note = "capacity solve did not converge";
    else if (cap.coarseWarning) s.note = "part of K is thinner than the mesh at this scale";
    else {
      try {
        s.cutoff = cutoff_from_extremal(cap, m);
        s.ratio = cap.value / *ref;
      } catch (const std::exception& e) {
        s.note = e.what();
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Vec> probe_directions(int n, long count, std::optional<std::uint64_t> seed) {
  check_dimension(n);
  if (count < 1) throw InputError("need at least one direction");
  std::vector<Vec> dirs;
  dirs.reserve(count);
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::normal_distribution<double> N;
    for (long i = 0; i < count; ++i) {
      Vec w(n);
      for (int a = 0; a < n; ++a) w(a) = N(rng);
      dirs.push_back(w.normalized());
    }
    return dirs;
  }
  if (n == 3) {
    // Fibonacci lattice
    const double golden = M_PI * (3 - std::sqrt(5.0));
    for (long i = 0; i < count; ++i) {
      double z = 1 - (2.0 * i + 1) / count, s = std::sqrt(std::max(0.0, 1 - z * z)), ph = golden * i;
      Vec w(3);
      w << s * std::cos(ph), s * std::sin(ph), z;
      dirs.push_back(w);
    }
    return dirs;
  }
  // Halton points pushed through Box-Muller
  static const int primes[] = {2, 3, 5, 7, 11, 13};
  const int pairs = (n + 1) / 2;
  auto halton = [](long i, int b) {
    double f = 1, r = 0;
    while (i > 0) {
      f /= b;
      r += f * (i % b);
      i /= b;
    }
    return r;
  };
  for (long i = 0; i < count; ++i) {
    Vec w(2 * pairs);
    for (int k = 0; k < pairs; ++k) {
      double u1 = halton(i + 1, primes[2 * k]), u2 = halton(i + 1, primes[2 * k + 1]);
      double rad = std::sqrt(-2 * std::log(u1));
      w(2 * k) = rad * std::cos(2 * M_PI * u2);
      w(2 * k + 1) = rad * std::sin(2 * M_PI * u2);
    }
    dirs.push_back(w.head(n).normalized());
  }
  return dirs;
}

RadialProbe build_radial_probe(const CompactSetSpec& spec, const Vec& p, const std::vector<ShellCutoff>& cutoffs,
                               const SolutionField& u, const ProbeConfig& cfg) {
  const GridSpec& g = u.u.grid;
  const int n = g.dimension;
  if (p.size() != n) throw InputError("base point has the wrong dimension");
  if (!(cfg.rayLength > 0) || cfg.rayLength >= u.outerRadius - (p - (u.domainCenter.size() ? u.domainCenter : Vec(Vec::Zero(n)))).norm())
    throw InputError("rays must stay inside the solution domain");
  RadialProbe out;
  out.p = p;
  std::map<int, const ShellCutoff*> byJ;
  for (const auto& c : cutoffs) byJ[c.j] = &c;
  for (int j = cfg.J; j <= cfg.jMax; ++j) {
    auto it = byJ.find(j);
    if (it == byJ.end() || (!it->second->cutoff && !(it->second->ratio && *it->second->ratio == 0))) out.missingShells.push_back(j);
  }
  if (!out.missingShells.empty()) out.flags.push_back(std::to_string(out.missingShells.size()) + " shells without a cutoff; treated as inside sigma");

  // sigma: K inside B(p, r_J) and {phi_j >= level} on the shells
  const double rJ = dyadic(cfg.J);
  out.sigmaMask.assign(g.size(), 0);
  parallel_blocks(g.size(), [&](long lo, long hi) {
    for (long c = lo; c < hi; ++c) {
      Vec x = g.physical_center(c);
      double d = (x - p).norm();
      if (d > rJ) continue;
      if (u.role[c] == CellRole::Excluded) {
        out.sigmaMask[c] = 1;
        continue;
      }
      int j = d > 0 ? int(std::floor(std::log2(1.0 / d))) : cfg.jMax;
      j = std::clamp(j, cfg.J, cfg.jMax);
      auto it = byJ.find(j);
      if (it == byJ.end()) {
        out.sigmaMask[c] = 1;
        continue;
      }
      const ShellCutoff& s = *it->second;
      if (!s.cutoff) {
        if (!(s.ratio && *s.ratio == 0)) out.sigmaMask[c] = 1;
        continue;
      }
      auto ph = s.cutoff->phi.sample((x - p) / (2 * dyadic(j)));
      if (ph && *ph >= cfg.level) out.sigmaMask[c] = 1;
    }
  });

  out.directions = probe_directions(n, cfg.directions, cfg.seed);
  const long D = long(out.directions.size());
  // the mesh-scale ball around p is not checked: its cell is in K whenever p is resolved
  const double s0 = std::max(dyadic(cfg.jMax + 1), 1.5 * g.h), step = 0.5 * g.h;
  std::vector<std::uint8_t> hitsK(D, 0), hitsSigma(D, 0);
  std::vector<double> len(D, 0);
  std::vector<std::uint8_t> div(D, 0);
  LengthConfig lc = cfg.length;
  if (lc.maxStep <= 0) lc.maxStep = 0.25 * g.h;
  parallel_blocks(D, [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i) {
      const Vec& w = out.directions[i];
      RayHits rh = ray_hits(spec, u, p, w, s0, cfg.rayLength, step, &out.sigmaMask);
      hitsK[i] = rh.k;
      hitsSigma[i] = rh.sigma;
      if (hitsK[i]) continue;
      LengthReport r = conformal_length(u.u, ray_curve(p, w, cfg.rayLength), lc);
      len[i] = r.totalLength;
      div[i] = r.divergent;
    }
  });
  out.minAvoidingLength = std::numeric_limits<double>::infinity();
  out.lengths.assign(D, -1.0);
  out.divergentRay = div;
  for (long i = 0; i < D; ++i) {
    if (hitsK[i]) continue;
    out.lengths[i] = len[i];
    if (len[i] < out.minAvoidingLength) {
      out.minAvoidingLength = len[i];
      out.minAvoidingDivergent = div[i];
    }
    if (hitsSigma[i]) continue;
    out.xi.push_back(i);
    out.rays.push_back({i, len[i], bool(div[i])});
    if (!div[i] && (!out.chosen || len[i] < out.rayLength)) {
      out.chosen = i;
      out.rayLength = len[i];
    }
  }
  if (!std::isfinite(out.minAvoidingLength)) {
    out.minAvoidingLength = 0;
    out.flags.push_back("every sampled ray meets K");
  }
  if (out.xi.empty()) out.flags.push_back("no sampled direction avoids sigma");
  return out;
}

CompletenessReport completeness_probe(const CompactSetSpec& spec, const Vec& p, const CompletenessConfig& cfg) {
  if (!spec.contains(p)) throw InputError("base point is not in K");
  const int n = spec.dimension();
  const ProbeConfig& pc = cfg.probe;
  CompletenessReport rep;
  auto inconclusive = [&](std::string why) {
    rep.verdict = CompletenessVerdict::Inconclusive;
    rep.reasons.push_back(std::move(why));
    return rep;
  };

  GridSpec gc = cfg.grid, gf = refined(cfg.grid);
  SolutionField sc = maximal_solution(spec, gc, cfg.solve);
  SolutionField sf = maximal_solution(spec, gf, cfg.solve);
  for (const auto* s : {&sc, &sf})
    for (const auto& f : s->flags) rep.flags.push_back("maximal solution (h = " + std::to_string(s->u.grid.h) + "): " + f);

  // is K near p visible on the mesh? points are exact: their solution is zero
  bool pointsOnly = true;
  for (const auto& prim : spec.primitives())
    if (signed_distance(prim, p) <= 2 * gc.h && !is_point(prim)) pointsOnly = false;
  bool resolved = pointsOnly;
  for (const auto* s : {&sc, &sf}) {
    if (pointsOnly) break;
    double dmin = std::numeric_limits<double>::infinity();
    const GridSpec& g = s->u.grid;
    for (long c = 0; c < g.size(); ++c)
      if (s->role[c] == CellRole::Excluded) dmin = std::min(dmin, (g.physical_center(c) - p).norm());
    resolved = dmin <= 2 * g.h;
    if (!resolved) break;
  }

  auto cut = shell_cutoffs(spec, p, pc);
  if (pc.oracle.kind == ScaleOracle::Kind::Catalog) {
    rep.bound = shell_lower_bound(spec, p, pc.J - 2, pc.jMax - 2, pc.oracle);
  } else {
    std::vector<WienerTerm> wt;
    double S = 0;
    for (const auto& c : cut) {
      ShellBound b;
      b.j = c.j - 2;
      b.r = dyadic(b.j);
      b.note = c.note;
      if (c.ratio) b.b = 0.25 * std::pow(std::max(0.0, *c.ratio), e_of(n));
      else b.missing = true;
      S += b.b;
      rep.bound.partialSums.push_back(S);
      rep.bound.terms.push_back(b);
      WienerTerm t;
      t.j = b.j;
      t.r = b.r;
      t.term = b.b;
      t.missing = b.missing;
      wt.push_back(t);
    }
    WienerConfig wc;
    wc.divergenceFloor *= 0.25;
    rep.bound.trend = wiener_verdict(wt, wc);
  }

  rep.coarse = build_radial_probe(spec, p, cut, sc, pc);
  rep.fine = build_radial_probe(spec, p, cut, sf, pc);
  for (const auto& f : rep.coarse.flags) rep.flags.push_back("coarse probe: " + f);
  for (const auto& f : rep.fine.flags) rep.flags.push_back("fine probe: " + f);

  LengthConfig lc = pc.length;
  const long D = long(rep.fine.directions.size());
  // direct ray against the shell bound, over the shells both cover
  {
    long best = -1;
    for (long i = 0; i < D; ++i)
      if (rep.fine.lengths[i] >= 0 && (best < 0 || rep.fine.lengths[i] < rep.fine.lengths[best])) best = i;
    if (best >= 0) {
      LengthReport L = conformal_length(sf, ray_curve(p, rep.fine.directions[best], pc.rayLength), lc);
      double num = 0, den = 0;
      for (const auto& b : rep.bound.terms) {
        if (b.missing) continue;
        for (const auto& [j, c] : L.perShell)
          if (j == b.j) { num += c; den += b.b; }
      }
      if (den > 0) rep.boundRatio = num / den;
    }
  }

  std::vector<std::uint8_t> inXiC(D, 0), inXiF(D, 0);
  for (long i : rep.coarse.xi) inXiC[i] = 1;
  for (long i : rep.fine.xi) inXiF[i] = 1;
  long unstable = 0;
  for (long i = 0; i < D; ++i) {
    if (!inXiC[i] || !inXiF[i] || rep.fine.divergentRay[i]) continue;
    double a = rep.coarse.lengths[i], b = rep.fine.lengths[i];
    if (std::abs(a - b) > cfg.stability * std::max(a, b) + 1e-12) {
      ++unstable;
      continue;
    }
    rep.finiteRays.push_back(i);
    if (!rep.chosen || b < *rep.chosenFine) {
      rep.chosen = i;
      rep.chosenCoarse = a;
      rep.chosenFine = b;
    }
  }

  if (!resolved) return inconclusive("K near p is not resolved by the mesh");
  if (sc.flagged() || sf.flagged()) return inconclusive("maximal solution flagged");

  if (rep.bound.trend == WienerVerdict::DivergesNumerically && rep.finiteRays.empty()) {
    rep.verdict = CompletenessVerdict::CompleteTrend;
    rep.reasons.push_back("shell bound partial sums grow without decay");
    if (rep.fine.xi.empty() || rep.coarse.xi.empty()) rep.reasons.push_back("no direction avoids sigma on both meshes");
    else rep.reasons.push_back("no ray avoiding sigma keeps its length under refinement (" + std::to_string(unstable) + " grow)");
    return rep;
  }
  if (!rep.finiteRays.empty() && rep.bound.trend == WienerVerdict::ConvergesNumerically) {
    rep.verdict = CompletenessVerdict::IncompleteTrend;
    rep.reasons.push_back("ray " + std::to_string(*rep.chosen) + " has length " + std::to_string(*rep.chosenFine) +
                          ", stable under refinement");
    rep.reasons.push_back("shell bound series converges");
    return rep;
  }
  if (rep.bound.trend == WienerVerdict::Inconclusive) return inconclusive("shell bound series is inconclusive");
  return inconclusive("shell bound and ray evidence do not agree");
}

}  // namespace yamabe
