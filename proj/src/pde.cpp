#include "yamabe/pde.hpp"
#include "yamabe/parallel.hpp"
#include "yamabe/stencil.hpp"

#include <algorithm>

namespace yamabe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// u^q with the three exponents that occur; integer powers by multiplication
struct Power {
  double q;
  int n;
  double operator()(double u) const {
    if (u <= 0) return 0.0;
    if (n == 3) { double u2 = u * u; return u2 * u2 * u; }
    if (n == 4) return u * u * u;
    return std::pow(u, q);
  }
  // q u^{q-1}
  double derivative(double u) const {
    if (u <= 0) return 0.0;
    if (n == 3) { double u2 = u * u; return 5.0 * u2 * u2; }
    if (n == 4) return 3.0 * u * u;
    return q * std::pow(u, q - 1);
  }
};

// free-cell equations in CSR form: (sum coef u_col) + b - diag u - u^q = 0
struct System {
  std::vector<long> cell;
  std::vector<long> var;
  std::vector<long> start{0};
  std::vector<long> col;
  std::vector<double> coef;
  Eigen::VectorXd diag, b, babs, w;

  System(const GridSpec& g, const std::vector<CellRole>& role, const Eigen::VectorXd& values) {
    const long N = g.size();
    var.assign(N, -1);
    for (long c = 0; c < N; ++c)
      if (role[c] == CellRole::Free) {
        var[c] = long(cell.size());
        cell.push_back(c);
      }
    const long nv = long(cell.size());
    diag.resize(nv);
    b.setZero(nv);
    babs.setZero(nv);
    w.resize(nv);
    for (long v = 0; v < nv; ++v) {
      long c = cell[v];
      LaplaceStencil s = laplace_stencil(g, c);
      for (int k = 0; k < s.count; ++k) {
        long nb = s.nb[k];
        if (nb < 0) throw InputError("free cell " + std::to_string(c) + " touches the edge of the grid box");
        switch (role[nb]) {
          case CellRole::Free:
            col.push_back(var[nb]);
            coef.push_back(s.coef[k]);
            break;
          case CellRole::Fixed:
            b(v) += s.coef[k] * values(nb);
            babs(v) += std::abs(s.coef[k] * values(nb));
            break;
          case CellRole::Excluded:
            throw InputError("free cell " + std::to_string(c) + " is next to an excluded cell");
        }
      }
      start.push_back(long(col.size()));
      diag(v) = s.diag;
      w(v) = g.weight(c);
    }
  }

  long size() const { return long(cell.size()); }

  // F and per-cell scale of the terms; returns max |F|/scale
  double residual(const Eigen::VectorXd& u, const Power& pw, Eigen::VectorXd& F, Eigen::VectorXd& scale) const {
    const long nv = size();
    F.resize(nv);
    scale.resize(nv);
    std::vector<double> part((nv + kBlock - 1) / kBlock, 0.0);
    parallel_blocks(nv, [&](long lo, long hi) {
      double mx = 0;
      for (long v = lo; v < hi; ++v) {
        double acc = b(v) - diag(v) * u(v), sabs = babs(v) + diag(v) * std::abs(u(v));
        for (long k = start[v]; k < start[v + 1]; ++k) {
          double t = coef[k] * u(col[k]);
          acc += t;
          sabs += std::abs(t);
        }
        double f = pw(u(v));
        F(v) = acc - f;
        scale(v) = sabs + f;
        double rel = scale(v) > 0 ? std::abs(F(v)) / scale(v) : std::abs(F(v));
        mx = std::max(mx, rel);
      }
      part[lo / kBlock] = mx;
    });
    double mx = 0;
    for (double p : part) mx = std::max(mx, p);
    return mx;
  }

  double merit(const Eigen::VectorXd& F, const Eigen::VectorXd& scale) const {
    return std::sqrt(blocked_sum(size(), [&](long lo, long hi) {
      double s = 0;
      for (long v = lo; v < hi; ++v) {
        double r = scale(v) > 0 ? F(v) / scale(v) : F(v);
        s += r * r;
      }
      return s;
    }));
  }

  // y = W (diag + a) x - W (offdiag) x, symmetric positive definite
  void apply(const Eigen::VectorXd& a, const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    parallel_blocks(size(), [&](long lo, long hi) {
      for (long v = lo; v < hi; ++v) {
        double acc = (diag(v) + a(v)) * x(v);
        for (long k = start[v]; k < start[v + 1]; ++k) acc -= coef[k] * x(col[k]);
        y(v) = w(v) * acc;
      }
    });
  }
};

double dot(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return blocked_sum(x.size(), [&](long lo, long hi) { return x.segment(lo, hi - lo).dot(y.segment(lo, hi - lo)); });
}

// Jacobi-preconditioned CG on the Newton system; returns iterations used
int pcg(const System& S, const Eigen::VectorXd& a, const Eigen::VectorXd& rhs, Eigen::VectorXd& x, double tol, int maxIt) {
  const long nv = S.size();
  Eigen::VectorXd Minv(nv), r = rhs, z(nv), p(nv), Ap(nv);
  for (long v = 0; v < nv; ++v) Minv(v) = 1.0 / (S.w(v) * (S.diag(v) + a(v)));
  x.setZero(nv);
  double bnorm = std::sqrt(dot(rhs, rhs));
  if (bnorm == 0) return 0;
  z = Minv.cwiseProduct(r);
  p = z;
  double rz = dot(r, z);
  int it = 0;
  for (; it < maxIt; ++it) {
    S.apply(a, p, Ap);
    double pAp = dot(p, Ap);
    if (!(pAp > 0)) break;
    double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    if (std::sqrt(dot(r, r)) <= tol * bnorm) { ++it; break; }
    z = Minv.cwiseProduct(r);
    double rzNew = dot(r, z);
    p = z + (rzNew / rz) * p;
    rz = rzNew;
  }
  return it;
}

struct NewtonOutcome {
  double residual = 0;
  int iterations = 0;
  bool converged = false;
  std::string failure;
};

NewtonOutcome newton(const System& S, const Power& pw, Eigen::VectorXd& u, const SolveConfig& cfg) {
  NewtonOutcome out;
  const long nv = S.size();
  Eigen::VectorXd F, scale, Ft, scaleT, a(nv), rhs, delta, un;
  double rel = S.residual(u, pw, F, scale);
  for (int it = 0; it < cfg.maxNewton; ++it) {
    out.residual = rel;
    if (rel <= cfg.newtonTol) {
      out.converged = true;
      return out;
    }
    for (long v = 0; v < nv; ++v) a(v) = pw.derivative(u(v));
    rhs = S.w.cwiseProduct(F);
    double tol = std::clamp(1e-2 * rel, 1e-14, 1e-4);
    pcg(S, a, rhs, delta, tol, cfg.cgMaxIterations);

    // scaled merit with the scale frozen at the current iterate
    auto meritAt = [&](const Eigen::VectorXd& Fv) {
      return std::sqrt(blocked_sum(nv, [&](long lo, long hi) {
        double s = 0;
        for (long v = lo; v < hi; ++v) {
          double r = scale(v) > 0 ? Fv(v) / scale(v) : Fv(v);
          s += r * r;
        }
        return s;
      }));
    };
    double m0 = meritAt(F);
    double alpha = 1.0;
    bool accepted = false;
    double relNew = rel;
    for (int ls = 0; ls < 60; ++ls, alpha *= cfg.damping) {
      un = u + alpha * delta;
      if (un.minCoeff() <= 0) continue;
      relNew = S.residual(un, pw, Ft, scaleT);
      if (meritAt(Ft) <= (1 - 1e-4 * alpha) * m0) {
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      out.failure = "newton stagnated at relative residual " + std::to_string(rel);
      return out;
    }
    u.swap(un);
    F.swap(Ft);
    scale.swap(scaleT);
    rel = relNew;
  }
  out.residual = rel;
  out.converged = rel <= cfg.newtonTol;
  if (!out.converged) out.failure = "newton iteration budget exhausted";
  return out;
}

double alpha_of(int n) { return 0.5 * (n - 2); }

bool touches_free(const GridSpec& g, const std::vector<CellRole>& role, long c) {
  int ijk[8];
  g.unravel(c, ijk);
  for (int a = 0; a < g.axes(); ++a)
    for (int o : {-1, 1}) {
      long nb = neighbor(g, ijk, a, o);
      if (nb >= 0 && role[nb] == CellRole::Free) return true;
    }
  return false;
}

// smallest box on the lattice of g that holds the ball B(c, R) plus two cells
GridSpec grown_grid(const GridSpec& g, double R) {
  GridSpec out = g;
  const double h = g.h, pad = R + 2 * h;
  auto cover = [&](int a, double lo, double hi) {
    double l0 = g.lo[a];
    out.lo[a] = l0 + h * std::floor((lo - l0) / h + 1e-9);
    out.hi[a] = l0 + h * std::ceil((hi - l0) / h - 1e-9);
    out.cells[a] = int(std::lround((out.hi[a] - out.lo[a]) / h));
  };
  switch (g.reduction) {
    case Reduction::Full:
      for (int a = 0; a < g.axes(); ++a) cover(a, -pad, pad);
      break;
    case Reduction::Radial1D: cover(0, 0.0, pad); out.lo[0] = 0; break;
    case Reduction::Axisymmetric2D:
      cover(0, -pad, pad);
      cover(1, 0.0, pad);
      out.lo[1] = 0;
      break;
    case Reduction::Slab1D: throw InputError("maximal_solution: slab grids are not supported");
  }
  for (int a = 0; a < out.axes(); ++a) out.cells[a] = int(std::lround((out.hi[a] - out.lo[a]) / h));
  out.validate();
  return out;
}

ScalarField assemble(const GridSpec& g, const std::vector<CellRole>& role, const Eigen::VectorXd& values) {
  ScalarField f(g, 0.0);
  f.values = values;
  for (long c = 0; c < g.size(); ++c) f.defined[c] = role[c] != CellRole::Excluded;
  return f;
}

}  // namespace

void SolveConfig::validate() const {
  if (!(newtonTol > 0)) throw InputError("newtonTol must be positive");
  if (maxNewton < 1) throw InputError("maxNewton must be at least 1");
  if (!(damping > 0 && damping < 1)) throw InputError("damping must lie in (0, 1)");
  if (!(collarWidth >= 2)) throw InputError("collarWidth must be at least 2 cells");
  for (size_t i = 1; i < exhaustionLevels.size(); ++i)
    if (!(exhaustionLevels[i] > exhaustionLevels[i - 1])) throw InputError("exhaustionLevels must increase strictly");
  for (double m : exhaustionLevels)
    if (!(m > 0)) throw InputError("exhaustionLevels must be positive");
  if (outerRadii.empty()) throw InputError("outerRadii must not be empty");
  for (size_t i = 1; i < outerRadii.size(); ++i)
    if (!(outerRadii[i] > outerRadii[i - 1])) throw InputError("outerRadii must increase strictly");
}

const char* to_string(SolutionField::Kind k) {
  switch (k) {
    case SolutionField::Kind::Dirichlet: return "dirichlet";
    case SolutionField::Kind::Large: return "large";
    case SolutionField::Kind::Maximal: return "maximal";
  }
  return "?";
}

SolutionField solve_dirichlet(const DirichletProblem& P, const SolveConfig& cfg) {
  cfg.validate();
  P.grid.validate();
  const GridSpec& g = P.grid;
  const long N = g.size();
  if (long(P.role.size()) != N || P.values.size() != N) throw InputError("solve_dirichlet: role/values size mismatch");
  Exponents ex(g.dimension);
  Power pw{ex.q.value(), g.dimension};

  SolutionField out;
  out.kind = SolutionField::Kind::Dirichlet;
  out.role = P.role;
  out.distance = Eigen::VectorXd::Constant(N, kInf);

  System S(g, P.role, P.values);
  double dataMax = 0.0;
  for (long c = 0; c < N; ++c)
    if (P.role[c] == CellRole::Fixed && touches_free(g, P.role, c)) {
      if (!(P.values(c) >= 0) || !std::isfinite(P.values(c)))
        throw InputError("boundary data must be finite and nonnegative (cell " + std::to_string(c) + ")");
      dataMax = std::max(dataMax, P.values(c));
    }
  Eigen::VectorXd values = P.values;
  if (S.size() == 0 || dataMax == 0) {
    // zero data: the only solution is u = 0
    for (long v = 0; v < S.size(); ++v) values(S.cell[v]) = 0.0;
    out.u = assemble(g, P.role, values);
    out.trivial = S.size() > 0;
    out.converged = true;
    return out;
  }

  Eigen::VectorXd u(S.size());
  bool guessOk = true;
  for (long v = 0; v < S.size(); ++v) {
    u(v) = P.values(S.cell[v]);
    if (!(u(v) > 0) || !std::isfinite(u(v))) guessOk = false;
  }
  // a constant at least the data is a supersolution
  if (!guessOk) u.setConstant(dataMax);

  NewtonOutcome res = newton(S, pw, u, cfg);
  for (long v = 0; v < S.size(); ++v) values(S.cell[v]) = u(v);
  out.u = assemble(g, P.role, values);
  out.residualNorm = res.residual;
  out.newtonIterations = res.iterations;
  out.converged = res.converged;
  if (!res.converged) out.flags.push_back(res.failure);
  return out;
}

SolutionField solve_large(const LargeProblem& P, const SolveConfig& cfg) {
  cfg.validate();
  P.grid.validate();
  const GridSpec& g = P.grid;
  const long N = g.size();
  if (long(P.role.size()) != N || P.data.size() != N || P.distance.size() != N)
    throw InputError("solve_large: role/data/distance size mismatch");
  const int n = g.dimension;
  Exponents ex(n);
  const double A = ex.blowupConstant(), al = alpha_of(n);
  const double collar = cfg.collarWidth * g.h;

  DirichletProblem C{g, P.role, P.data};
  bool blowup = false;
  double dataMax = 0;
  for (long c = 0; c < N; ++c) {
    if (P.role[c] == CellRole::Fixed) dataMax = std::max(dataMax, P.data(c));
    if (P.role[c] != CellRole::Free) continue;
    double d = P.distance(c);
    if (!(d > 0)) throw InputError("solve_large: free cell " + std::to_string(c) + " has no positive distance to the blow-up set");
    if (d < collar) {
      C.role[c] = CellRole::Fixed;
      C.values(c) = A * std::pow(d, -al);
      blowup = true;
    }
  }
  for (long c = 0; c < N && !blowup; ++c)
    if (P.role[c] == CellRole::Excluded && touches_free(g, P.role, c)) blowup = true;
  if (!blowup) throw InputError("solve_large: the blow-up boundary is empty");
  for (long c = 0; c < N; ++c)
    if (C.role[c] == CellRole::Free) {
      double d = P.distance(c);
      C.values(c) = std::isfinite(d) ? A * std::pow(d, -al) + dataMax : dataMax + 1.0;
    }

  SolutionField out = solve_dirichlet(C, cfg);
  out.kind = SolutionField::Kind::Large;
  out.distance = P.distance;
  // collar cells keep their data but are part of the solution
  if (!cfg.crossValidate || cfg.exhaustionLevels.empty()) return out;

  const double far = std::max(0.2, 2 * collar);
  Eigen::VectorXd prev;
  for (double m : cfg.exhaustionLevels) {
    // the blow-up set's cells next to the open set carry the height m
    DirichletProblem E{g, P.role, P.data};
    for (long c = 0; c < N; ++c) {
      if (P.role[c] == CellRole::Free) E.values(c) = std::min(out.u.values(c), m);
      else if (P.role[c] == CellRole::Excluded && touches_free(g, P.role, c)) {
        E.role[c] = CellRole::Fixed;
        E.values(c) = m;
      }
    }
    SolutionField em = solve_dirichlet(E, cfg);
    if (!em.converged) out.flags.push_back("exhaustion level " + std::to_string(m) + ": " + em.flags.front());
    const Eigen::VectorXd& ue = em.u.values;
    if (prev.size()) {
      double change = 0, farChange = 0, drop = 0;
      for (long c = 0; c < N; ++c) {
        if (P.role[c] != CellRole::Free || P.distance(c) < collar) continue;
        double rel = std::abs(ue(c) - prev(c)) / std::max(ue(c), 1e-300);
        change = std::max(change, rel);
        if (P.distance(c) >= far) farChange = std::max(farChange, rel);
        drop = std::max(drop, prev(c) - ue(c) - mesh_tolerance(g.h, ue(c)));
      }
      out.exhaustionTrace.emplace_back(m, change);
      out.exhaustionFarChange = farChange;
      if (drop > 0) out.flags.push_back("exhaustion not monotone in the level");
    }
    prev = ue;
  }
  if (out.exhaustionTrace.size() && out.exhaustionFarChange >= 1e-3) out.flags.push_back("exhaustion not Cauchy");
  double gap = 0;
  for (long c = 0; c < N; ++c)
    if (P.role[c] == CellRole::Free && P.distance(c) >= 2 * collar)
      gap = std::max(gap, std::abs(out.u.values(c) - prev(c)) / out.u.values(c));
  out.modeDisagreement = gap;
  if (gap > 0.05) out.flags.push_back("collar and exhaustion modes disagree by " + std::to_string(gap));
  return out;
}

double far_field_fit(const ScalarField& u, const std::vector<CellRole>& role, const Vec& c, double R) {
  const GridSpec& g = u.grid;
  const int n = g.dimension;
  double num = 0, den = 0;
  for (long i = 0; i < g.size(); ++i) {
    if (role[i] != CellRole::Free) continue;
    double r = (g.physical_center(i) - c).norm();
    if (r < 0.8 * R || r >= R) continue;
    double f = std::pow(r, 2 - n) - std::pow(R, 2 - n);
    double w = g.weight(i);
    num += w * u.values(i) * f;
    den += w * f * f;
  }
  return den > 0 ? num / den : 0.0;
}

SolutionField maximal_solution(const CompactSetSpec& spec, const GridSpec& grid, const SolveConfig& cfg) {
  cfg.validate();
  grid.validate();
  if (spec.dimension() != grid.dimension) throw InputError("maximal_solution: dimension mismatch");
  const int n = grid.dimension;
  const Vec c = grid.reduction == Reduction::Full ? Vec(Vec::Zero(n)) : grid.center;

  SolutionField best;
  std::vector<RadiusStep> trace;
  for (size_t k = 0; k < cfg.outerRadii.size(); ++k) {
    const double R = cfg.outerRadii[k];
    GridSpec g = grown_grid(grid, R);
    const long N = g.size();
    LargeProblem P{g, std::vector<CellRole>(N, CellRole::Free), Eigen::VectorXd::Zero(N), Eigen::VectorXd(N)};
    long kCells = 0;
    for (long i = 0; i < N; ++i) {
      Vec x = g.physical_center(i);
      double r = (x - c).norm();
      double sd = spec.empty() ? kInf : spec.signed_distance(x);
      P.distance(i) = sd;
      if (sd <= 0) {
        P.role[i] = CellRole::Excluded;
        ++kCells;
        if (r >= R - 2 * g.h) throw InputError("maximal_solution: outer radius " + std::to_string(R) + " does not clear K");
      } else if (r >= R) {
        P.role[i] = CellRole::Fixed;
      }
    }
    SolutionField s;
    if (kCells == 0) {
      // nothing resolvable blows up: the maximal solution is 0 (removable set)
      for (long i = 0; i < N; ++i)
        if (P.role[i] == CellRole::Excluded) P.role[i] = CellRole::Free;
      s.u = ScalarField(g, 0.0);
      s.role = P.role;
      s.distance = P.distance;
      s.trivial = true;
      s.converged = true;
    } else {
      s = solve_large(P, cfg);
    }
    s.kind = SolutionField::Kind::Maximal;
    s.outerRadius = R;
    s.domainCenter = c;
    RadiusStep step{R, kCells ? far_field_fit(s.u, s.role, c, R) : 0.0, 0.0};
    if (k > 0) {
      bool bad = false;
      const GridSpec& pg = best.u.grid;
      for (long i = 0; i < pg.size(); ++i) {
        if (best.role[i] != CellRole::Free) continue;
        auto v = s.u.sample(pg.physical_center(i));
        if (!v) continue;
        double up = best.u.values(i);
        if (*v > 0) step.monotoneViolation = std::max(step.monotoneViolation, (up - *v) / *v);
        if (up - *v > mesh_tolerance(g.h, *v)) bad = true;
      }
      if (bad) s.flags.push_back("maximal-solution candidates not monotone in R");
    }
    for (auto& f : best.flags) s.flags.insert(s.flags.begin(), f);
    trace.push_back(step);
    best = std::move(s);
  }
  best.radiusTrace = trace;
  best.farFieldA = trace.back().fittedA;
  return best;
}

double residual_norm(const ScalarField& u, const std::vector<CellRole>& role) {
  const GridSpec& g = u.grid;
  System S(g, role, u.values);
  if (S.size() == 0) return 0.0;
  Exponents ex(g.dimension);
  Power pw{ex.q.value(), g.dimension};
  Eigen::VectorXd x(S.size()), F, scale;
  for (long v = 0; v < S.size(); ++v) x(v) = u.values(S.cell[v]);
  return S.residual(x, pw, F, scale);
}

SolutionField rescale_solution(const SolutionField& s, double a) {
  if (!(a > 0)) throw InputError("rescale_solution: a must be positive");
  const GridSpec& g = s.u.grid;
  const double al = alpha_of(g.dimension), f = std::pow(a, al);
  GridSpec h = g;
  for (auto& v : h.lo) v /= a;
  for (auto& v : h.hi) v /= a;
  h.h = g.h / a;
  if (h.center.size()) h.center = g.center / a;
  SolutionField out = s;
  out.u.grid = h;
  out.u.values = s.u.values * f;
  out.distance = s.distance / a;
  out.outerRadius = s.outerRadius / a;
  if (s.domainCenter.size()) out.domainCenter = s.domainCenter / a;
  if (s.farFieldA) out.farFieldA = *s.farFieldA / f;
  out.residualNorm = residual_norm(out.u, out.role);
  return out;
}

ScalarField rescale_solution(const SolutionField& s, double a, const GridSpec& target) {
  if (!(a > 0)) throw InputError("rescale_solution: a must be positive");
  const GridSpec& g = s.u.grid;
  if (target.dimension != g.dimension) throw InputError("rescale_solution: dimension mismatch");
  const double f = std::pow(a, alpha_of(g.dimension));
  ScalarField out(target, 0.0);
  for (long i = 0; i < target.size(); ++i) {
    Vec y = a * target.physical_center(i);
    Eigen::VectorXd gy = g.to_grid(y);
    for (int ax = 0; ax < g.axes(); ++ax)
      if (gy(ax) < g.lo[ax] - 1e-9 * g.h || gy(ax) > g.hi[ax] + 1e-9 * g.h)
        throw InputError("rescale_solution: the rescaled domain leaves the grid");
    auto v = s.u.sample(y);
    out.defined[i] = v.has_value();
    out.values(i) = v ? f * *v : 0.0;
  }
  return out;
}

ScalarField resample(const ScalarField& u, const GridSpec& target) {
  if (target.dimension != u.grid.dimension) throw InputError("resample: dimension mismatch");
  ScalarField out(target, 0.0);
  for (long i = 0; i < target.size(); ++i) {
    auto v = u.sample(target.physical_center(i));
    out.defined[i] = v.has_value();
    out.values(i) = v ? *v : 0.0;
  }
  return out;
}

double keller_osserman_sup(const SolutionField& s) {
  const GridSpec& g = s.u.grid;
  const double al = alpha_of(g.dimension);
  double sup = 0;
  for (long i = 0; i < g.size(); ++i) {
    if (s.role[i] != CellRole::Free) continue;
    double d = s.distance(i);
    if (std::isfinite(s.outerRadius)) d = std::min(d, s.outerRadius - (g.physical_center(i) - s.domainCenter).norm());
    if (!std::isfinite(d) || d <= 0) continue;
    sup = std::max(sup, s.u.values(i) * std::pow(d, al));
  }
  return sup;
}

PointwiseEstimate verify_pointwise_estimate(const CompactSetSpec& spec, double r, const EstimateSetup& setup) {
  if (!(r > 0 && r < 1)) throw InputError("verify_pointwise_estimate: need 0 < r < 1");
  for (const auto& p : spec.primitives())
    if (outer_radius(p) > r + 1e-12 && !spec.clip()) throw InputError("verify_pointwise_estimate: K must lie in B(0, r)");
  const int n = spec.dimension();
  PointwiseEstimate out;
  CapacityResult cap = estimate_capacity(spec, setup.capGrid, setup.cap);
  out.capacity = cap.value;
  if (!cap.converged) out.flags.push_back("capacity solve did not converge");
  SolutionField sol = maximal_solution(spec, setup.pdeGrid, setup.solve);
  for (auto& f : sol.flags) out.flags.push_back(f);
  if (cap.value <= 1e-10) {
    out.flags.push_back("capacity at numerical floor; ratios undefined");
    return out;
  }
  const GridSpec& g = sol.u.grid;
  out.lowerRatio = kInf;
  for (long i = 0; i < g.size(); ++i) {
    if (sol.role[i] != CellRole::Free) continue;
    double rx = g.physical_center(i).norm();
    if (rx < 2 * r || rx > 4 * r) continue;
    double v = sol.u.values(i) * std::pow(rx, n - 2) / cap.value;
    out.lowerRatio = std::min(out.lowerRatio, v);
    out.upperRatio = std::max(out.upperRatio, v);
    ++out.shellCells;
  }
  if (out.shellCells == 0) {
    out.lowerRatio = 0;
    out.flags.push_back("no grid cell in the shell 2r <= |x| <= 4r");
  }
  return out;
}

IntegralEstimate verify_integral_estimate(const CompactSetSpec& spec, const EstimateSetup& setup) {
  const int n = spec.dimension();
  check_dimension(n);
  IntegralEstimate out;
  out.m = 0.5 * (n + 2) + 100.0 * n;
  if (setup.solve.outerRadii.back() < 10) throw InputError("verify_integral_estimate: the largest outer radius must be at least 10");
  if (spec.empty()) return out;
  CutoffPair pair = build_cutoff(spec, out.m, setup.capGrid, setup.cap);
  out.capacity = pair.capacity;
  SolutionField sol = maximal_solution(spec, setup.pdeGrid, setup.solve);
  if (sol.flagged()) throw NumericalError("verify_integral_estimate: " + sol.flags.front());
  const GridSpec& g = sol.u.grid;
  const double e = 2.0 / (n - 2);
  for (long i = 0; i < g.size(); ++i) {
    if (sol.role[i] == CellRole::Excluded) continue;
    Vec x = g.physical_center(i);
    if (x.norm() >= 10) continue;
    auto ph = pair.phi.sample(x);
    double eta = std::pow(1.0 - std::clamp(ph ? *ph : 0.0, 0.0, 1.0), out.m);
    if (eta == 0) continue;
    out.integral += std::pow(sol.u.values(i), e) * eta * g.weight(i);
  }
  out.ratio = out.capacity > 0 ? out.integral / std::pow(out.capacity, e) : 0.0;
  return out;
}

}  // namespace yamabe
