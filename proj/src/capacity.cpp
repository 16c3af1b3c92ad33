#include "yamabe/capacity.hpp"
#include "yamabe/stencil.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <limits>

namespace yamabe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double smooth01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

// (s)^{e} with the three exponents q'/2 that occur, avoiding libm pow where possible
inline double powHalf(double s, double e) { return s > 0 ? std::pow(s, e) : 0.0; }

double effective_radius(const CompactSetSpec& spec) {
  double R = 0;
  for (const auto& p : spec.primitives()) R = std::max(R, outer_radius(p));
  if (spec.clip()) R = std::min(R, spec.clip()->center.norm() + spec.clip()->radius);
  return R;
}

void check_capacity_grid(const GridSpec& g, double support) {
  const double s = support;
  switch (g.reduction) {
    case Reduction::Full:
      for (int a = 0; a < g.axes(); ++a)
        if (g.lo[a] > -s || g.hi[a] < s) throw InputError("capacity grid box must contain B(0,2)");
      break;
    case Reduction::Radial1D:
      if (g.center.norm() > 1e-12) throw InputError("radial capacity grid must be centred at the origin");
      if (g.hi[0] < s) throw InputError("capacity grid box must contain B(0,2)");
      break;
    case Reduction::Slab1D: throw InputError("capacity needs a full, radial or axisymmetric grid");
    case Reduction::Axisymmetric2D: {
      double c = g.center.dot(g.axis);
      if ((g.center - c * g.axis).norm() > 1e-12) throw InputError("capacity grid axis must pass through the origin");
      if (g.lo[0] > -s - c || g.hi[0] < s - c || g.hi[1] < s) throw InputError("capacity grid box must contain B(0,2)");
      break;
    }
  }
}

struct Problem {
  const HessianOperator& op;
  Eigen::VectorXd lb;
  double p;

  void project(Eigen::VectorXd& x) const { x = x.cwiseMax(lb); }
};

struct RunStats {
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

RunStats projected_newton(const Problem& P, Eigen::VectorXd& x, const CapacityConfig& cfg) {
  RunStats st;
  const auto& op = P.op;
  const long nv = op.variables();
  P.project(x);

  Eigen::VectorXd H0 = op.frobenius(x);
  double s2 = 0;
  long cnt = 0;
  for (long c = 0; c < H0.size(); ++c)
    if (H0(c) > 0) { s2 += H0(c) * H0(c); ++cnt; }
  double scale = cnt ? std::sqrt(s2 / cnt) : 1.0;

  Eigen::VectorXd g(nv), xn(nv), d(nv);
  double exact = op.energy(x, P.p, 0.0);
  bool lastLevelConverged = false;
  for (int level = 1; level <= cfg.smoothingLevels; ++level) {
    double eps = scale * std::pow(10.0, -level);
    double tol = level == cfg.smoothingLevels ? 1e-13 : 1e-9;
    lastLevelConverged = false;
    for (int it = 0; it < cfg.maxNewtonPerLevel; ++it) {
      double E = op.energy_and_gradient(x, P.p, eps, g);
      std::vector<long> freeIdx;
      freeIdx.reserve(nv);
      for (long i = 0; i < nv; ++i) {
        bool atBound = P.lb(i) > kNegInf && x(i) <= P.lb(i) + 1e-13;
        if (!(atBound && g(i) > 0)) freeIdx.push_back(i);
      }
      Eigen::SparseMatrix<double> A = op.newton_matrix(x, P.p, eps);
      Eigen::SparseMatrix<double> S(long(freeIdx.size()), nv);
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(freeIdx.size());
      for (size_t k = 0; k < freeIdx.size(); ++k) trip.emplace_back(long(k), freeIdx[k], 1.0);
      S.setFromTriplets(trip.begin(), trip.end());
      Eigen::SparseMatrix<double> AF = S * A * S.transpose();
      Eigen::VectorXd gF = S * g;

      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(AF);
      Eigen::VectorXd dF;
      if (ldlt.info() == Eigen::Success) dF = ldlt.solve(-gF);
      if (ldlt.info() != Eigen::Success || !dF.allFinite()) {
        double shift = 1e-10 * AF.diagonal().cwiseAbs().maxCoeff();
        Eigen::SparseMatrix<double> I(AF.rows(), AF.cols());
        I.setIdentity();
        ldlt.compute(AF + shift * I);
        if (ldlt.info() != Eigen::Success) break;
        dF = ldlt.solve(-gF);
      }
      double decrement = -gF.dot(dF);
      if (!(decrement > tol * std::max(E, 1e-300))) {
        lastLevelConverged = true;
        break;
      }
      d = S.transpose() * dF;

      // Armijo on the smoothed objective; the true objective may not go up either
      double alpha = 1.0, exactNew = exact;
      bool accepted = false;
      for (int ls = 0; ls < 50; ++ls) {
        xn = x + alpha * d;
        P.project(xn);
        double En = op.energy(xn, P.p, eps);
        if (En <= E + 1e-4 * g.dot(xn - x)) {
          exactNew = op.energy(xn, P.p, 0.0);
          if (exactNew <= exact) { accepted = true; break; }
        }
        alpha *= 0.5;
      }
      if (!accepted) { lastLevelConverged = true; break; }
      x.swap(xn);
      exact = exactNew;
      ++st.iterations;
      st.history.push_back(exact);
    }
  }
  st.converged = lastLevelConverged;
  return st;
}

RunStats fista(const Problem& P, Eigen::VectorXd& x, const CapacityConfig& cfg) {
  RunStats st;
  const auto& op = P.op;
  const long nv = op.variables();
  P.project(x);
  Eigen::VectorXd y = x, g(nv), xn(nv);
  double Ex = op.energy(x, P.p);
  double t = 1.0, L = 1.0;
  for (int it = 0; it < cfg.maxIterations; ++it) {
    double Ey = op.energy_and_gradient(y, P.p, 0.0, g);
    double En = 0;
    for (int bt = 0; bt < 200; ++bt) {
      xn = y - g / L;
      P.project(xn);
      Eigen::VectorXd diff = xn - y;
      En = op.energy(xn, P.p);
      if (En <= Ey + g.dot(diff) + 0.5 * L * diff.squaredNorm() * (1 + 1e-12) + 1e-15 * std::abs(Ey)) break;
      L *= 2.0;
    }
    ++st.iterations;
    if (En > Ex) {
      // momentum restart
      t = 1.0;
      y = x;
      continue;
    }
    double tn = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    y = xn + ((t - 1) / tn) * (xn - x);
    x.swap(xn);
    Ex = En;
    t = tn;
    L *= 0.9;
    st.history.push_back(Ex);
    int k = int(st.history.size());
    if (k > cfg.window && st.history[k - 1 - cfg.window] - Ex < cfg.relTol * std::max(Ex, 1e-300)) {
      st.converged = true;
      break;
    }
  }
  return st;
}

}  // namespace

HessianOperator::HessianOperator(const GridSpec& grid, double supportRadius) : grid_(grid) {
  grid_.validate();
  const int n = grid_.dimension;
  const long N = grid_.size();
  cellVar_.assign(N, -1);
  for (long c = 0; c < N; ++c) {
    if (grid_.physical_center(c).norm() < supportRadius) {
      cellVar_[c] = long(varCell_.size());
      varCell_.push_back(c);
    }
  }
  switch (grid_.reduction) {
    case Reduction::Full: m_ = n + n * (n - 1) / 2; break;
    case Reduction::Radial1D: m_ = 2; break;
    case Reduction::Axisymmetric2D: m_ = 4; break;
    case Reduction::Slab1D: throw InputError("HessianOperator: slab grids are not supported");
  }
  mult_.resize(m_);
  w_.resize(N);
  for (long c = 0; c < N; ++c) w_(c) = grid_.weight(c);

  const double h = grid_.h, h2 = h * h;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(size_t(N) * m_ * 6);
  auto add = [&](long row, long cell, double v) {
    if (cell < 0) return;
    long var = cellVar_[cell];
    if (var >= 0) trip.emplace_back(row, var, v);
  };
  int ijk[8];
  for (long c = 0; c < N; ++c) {
    grid_.unravel(c, ijk);
    long row = c * m_;
    if (grid_.reduction == Reduction::Full) {
      int k = 0;
      for (int a = 0; a < n; ++a, ++k) {
        add(row + k, neighbor(grid_, ijk, a, 1), 1 / h2);
        add(row + k, neighbor(grid_, ijk, a, -1), 1 / h2);
        add(row + k, c, -2 / h2);
      }
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b, ++k) {
          add(row + k, neighbor2(grid_, ijk, a, 1, b, 1), 0.25 / h2);
          add(row + k, neighbor2(grid_, ijk, a, -1, b, -1), 0.25 / h2);
          add(row + k, neighbor2(grid_, ijk, a, 1, b, -1), -0.25 / h2);
          add(row + k, neighbor2(grid_, ijk, a, -1, b, 1), -0.25 / h2);
        }
    } else if (grid_.reduction == Reduction::Radial1D) {
      double r = (ijk[0] + 0.5) * h;
      add(row, neighbor(grid_, ijk, 0, 1), 1 / h2);
      add(row, neighbor(grid_, ijk, 0, -1), 1 / h2);
      add(row, c, -2 / h2);
      add(row + 1, neighbor(grid_, ijk, 0, 1), 0.5 / (h * r));
      add(row + 1, neighbor(grid_, ijk, 0, -1), -0.5 / (h * r));
    } else {
      double rho = (ijk[1] + 0.5) * h;
      add(row, neighbor(grid_, ijk, 0, 1), 1 / h2);
      add(row, neighbor(grid_, ijk, 0, -1), 1 / h2);
      add(row, c, -2 / h2);
      add(row + 1, neighbor(grid_, ijk, 1, 1), 1 / h2);
      add(row + 1, neighbor(grid_, ijk, 1, -1), 1 / h2);
      add(row + 1, c, -2 / h2);
      add(row + 2, neighbor2(grid_, ijk, 0, 1, 1, 1), 0.25 / h2);
      add(row + 2, neighbor2(grid_, ijk, 0, -1, 1, -1), 0.25 / h2);
      add(row + 2, neighbor2(grid_, ijk, 0, 1, 1, -1), -0.25 / h2);
      add(row + 2, neighbor2(grid_, ijk, 0, -1, 1, 1), -0.25 / h2);
      add(row + 3, neighbor(grid_, ijk, 1, 1), 0.5 / (h * rho));
      add(row + 3, neighbor(grid_, ijk, 1, -1), -0.5 / (h * rho));
    }
  }
  D_.resize(N * m_, long(varCell_.size()));
  D_.setFromTriplets(trip.begin(), trip.end());
  D_.prune(0.0);

  switch (grid_.reduction) {
    case Reduction::Full:
      for (int k = 0; k < m_; ++k) mult_(k) = k < n ? 1.0 : 2.0;
      break;
    case Reduction::Radial1D: mult_ << 1.0, double(n - 1); break;
    case Reduction::Axisymmetric2D: mult_ << 1.0, 1.0, 2.0, double(n - 2); break;
    case Reduction::Slab1D: break;
  }
}

Eigen::VectorXd HessianOperator::gather(const Eigen::VectorXd& cellValues) const {
  Eigen::VectorXd x(variables());
  for (long v = 0; v < variables(); ++v) x(v) = cellValues(varCell_[v]);
  return x;
}

Eigen::VectorXd HessianOperator::scatter(const Eigen::VectorXd& x) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(grid_.size());
  for (long v = 0; v < variables(); ++v) c(varCell_[v]) = x(v);
  return c;
}

double HessianOperator::energy(const Eigen::VectorXd& x, double p, double eps) const {
  Eigen::VectorXd H = D_ * x;
  const long N = w_.size();
  const double e2 = eps * eps, ep = eps > 0 ? std::pow(eps, p) : 0.0;
  double E = 0;
  for (long c = 0; c < N; ++c) {
    double s = 0;
    for (int k = 0; k < m_; ++k) s += mult_(k) * H(c * m_ + k) * H(c * m_ + k);
    if (s == 0 && eps == 0) continue;
    E += w_(c) * (powHalf(s + e2, 0.5 * p) - ep);
  }
  return E;
}

double HessianOperator::energy_and_gradient(const Eigen::VectorXd& x, double p, double eps, Eigen::VectorXd& grad) const {
  Eigen::VectorXd H = D_ * x;
  const long N = w_.size();
  const double e2 = eps * eps, ep = eps > 0 ? std::pow(eps, p) : 0.0;
  double E = 0;
  Eigen::VectorXd G(H.size());
  for (long c = 0; c < N; ++c) {
    double s = 0;
    for (int k = 0; k < m_; ++k) s += mult_(k) * H(c * m_ + k) * H(c * m_ + k);
    double t = s + e2;
    if (t <= 0) {
      for (int k = 0; k < m_; ++k) G(c * m_ + k) = 0;
      continue;
    }
    double a = powHalf(t, 0.5 * p - 1);
    E += w_(c) * (a * t - ep);
    double f = w_(c) * p * a;
    for (int k = 0; k < m_; ++k) G(c * m_ + k) = f * mult_(k) * H(c * m_ + k);
  }
  grad = D_.transpose() * G;
  return E;
}

Eigen::SparseMatrix<double> HessianOperator::newton_matrix(const Eigen::VectorXd& x, double p, double eps) const {
  Eigen::VectorXd H = D_ * x;
  const long N = w_.size();
  const double e2 = eps * eps;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(size_t(N) * m_ * m_);
  Eigen::VectorXd sh(m_);
  for (long c = 0; c < N; ++c) {
    double s = 0;
    for (int k = 0; k < m_; ++k) s += mult_(k) * H(c * m_ + k) * H(c * m_ + k);
    double t = s + e2;
    if (t <= 0) continue;
    double a = w_(c) * p * std::pow(t, 0.5 * p - 1);
    double b = w_(c) * p * (p - 2) * std::pow(t, 0.5 * p - 2);
    for (int k = 0; k < m_; ++k) sh(k) = mult_(k) * H(c * m_ + k);
    for (int k = 0; k < m_; ++k)
      for (int l = 0; l < m_; ++l) {
        double v = b * sh(k) * sh(l) + (k == l ? a * mult_(k) : 0.0);
        if (v != 0) trip.emplace_back(c * m_ + k, c * m_ + l, v);
      }
  }
  Eigen::SparseMatrix<double> B(N * m_, N * m_);
  B.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> Dc = D_;
  Eigen::SparseMatrix<double> BD = B * Dc;
  Eigen::SparseMatrix<double> A = Dc.transpose() * BD;
  return A;
}

Eigen::VectorXd HessianOperator::frobenius(const Eigen::VectorXd& x) const {
  Eigen::VectorXd H = D_ * x;
  const long N = w_.size();
  Eigen::VectorXd f(N);
  for (long c = 0; c < N; ++c) {
    double s = 0;
    for (int k = 0; k < m_; ++k) s += mult_(k) * H(c * m_ + k) * H(c * m_ + k);
    f(c) = std::sqrt(s);
  }
  return f;
}

CapacityResult estimate_capacity(const CompactSetSpec& spec, const GridSpec& grid, const CapacityConfig& cfg) {
  grid.validate();
  if (spec.dimension() != grid.dimension) throw InputError("estimate_capacity: dimension mismatch");
  const double support = 2.0;
  check_capacity_grid(grid, support);
  if (!spec.empty() && effective_radius(spec) > 1.0 + 1e-9) throw InputError("estimate_capacity: K must lie in B(0,1)");

  Exponents ex(grid.dimension);
  const double p = ex.qPrime.value();
  CapacityResult res;
  res.meshSpacing = grid.h;
  res.extremal = ScalarField(grid, 0.0);

  RasterMask raster = rasterize(spec, grid);
  res.coarseWarning = raster.coarseWarning;
  res.kCells = raster.count;
  if (raster.count == 0) {
    res.method = "none";
    return res;
  }

  HessianOperator op(grid, support);
  Eigen::VectorXd lb = Eigen::VectorXd::Constant(op.variables(), kNegInf);
  for (long v = 0; v < op.variables(); ++v)
    if (raster.inside[op.cellOf(v)]) lb(v) = 1.0;
  for (long c = 0; c < grid.size(); ++c)
    if (raster.inside[c] && op.varOf(c) < 0) throw InputError("K-cell outside the support ball");

  bool newton = cfg.method == CapacityConfig::Method::Newton ||
                (cfg.method == CapacityConfig::Method::Auto &&
                 (grid.reduction != Reduction::Full || op.variables() <= cfg.directLimit));

  Eigen::VectorXd x0(op.variables());
  bool warm = false;
  if (!newton && cfg.coarseToFine && grid.reduction == Reduction::Full && grid.cells[0] % 2 == 0 &&
      grid.cells[0] >= 32) {
    GridSpec coarse = grid;
    for (auto& c : coarse.cells) c /= 2;
    coarse.h *= 2;
    CapacityResult cr = estimate_capacity(spec, coarse, cfg);
    if (cr.kCells > 0) {
      for (long v = 0; v < op.variables(); ++v) {
        auto s = cr.extremal.sample(grid.physical_center(op.cellOf(v)));
        x0(v) = s ? *s : 0.0;
      }
      warm = true;
    }
  }
  if (!warm) {
    double Rk = effective_radius(spec);
    double delta = std::max(0.25, 0.5 * (support - Rk));
    for (long v = 0; v < op.variables(); ++v) {
      Vec x = grid.physical_center(op.cellOf(v));
      double d = spec.signed_distance(x);
      x0(v) = smooth01(1.0 - d / delta) * smooth01((support - x.norm()) / 0.5);
    }
  }

  Problem P{op, lb, p};
  RunStats st = newton ? projected_newton(P, x0, cfg) : fista(P, x0, cfg);
  res.method = newton ? "newton" : "fista";
  res.iterations = st.iterations;
  res.converged = st.converged;
  res.objectiveHistory = std::move(st.history);
  res.value = op.energy(x0, p, 0.0);
  res.extremal.values = op.scatter(x0);
  double minK = std::numeric_limits<double>::infinity();
  for (long v = 0; v < op.variables(); ++v)
    if (lb(v) > kNegInf) minK = std::min(minK, x0(v));
  res.constraintViolation = std::max(0.0, 1.0 - minK);
  return res;
}

CapacityResult capacity_on_sphere(const SphereSet& K, int N, const CapacityConfig& cfg, const Eigen::MatrixXd& rotation) {
  Eigen::MatrixXd R = rotation.size() ? rotation : rotate_to_cap(K);
  if (rotation.size()) {
    if (K.diameter() > M_PI / 3 + 1e-12) throw InputError("diameter " + std::to_string(K.diameter()) + " exceeds pi/3");
    if (!inside_cap_U(K.rotated(R), 1e-9)) throw InputError("rotation does not map K into the cap U");
  }
  SphereSet moved = K.rotated(R);
  CompactSetSpec E = stereo_image(moved);
  const int n = K.n;

  // all centres on one line through 0 -> axisymmetric, all at 0 -> radial
  Vec dir = Vec::Zero(n);
  bool collinear = true;
  for (const auto& prim : E.primitives()) {
    Vec c = std::holds_alternative<Ball>(prim) ? std::get<Ball>(prim).center : std::get<Point>(prim).center;
    if (c.norm() < 1e-12) continue;
    if (dir.norm() == 0) dir = c.normalized();
    else if ((c - c.dot(dir) * dir).norm() > 1e-12) collinear = false;
  }
  GridSpec g;
  if (!collinear) g = GridSpec::capacity(n, Reduction::Full, N);
  else if (dir.norm() == 0) g = GridSpec::capacity(n, Reduction::Radial1D, N);
  else g = GridSpec::capacity(n, Reduction::Axisymmetric2D, N, 2.25, Vec::Zero(n), dir);

  CapacityResult res = estimate_capacity(E, g, cfg);
  res.rotation = R;
  return res;
}

double smoothstep_H(double t) {
  double s = std::clamp((t - 1.0 / 3.0) * 6.0, 0.0, 1.0);
  return s * s * s * (s * (6 * s - 15) + 10);
}

CutoffPair cutoff_from_extremal(const CapacityResult& cap, double m) {
  const GridSpec& g = cap.extremal.grid;
  Exponents ex(g.dimension);
  if (m < 0.5 * (g.dimension + 2) - 1e-12) throw InputError("cutoff exponent m must be at least (n+2)/2");
  if (cap.constraintViolation > 1e-6) throw NumericalError("extremal violates the constraint on K");
  CutoffPair pair;
  pair.m = m;
  pair.capacity = cap.value;
  pair.phiTilde = cap.extremal;
  pair.phi = ScalarField(g, 0.0);
  pair.eta = ScalarField(g, 1.0);
  for (long c = 0; c < g.size(); ++c) {
    double ph = smoothstep_H(cap.extremal.values(c));
    pair.phi.values(c) = ph;
    pair.eta.values(c) = std::pow(1.0 - ph, m);
  }
  HessianOperator op(g);
  pair.hessianBudget = op.energy(op.gather(pair.phi.values), ex.qPrime.value());
  pair.cCut = cap.value > 0 ? pair.hessianBudget / cap.value : 0.0;
  return pair;
}

CutoffPair build_cutoff(const CompactSetSpec& spec, double m, const GridSpec& grid, const CapacityConfig& cfg) {
  if (m < 0.5 * (grid.dimension + 2) - 1e-12) throw InputError("cutoff exponent m must be at least (n+2)/2");
  return cutoff_from_extremal(estimate_capacity(spec, grid, cfg), m);
}

CutoffIntegrals cutoff_integral_checks(const CutoffPair& pair, const ScalarField& u) {
  const GridSpec& g = pair.eta.grid;
  if (!u.grid.same_geometry(g)) throw InputError("u must live on the cutoff grid");
  Exponents ex(g.dimension);
  const double q = ex.q.value();
  // zeta = 1 - eta vanishes outside B(0,2), so zero extension is exact
  Eigen::VectorXd zeta = Eigen::VectorXd::Ones(g.size()) - pair.eta.values;
  Eigen::VectorXd lap = apply_laplacian(g, zeta);
  CutoffIntegrals out;
  for (long c = 0; c < g.size(); ++c) {
    double eta = pair.eta.values(c);
    if (!u.defined[c]) {
      if (eta > 0) throw InputError("u undefined on a cell where eta > 0 (cell " + std::to_string(c) + ")");
      continue;
    }
    double uc = u.values(c), w = g.weight(c);
    double grad = gradient_at(g, zeta, c).norm();
    out.I_grad += uc * (grad + std::abs(lap(c))) * w;
    if (eta > 0) out.I_power += std::pow(uc, q) * eta * w;
  }
  if (pair.capacity > 0) {
    out.gradRatio = out.I_grad / pair.capacity;
    out.powerRatio = out.I_power / pair.capacity;
  }
  return out;
}

double closed_form_capacity(const ClosedFormShape& s) {
  check_dimension(s.n);
  if (!(s.r > 0)) throw InputError("closed form: radius must be positive");
  if (s.kind == ClosedFormShape::Kind::Ball) return std::pow(s.r, 0.5 * (s.n - 2));
  if (!(s.delta > 0) || 4 * s.delta >= s.r) throw InputError("closed form: cylinder needs 0 < 4 delta < r");
  if (s.n == 3) return 1.0;
  if (s.n == 4) return 1.0 / std::log(s.r / s.delta);
  return std::pow(s.delta / s.r, 0.5 * (s.n - 4));
}

}  // namespace yamabe
