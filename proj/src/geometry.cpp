#include "yamabe/geometry.hpp"

#include <algorithm>
#include <limits>

namespace yamabe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double segment_distance(const Vec& x, const Vec& a, const Vec& b) {
  Vec ab = b - a;
  double len2 = ab.squaredNorm();
  double t = len2 > 0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (x - a - t * ab).norm();
}

double seg2(double px, double py, double ax, double ay, double bx, double by) {
  double dx = bx - ax, dy = by - ay;
  double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0) : 0.0;
  double ex = px - ax - t * dx, ey = py - ay - t * dy;
  return std::sqrt(ex * ex + ey * ey);
}

// distance in the meridian half-plane from (t, s) to the curve tau -> (tau, h(tau)), 0 <= tau <= rho
double profile_distance(double t, double s, double rho, const CuspProfile& h) {
  constexpr int M = 384;
  auto tau = [&](int i) { double u = double(i) / M; return rho * u * u; };
  double best = kInf;
  int bi = 0;
  double ta = 0, ha = h(0.0);
  for (int i = 1; i <= M; ++i) {
    double tb = tau(i), hb = h(tb);
    double d = seg2(t, s, ta, ha, tb, hb);
    if (d < best) { best = d; bi = i; }
    ta = tb; ha = hb;
  }
  // golden section on the true curve around the best chord
  double lo = tau(std::max(bi - 2, 0)), hi = tau(std::min(bi + 1, M));
  auto f = [&](double x) { double dh = h(x) - s; return (x - t) * (x - t) + dh * dh; };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, rho); ++it) {
    if (f1 < f2) { hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = f(x1); }
    else { lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = f(x2); }
  }
  return std::sqrt(std::min({f1, f2, f(0.0), f(rho)}));
}

struct Meridian {
  double t, s;
};

Meridian meridian(const Cusp& c, const Vec& x) {
  Vec y = x - c.apex;
  double t = y.dot(c.axis);
  double s = (y - t * c.axis).norm();
  return {t, s};
}

void require_dim(const Vec& v, int n, const char* what) {
  if (v.size() != n) throw InputError(std::string(what) + ": dimension mismatch");
}

}  // namespace

double CuspProfile::unscaled(double r) const {
  if (r <= 0) return 0.0;
  switch (kind) {
    case Kind::PowerLog: {
      double v = c * std::pow(r, a);
      if (b != 0) v *= std::pow(std::log(1.0 / r), b);
      return v;
    }
    case Kind::ExpThin:
      return c * r * std::exp(-a * std::pow(r, -b));
  }
  return 0.0;
}

double CuspProfile::operator()(double r) const { return scale * unscaled(r / scale); }

double signed_distance(const Primitive& prim, const Vec& x) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return (x - p.center).norm() - p.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          Vec c = 0.5 * (p.lo + p.hi), half = 0.5 * (p.hi - p.lo);
          Vec q = (x - c).cwiseAbs() - half;
          double outside = q.cwiseMax(0.0).norm();
          double inside = std::min(q.maxCoeff(), 0.0);
          return outside + inside;
        } else if constexpr (std::is_same_v<T, Point>) {
          return (x - p.center).norm();
        } else if constexpr (std::is_same_v<T, SegmentTube>) {
          return segment_distance(x, p.a, p.b) - p.thickness;
        } else if constexpr (std::is_same_v<T, SubmanifoldTube>) {
          Vec y = x - p.origin;
          Eigen::VectorXd par = p.basis.transpose() * y;
          double perp = (y - p.basis * par).norm();
          double over = std::max(0.0, par.norm() - p.extent);
          return std::hypot(perp, over) - p.thickness;
        } else {
          auto [t, s] = meridian(p, x);
          double rho = p.height;
          double dc = profile_distance(t, s, rho, p.profile);
          bool in = t >= 0 && t <= rho && s <= p.profile(t);
          if (in) return -std::min(dc, rho - t);
          double dtop = seg2(t, s, rho, 0.0, rho, p.profile(rho));
          return std::min(dc, dtop);
        }
      },
      prim);
}

bool contains(const Primitive& prim, const Vec& x) {
  if (const auto* c = std::get_if<Cusp>(&prim)) {
    auto [t, s] = meridian(*c, x);
    return t >= 0 && t <= c->height && s <= c->profile(t);
  }
  return signed_distance(prim, x) <= 0.0;
}

double outer_radius(const Primitive& prim) {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return p.center.norm() + p.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          return p.lo.cwiseAbs().cwiseMax(p.hi.cwiseAbs()).norm();
        } else if constexpr (std::is_same_v<T, Point>) {
          return p.center.norm();
        } else if constexpr (std::is_same_v<T, SegmentTube>) {
          return std::max(p.a.norm(), p.b.norm()) + p.thickness;
        } else if constexpr (std::is_same_v<T, SubmanifoldTube>) {
          Eigen::VectorXd par = p.basis.transpose() * p.origin;
          double perp = (p.origin - p.basis * par).norm();
          return std::hypot(perp, par.norm() + p.extent) + p.thickness;
        } else {
          double a0 = p.apex.dot(p.axis), perp = (p.apex - a0 * p.axis).norm(), r = 0;
          for (int i = 0; i <= 256; ++i) {
            double t = p.height * i / 256.0;
            r = std::max(r, std::hypot(a0 + t, perp + p.profile(t)));
          }
          // profile is nondecreasing, so a sample spacing of slack covers the gaps
          return r + p.height / 256.0 + (p.profile(p.height) - p.profile(p.height * 255 / 256.0));
        }
      },
      prim);
}

int primitive_dimension(const Primitive& prim) {
  return std::visit(
      [](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Box>) return int(p.lo.size());
        else if constexpr (std::is_same_v<T, Point>) return int(p.center.size());
        else if constexpr (std::is_same_v<T, SegmentTube>) return int(p.a.size());
        else if constexpr (std::is_same_v<T, SubmanifoldTube>) return int(p.origin.size());
        else if constexpr (std::is_same_v<T, Cusp>) return int(p.apex.size());
        else return int(p.center.size());
      },
      prim);
}

bool is_point(const Primitive& p) { return std::holds_alternative<Point>(p); }

Primitive transformed(const Primitive& prim, double s, const Vec& shift) {
  return std::visit(
      [&](auto p) -> Primitive {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Ball>) {
          p.center = s * (p.center - shift);
          p.radius *= s;
        } else if constexpr (std::is_same_v<T, Box>) {
          p.lo = s * (p.lo - shift);
          p.hi = s * (p.hi - shift);
        } else if constexpr (std::is_same_v<T, Point>) {
          p.center = s * (p.center - shift);
        } else if constexpr (std::is_same_v<T, SegmentTube>) {
          p.a = s * (p.a - shift);
          p.b = s * (p.b - shift);
          p.thickness *= s;
        } else if constexpr (std::is_same_v<T, SubmanifoldTube>) {
          p.origin = s * (p.origin - shift);
          p.extent *= s;
          p.thickness *= s;
        } else {
          p.apex = s * (p.apex - shift);
          p.height *= s;
          p.profile.scale *= s;
        }
        return p;
      },
      prim);
}

CompactSetSpec::CompactSetSpec(int dim, std::vector<Primitive> prims, double boundingRadius, std::optional<Clip> clip)
    : dim_(dim), prims_(std::move(prims)), radius_(boundingRadius), clip_(std::move(clip)) {
  check_dimension(dim_);
  if (!(radius_ > 0)) throw InputError("bounding radius must be positive");
  for (size_t i = 0; i < prims_.size(); ++i) {
    if (primitive_dimension(prims_[i]) != dim_)
      throw InputError("primitive " + std::to_string(i) + ": dimension mismatch");
    double r = outer_radius(prims_[i]);
    if (r > radius_ * (1 + 1e-12))
      throw InputError("primitive " + std::to_string(i) + " leaves the bounding ball (needs radius " +
                       std::to_string(r) + ")");
  }
  if (clip_) require_dim(clip_->center, dim_, "clip center");
}

double CompactSetSpec::signed_distance(const Vec& x) const {
  require_dim(x, dim_, "signed_distance");
  double d = kInf;
  for (const auto& p : prims_) d = std::min(d, yamabe::signed_distance(p, x));
  if (clip_) d = std::max(d, (x - clip_->center).norm() - clip_->radius);
  return d;
}

bool CompactSetSpec::contains(const Vec& x) const {
  require_dim(x, dim_, "contains");
  if (clip_ && (x - clip_->center).norm() > clip_->radius) return false;
  for (const auto& p : prims_)
    if (yamabe::contains(p, x)) return true;
  return false;
}

CompactSetSpec CompactSetSpec::transformed(double s, const Vec& shift) const {
  if (!(s > 0)) throw InputError("scale must be positive");
  std::vector<Primitive> out;
  out.reserve(prims_.size());
  for (const auto& p : prims_) out.push_back(yamabe::transformed(p, s, shift));
  std::optional<Clip> c;
  if (clip_) c = Clip{s * (clip_->center - shift), s * clip_->radius};
  return CompactSetSpec(dim_, std::move(out), s * (radius_ + shift.norm()), c);
}

CompactSetSpec CompactSetSpec::clipped(const Vec& center, double radius) const {
  if (clip_) throw InputError("set is already clipped");
  return CompactSetSpec(dim_, prims_, radius_, Clip{center, radius});
}

const char* to_string(Reduction r) {
  switch (r) {
    case Reduction::Full: return "full";
    case Reduction::Radial1D: return "radial";
    case Reduction::Axisymmetric2D: return "axisymmetric";
    case Reduction::Slab1D: return "slab";
  }
  return "?";
}

Reduction reduction_from_string(const std::string& s) {
  if (s == "full") return Reduction::Full;
  if (s == "radial") return Reduction::Radial1D;
  if (s == "axisymmetric") return Reduction::Axisymmetric2D;
  if (s == "slab") return Reduction::Slab1D;
  throw InputError("unknown reduction '" + s + "'");
}

GridSpec GridSpec::full(int n, double halfWidth, int N) {
  GridSpec g;
  g.dimension = n;
  g.reduction = Reduction::Full;
  g.lo.assign(n, -halfWidth);
  g.hi.assign(n, halfWidth);
  g.cells.assign(n, N);
  g.h = 2 * halfWidth / N;
  g.center = Vec::Zero(n);
  g.validate();
  return g;
}

GridSpec GridSpec::radial(int n, double radius, int N, const Vec& center) {
  GridSpec g;
  g.dimension = n;
  g.reduction = Reduction::Radial1D;
  g.lo = {0.0};
  g.hi = {radius};
  g.cells = {N};
  g.h = radius / N;
  g.center = center.size() ? center : Vec::Zero(n);
  g.validate();
  return g;
}

GridSpec GridSpec::axisymmetric(int n, double zlo, double zhi, double rho, double h, const Vec& center, const Vec& axis) {
  GridSpec g;
  g.dimension = n;
  g.reduction = Reduction::Axisymmetric2D;
  g.lo = {zlo, 0.0};
  g.hi = {zhi, rho};
  g.cells = {int(std::lround((zhi - zlo) / h)), int(std::lround(rho / h))};
  g.h = h;
  g.center = center.size() ? center : Vec::Zero(n);
  if (axis.size()) {
    g.axis = axis.normalized();
  } else {
    g.axis = Vec::Zero(n);
    g.axis(n - 1) = 1.0;
  }
  g.validate();
  return g;
}

GridSpec GridSpec::slab(int n, double tlo, double thi, int N, const Vec& center, const Vec& axis) {
  GridSpec g;
  g.dimension = n;
  g.reduction = Reduction::Slab1D;
  g.lo = {tlo};
  g.hi = {thi};
  g.cells = {N};
  g.h = (thi - tlo) / N;
  g.center = center.size() ? center : Vec::Zero(n);
  if (axis.size()) {
    g.axis = axis.normalized();
  } else {
    g.axis = Vec::Zero(n);
    g.axis(n - 1) = 1.0;
  }
  g.validate();
  return g;
}

GridSpec GridSpec::capacity(int n, Reduction red, int N, double hw, const Vec& center, const Vec& axis) {
  switch (red) {
    case Reduction::Full: return full(n, hw, N);
    case Reduction::Radial1D: return radial(n, hw, N / 2, center);
    case Reduction::Axisymmetric2D: return axisymmetric(n, -hw, hw, hw, 2 * hw / N, center, axis);
    case Reduction::Slab1D: break;
  }
  throw InputError("bad reduction");
}

void GridSpec::validate() const {
  check_dimension(dimension);
  int want = reduction == Reduction::Full ? dimension : reduction == Reduction::Axisymmetric2D ? 2 : 1;
  if (int(cells.size()) != want || int(lo.size()) != want || int(hi.size()) != want)
    throw InputError("grid axes do not match the reduction");
  if (!(h > 0)) throw InputError("grid spacing must be positive");
  for (int a = 0; a < want; ++a) {
    if (cells[a] < 1) throw InputError("grid needs at least one cell per axis");
    double ha = (hi[a] - lo[a]) / cells[a];
    if (std::abs(ha - h) > 1e-9 * h) throw InputError("grid spacing differs between axes");
  }
  if (reduction == Reduction::Slab1D) {
    if (center.size() != dimension) throw InputError("grid center dimension mismatch");
  } else if (reduction != Reduction::Full) {
    if (lo.back() != 0.0) throw InputError("radial axis must start at 0");
    if (center.size() != dimension) throw InputError("grid center dimension mismatch");
  }
  if ((reduction == Reduction::Axisymmetric2D || reduction == Reduction::Slab1D) && (axis.size() != dimension || std::abs(axis.norm() - 1) > 1e-12))
    throw InputError("axisymmetric grid needs a unit axis");
}

long GridSpec::size() const {
  long s = 1;
  for (int c : cells) s *= c;
  return s;
}

long GridSpec::index(const int* ijk) const {
  long idx = 0;
  for (int a = 0; a < axes(); ++a) idx = idx * cells[a] + ijk[a];
  return idx;
}

void GridSpec::unravel(long idx, int* ijk) const {
  for (int a = axes() - 1; a >= 0; --a) {
    ijk[a] = int(idx % cells[a]);
    idx /= cells[a];
  }
}

Eigen::VectorXd GridSpec::coords(long idx) const {
  int ijk[8];
  unravel(idx, ijk);
  Eigen::VectorXd g(axes());
  for (int a = 0; a < axes(); ++a) g(a) = lo[a] + (ijk[a] + 0.5) * h;
  return g;
}

namespace {
Vec perpendicular(const Vec& axis) {
  int k;
  axis.cwiseAbs().minCoeff(&k);
  Vec e = Vec::Zero(axis.size());
  e(k) = 1.0;
  e -= e.dot(axis) * axis;
  return e.normalized();
}
}  // namespace

Vec GridSpec::physical(const Eigen::VectorXd& g) const {
  switch (reduction) {
    case Reduction::Full: return g;
    case Reduction::Radial1D: {
      Vec x = center;
      x(0) += g(0);
      return x;
    }
    case Reduction::Axisymmetric2D: return center + g(0) * axis + g(1) * perpendicular(axis);
    case Reduction::Slab1D: return center + g(0) * axis;
  }
  return g;
}

Eigen::VectorXd GridSpec::to_grid(const Vec& x) const {
  switch (reduction) {
    case Reduction::Full: return x;
    case Reduction::Radial1D: return Eigen::VectorXd::Constant(1, (x - center).norm());
    case Reduction::Axisymmetric2D: {
      Vec y = x - center;
      double z = y.dot(axis);
      Eigen::VectorXd g(2);
      g << z, (y - z * axis).norm();
      return g;
    }
    case Reduction::Slab1D: return Eigen::VectorXd::Constant(1, (x - center).dot(axis));
  }
  return x;
}

double GridSpec::weight(long idx) const {
  switch (reduction) {
    case Reduction::Full: return std::pow(h, dimension);
    case Reduction::Radial1D: {
      double r = coords(idx)(0);
      return sphere_area(dimension - 1) * std::pow(r, dimension - 1) * h;
    }
    case Reduction::Axisymmetric2D: {
      double rho = coords(idx)(1);
      return sphere_area(dimension - 2) * std::pow(rho, dimension - 2) * h * h;
    }
    case Reduction::Slab1D: return h;
  }
  return 0;
}

bool GridSpec::reflects(int a) const {
  return (reduction == Reduction::Radial1D || reduction == Reduction::Axisymmetric2D) && a == axes() - 1;
}

bool GridSpec::same_geometry(const GridSpec& o) const {
  if (dimension != o.dimension || reduction != o.reduction || cells != o.cells) return false;
  if (std::abs(h - o.h) > 1e-12 * h) return false;
  for (int a = 0; a < axes(); ++a)
    if (std::abs(lo[a] - o.lo[a]) > 1e-9 * h) return false;
  if (reduction != Reduction::Full && (center - o.center).norm() > 1e-12) return false;
  if ((reduction == Reduction::Axisymmetric2D || reduction == Reduction::Slab1D) && (axis - o.axis).norm() > 1e-12)
    return false;
  return true;
}

RasterMask rasterize(const CompactSetSpec& spec, const GridSpec& grid) {
  grid.validate();
  if (spec.dimension() != grid.dimension) throw InputError("rasterize: dimension mismatch");
  RasterMask out;
  out.inside.assign(grid.size(), 0);
  if (spec.empty()) return out;

  // the box must cover the effective bounding ball
  double R = spec.boundingRadius();
  if (spec.clip()) R = std::min(R, spec.clip()->center.norm() + spec.clip()->radius);
  double slack = 1e-9;
  if (grid.reduction == Reduction::Slab1D) {
    // a slab grid only sees the line through its center
  } else if (grid.reduction == Reduction::Full) {
    for (int a = 0; a < grid.axes(); ++a)
      if (grid.lo[a] > -R + slack || grid.hi[a] < R - slack)
        throw InputError("grid box does not contain the bounding ball of the set");
  } else {
    double Rc = R + grid.center.norm();
    if (grid.hi.back() < Rc - slack) throw InputError("grid does not contain the bounding ball of the set");
    if (grid.reduction == Reduction::Axisymmetric2D && (grid.lo[0] > -Rc + slack || grid.hi[0] < Rc - slack))
      throw InputError("grid does not contain the bounding ball of the set");
  }

  const auto& prims = spec.primitives();
  std::vector<char> hit(prims.size(), 0);
  for (long i = 0; i < grid.size(); ++i) {
    Vec x = grid.physical_center(i);
    if (spec.clip() && (x - spec.clip()->center).norm() > spec.clip()->radius) continue;
    bool in = false;
    for (size_t k = 0; k < prims.size(); ++k) {
      if (contains(prims[k], x)) { hit[k] = 1; in = true; }
    }
    if (in) { out.inside[i] = 1; ++out.count; }
  }
  for (size_t k = 0; k < prims.size(); ++k) {
    if (hit[k] || is_point(prims[k])) continue;
    // a primitive the clip ball does not reach is not a resolution problem
    if (spec.clip() && yamabe::signed_distance(prims[k], spec.clip()->center) > spec.clip()->radius) continue;
    out.coarseWarning = true;
  }
  return out;
}

namespace {
// squared distance transform of f along one line (Felzenszwalb-Huttenlocher), sample spacing h
void edt_line(const std::vector<double>& f, std::vector<double>& d, double h, std::vector<int>& v, std::vector<double>& z) {
  int n = int(f.size());
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    double xq = q * h;
    while (k >= 0) {
      double xv = v[k] * h;
      double s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2 * (xq - xv));
      if (s <= z[k]) { --k; continue; }
      break;
    }
    ++k;
    v[k] = q;
    if (k == 0) z[k] = -kInf;
    else {
      double xv = v[k - 1] * h;
      z[k] = ((f[q] + xq * xq) - (f[v[k - 1]] + xv * xv)) / (2 * (xq - xv));
    }
    z[k + 1] = kInf;
  }
  if (k < 0) { std::fill(d.begin(), d.end(), kInf); return; }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    double xq = q * h;
    while (z[j + 1] < xq) ++j;
    double dx = xq - v[j] * h;
    d[q] = dx * dx + f[v[j]];
  }
}
}  // namespace

Eigen::VectorXd distance_transform(const Mask& mask, const GridSpec& grid) {
  long N = grid.size();
  Eigen::VectorXd d2(N);
  for (long i = 0; i < N; ++i) d2(i) = mask[i] ? 0.0 : kInf;
  std::vector<int> v;
  std::vector<double> z, f, out;
  for (int a = 0; a < grid.axes(); ++a) {
    long stride = 1;
    for (int b = a + 1; b < grid.axes(); ++b) stride *= grid.cells[b];
    int len = grid.cells[a];
    f.resize(len);
    out.resize(len);
    for (long base = 0; base < N; ++base) {
      // base enumerates lines: index with axis-a coordinate 0
      if ((base / stride) % len != 0) continue;
      for (int i = 0; i < len; ++i) f[i] = d2(base + i * stride);
      edt_line(f, out, grid.h, v, z);
      for (int i = 0; i < len; ++i) d2(base + i * stride) = out[i];
    }
  }
  return d2.cwiseSqrt();
}

ScalarField::ScalarField(GridSpec g, double fill) : grid(std::move(g)) {
  values = Eigen::VectorXd::Constant(grid.size(), fill);
  defined.assign(grid.size(), 1);
}

std::optional<double> ScalarField::sample(const Vec& x) const {
  Eigen::VectorXd g = grid.to_grid(x);
  int A = grid.axes();
  int i0[8];
  double t[8];
  for (int a = 0; a < A; ++a) {
    double f = (g(a) - grid.lo[a]) / grid.h - 0.5;
    if (f < -1.0 || f > grid.cells[a]) return std::nullopt;
    int i = int(std::floor(f));
    t[a] = f - i;
    i0[a] = i;
  }
  double acc = 0, wsum = 0;
  int ijk[8];
  for (int corner = 0; corner < (1 << A); ++corner) {
    double w = 1;
    for (int a = 0; a < A; ++a) {
      int bit = (corner >> a) & 1;
      ijk[a] = std::clamp(i0[a] + bit, 0, grid.cells[a] - 1);
      w *= bit ? t[a] : 1 - t[a];
    }
    if (w == 0) continue;
    long idx = grid.index(ijk);
    if (!defined[idx]) continue;
    acc += w * values(idx);
    wsum += w;
  }
  if (wsum < 1e-12) return std::nullopt;
  return acc / wsum;
}

bool ScalarField::all_finite() const {
  for (long i = 0; i < values.size(); ++i)
    if (defined[i] && !std::isfinite(values(i))) return false;
  return true;
}

Curve::Curve(std::vector<Vec> s, Vec end) : samples(std::move(s)), closedEnd(std::move(end)) {
  if (samples.size() < 2) throw InputError("curve needs at least two samples");
  for (size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].size() != samples[0].size()) throw InputError("curve samples differ in dimension");
    if ((samples[i] - samples[i - 1]).norm() == 0)
      throw InputError("curve samples " + std::to_string(i - 1) + " and " + std::to_string(i) + " coincide");
  }
  if (closedEnd.size() != samples[0].size()) throw InputError("curve endpoint dimension mismatch");
}

double Curve::polyline_length() const {
  double L = 0;
  for (size_t i = 1; i < samples.size(); ++i) L += (samples[i] - samples[i - 1]).norm();
  return L;
}

}  // namespace yamabe
