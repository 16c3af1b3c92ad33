#include "yamabe/stencil.hpp"

namespace yamabe {

long neighbor(const GridSpec& g, const int* ijk, int axis, int offset) {
  int tmp[8];
  for (int a = 0; a < g.axes(); ++a) tmp[a] = ijk[a];
  int i = ijk[axis] + offset;
  if (i < 0) {
    if (!g.reflects(axis)) return -1;
    i = -i - 1;
  }
  if (i >= g.cells[axis]) return -1;
  tmp[axis] = i;
  return g.index(tmp);
}

long neighbor2(const GridSpec& g, const int* ijk, int a, int oa, int b, int ob) {
  int tmp[8];
  for (int k = 0; k < g.axes(); ++k) tmp[k] = ijk[k];
  int pairs[2][2] = {{a, oa}, {b, ob}};
  for (auto& p : pairs) {
    int i = ijk[p[0]] + p[1];
    if (i < 0) {
      if (!g.reflects(p[0])) return -1;
      i = -i - 1;
    }
    if (i >= g.cells[p[0]]) return -1;
    tmp[p[0]] = i;
  }
  return g.index(tmp);
}

LaplaceStencil laplace_stencil(const GridSpec& g, long idx) {
  LaplaceStencil s;
  int ijk[8];
  g.unravel(idx, ijk);
  const double h2 = g.h * g.h;
  auto add = [&](long nb, double c) {
    s.nb[s.count] = nb;
    s.coef[s.count] = c;
    ++s.count;
    s.diag += c;
  };
  for (int a = 0; a < g.axes(); ++a) {
    if (!g.reflects(a)) {
      add(neighbor(g, ijk, a, 1), 1.0 / h2);
      add(neighbor(g, ijk, a, -1), 1.0 / h2);
      continue;
    }
    // radial direction with weight r^k, k = n-1 (Radial1D) or n-2 (Axisymmetric2D)
    int k = g.reduction == Reduction::Radial1D ? g.dimension - 1 : g.dimension - 2;
    double r = (ijk[a] + 0.5) * g.h;
    double rp = std::pow(r + 0.5 * g.h, k), rm = std::pow(r - 0.5 * g.h, k), rc = std::pow(r, k);
    add(neighbor(g, ijk, a, 1), rp / (rc * h2));
    if (ijk[a] > 0) add(neighbor(g, ijk, a, -1), rm / (rc * h2));
  }
  return s;
}

Eigen::VectorXd gradient_at(const GridSpec& g, const Eigen::VectorXd& v, long idx) {
  int ijk[8];
  g.unravel(idx, ijk);
  Eigen::VectorXd d(g.axes());
  for (int a = 0; a < g.axes(); ++a) {
    long p = neighbor(g, ijk, a, 1), m = neighbor(g, ijk, a, -1);
    double vp = p >= 0 ? v(p) : 0.0, vm = m >= 0 ? v(m) : 0.0;
    d(a) = (vp - vm) / (2 * g.h);
  }
  return d;
}

Eigen::VectorXd apply_laplacian(const GridSpec& g, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (long i = 0; i < v.size(); ++i) {
    LaplaceStencil s = laplace_stencil(g, i);
    double acc = -s.diag * v(i);
    for (int k = 0; k < s.count; ++k)
      if (s.nb[k] >= 0) acc += s.coef[k] * v(s.nb[k]);
    out(i) = acc;
  }
  return out;
}

}  // namespace yamabe
