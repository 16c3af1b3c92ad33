#pragma once

#include "yamabe/geometry.hpp"

namespace yamabe {

// stereographic chart from the north pole N = e_{n+1}
template <typename Derived>
Vec stereo(const Eigen::MatrixBase<Derived>& p) {
  const Eigen::Index n = p.size() - 1;
  if (std::abs(p.norm() - 1.0) > 1e-10) throw InputError("stereo: point is not on the unit sphere");
  double s = p.head(n).squaredNorm();
  if (p(n) >= 1.0 || (s == 0.0 && p(n) > 0)) throw InputError("stereo: north pole is excluded");
  // near N use 1 - p_{n+1} = |p'|^2 / (1 + p_{n+1}), which keeps full relative accuracy
  if (p(n) > 0) return p.head(n) * ((1.0 + p(n)) / s);
  return p.head(n) / (1.0 - p(n));
}

template <typename Derived>
Vec stereo_inv(const Eigen::MatrixBase<Derived>& x) {
  const Eigen::Index n = x.size();
  double s = x.squaredNorm();
  Vec p(n + 1);
  p.head(n) = 2.0 * x / (1.0 + s);
  p(n) = (s - 1.0) / (1.0 + s);
  return p;
}

// (2/(1+|x|^2))^{(n-2)/2}
template <typename Derived>
double conformal_factor(const Eigen::MatrixBase<Derived>& x) {
  const double n = double(x.size());
  return std::pow(2.0 / (1.0 + x.squaredNorm()), 0.5 * (n - 2));
}

template <typename A, typename B>
double sphere_distance(const Eigen::MatrixBase<A>& p, const Eigen::MatrixBase<B>& q) {
  return 2.0 * std::atan2((p - q).norm(), (p + q).norm());
}

inline Vec south_pole(int n) {
  Vec s = Vec::Zero(n + 1);
  s(n) = -1.0;
  return s;
}

inline Vec north_pole(int n) {
  Vec s = Vec::Zero(n + 1);
  s(n) = 1.0;
  return s;
}

// rotation in SO(m) taking unit a to unit b, acting in span{a, b}
Eigen::MatrixXd rotation_between(const Vec& a, const Vec& b);

// closed geodesic ball; radius 0 is a point
struct SphereCap {
  Vec center;
  double radius = 0;
};

struct SphereSet {
  int n = 3;
  std::vector<SphereCap> caps;

  double diameter() const;
  Vec barycenter() const;
  SphereSet rotated(const Eigen::MatrixXd& R) const;
  // largest distance from a point of the set to p
  double reach(const Vec& p) const;
};

// rotation moving the barycenter of K to S; rejects diam > pi/3
Eigen::MatrixXd rotate_to_cap(const SphereSet& K);

// the cap U = {d(S, x) <= pi/3}
bool inside_cap_U(const SphereSet& K, double tol = 1e-12);

// exact image under stereo: caps go to balls, points to points
CompactSetSpec stereo_image(const SphereSet& K);

}  // namespace yamabe
