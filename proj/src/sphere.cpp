#include "yamabe/sphere.hpp"

#include <algorithm>

namespace yamabe {

Eigen::MatrixXd rotation_between(const Vec& a, const Vec& b) {
  const Eigen::Index m = a.size();
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  double c = std::clamp(a.dot(b), -1.0, 1.0);
  if (c > 1.0 - 1e-15) return I;
  if (c < -1.0 + 1e-12) {
    // half turn in the plane of a and the first coordinate axis not parallel to it
    Vec e = Vec::Zero(m);
    int k = 0;
    for (; k < m; ++k)
      if (std::abs(a(k)) < 0.9) break;
    e(k) = 1.0;
    e -= e.dot(a) * a;
    e.normalize();
    return I - 2.0 * a * a.transpose() - 2.0 * e * e.transpose();
  }
  Vec u = (b - c * a).normalized();
  double s = std::sqrt(1.0 - c * c);
  return I + s * (u * a.transpose() - a * u.transpose()) + (c - 1.0) * (a * a.transpose() + u * u.transpose());
}

double SphereSet::diameter() const {
  double d = 0;
  for (size_t i = 0; i < caps.size(); ++i)
    for (size_t j = i; j < caps.size(); ++j)
      d = std::max(d, sphere_distance(caps[i].center, caps[j].center) + caps[i].radius + caps[j].radius);
  return std::min(d, M_PI);
}

Vec SphereSet::barycenter() const {
  if (caps.empty()) return south_pole(n);
  Vec b = Vec::Zero(n + 1);
  for (const auto& c : caps) b += c.center;
  if (b.norm() < 1e-12) return caps.front().center;
  return b.normalized();
}

SphereSet SphereSet::rotated(const Eigen::MatrixXd& R) const {
  SphereSet out{n, caps};
  for (auto& c : out.caps) c.center = R * c.center;
  return out;
}

double SphereSet::reach(const Vec& p) const {
  double r = 0;
  for (const auto& c : caps) r = std::max(r, sphere_distance(p, c.center) + c.radius);
  return r;
}

Eigen::MatrixXd rotate_to_cap(const SphereSet& K) {
  for (const auto& c : K.caps) {
    if (c.center.size() != K.n + 1 || std::abs(c.center.norm() - 1.0) > 1e-10)
      throw InputError("sphere set: cap center is not a unit vector in R^{n+1}");
    if (c.radius < 0) throw InputError("sphere set: negative cap radius");
  }
  double d = K.diameter();
  if (d > M_PI / 3 + 1e-12) throw InputError("diameter " + std::to_string(d) + " exceeds pi/3");
  Eigen::MatrixXd R = rotation_between(K.barycenter(), south_pole(K.n));
  if (!inside_cap_U(K.rotated(R), 1e-9)) throw NumericalError("rotated set leaves the cap U");
  return R;
}

bool inside_cap_U(const SphereSet& K, double tol) { return K.reach(south_pole(K.n)) <= M_PI / 3 + tol; }

CompactSetSpec stereo_image(const SphereSet& K) {
  std::vector<Primitive> prims;
  double R = 1e-12;
  for (const auto& c : K.caps) {
    if (c.radius == 0) {
      Vec x = stereo(c.center);
      prims.push_back(Point{x});
      R = std::max(R, x.norm());
      continue;
    }
    double a = c.center(K.n) - std::cos(c.radius);
    if (a >= 0) throw InputError("cap contains the north pole");
    Vec x = -c.center.head(K.n) / a;
    double r = std::sin(c.radius) / -a;
    prims.push_back(Ball{x, r});
    R = std::max(R, x.norm() + r);
  }
  return CompactSetSpec(K.n, std::move(prims), R * (1 + 1e-9));
}

}  // namespace yamabe
