#include "yamabe/capacity.hpp"

#include <algorithm>

namespace yamabe {

namespace {

struct Cover {
  const CompactSetSpec& K;
  double alpha;
  int depth;
  int n;
  long nodes = 0;
  long budget = 4000000;
  double insideVolume = 0;
  long covers = 0;

  // best dyadic cover of K ∩ cube by balls circumscribing sub-cubes
  double run(const Vec& c, double side, int level) {
    ++nodes;
    double hd = 0.5 * side * std::sqrt(double(n));
    double d = K.signed_distance(c);
    if (d > hd) return 0.0;
    double own = std::pow(hd, alpha);
    if (d <= -hd) {
      insideVolume += std::pow(side, n);
      ++covers;
      return own;
    }
    if (level == depth || nodes > budget) {
      ++covers;
      return own;
    }
    double sum = 0;
    long before = covers;
    Vec cc(n);
    for (int corner = 0; corner < (1 << n); ++corner) {
      for (int a = 0; a < n; ++a) cc(a) = c(a) + ((corner >> a) & 1 ? 0.25 : -0.25) * side;
      sum += run(cc, 0.5 * side, level + 1);
    }
    if (own <= sum) {
      covers = before + 1;
      return own;
    }
    return sum;
  }
};

}  // namespace

HausdorffContentEstimate hausdorff_content(const CompactSetSpec& spec, double alpha, int depth) {
  if (!(alpha > 0)) throw InputError("hausdorff_content: alpha must be positive");
  if (depth < 0 || depth > 12) throw InputError("hausdorff_content: depth must be in [0, 12]");
  HausdorffContentEstimate est;
  est.alpha = alpha;
  if (spec.empty()) return est;
  const int n = spec.dimension();

  double R = 0;
  for (const auto& p : spec.primitives()) R = std::max(R, outer_radius(p));
  if (spec.clip()) R = std::min(R, spec.clip()->center.norm() + spec.clip()->radius);
  R = std::max(R, 1e-12);

  Cover cov{spec, alpha, depth, n};
  double dyadic = cov.run(Vec::Zero(n), 2 * R, 0);
  est.upperBound = std::min(dyadic, std::pow(R, alpha));
  est.coversUsed = dyadic <= std::pow(R, alpha) ? cov.covers : 1;
  // mass distribution on the fully interior cubes: H^a_inf >= (V / omega_n)^{a/n}
  if (alpha <= n && cov.insideVolume > 0)
    est.lowerBound = std::min(std::pow(cov.insideVolume / ball_volume(n), alpha / n), est.upperBound);
  est.cPack = est.upperBound / std::pow(R, alpha);
  return est;
}

}  // namespace yamabe
