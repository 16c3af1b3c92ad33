#pragma once

#include "yamabe/pde.hpp"
#include "yamabe/wiener.hpp"

#include <functional>

namespace yamabe {

// value of u at a point, empty outside the defined region
using FieldEval = std::function<std::optional<double>(const Vec&)>;

struct LengthConfig {
  int samplesPerPiece = 32;  // midpoint samples per shell piece, at least
  double maxStep = 0;        // also at most this far apart when > 0
  int maxDepth = 40;         // stop at |x - p| = r_maxDepth
  double growthSlack = 0.1;  // shell contributions may drop by this fraction and still count as non-decreasing
  double resolvedRadius = 0; // shells with r_j below it do not enter the divergence test; grids use 2h
};

// shells S_j = {r_j < |x - p| < r_{j-1}}, p the curve's closed end, r_0 = 1
struct LengthReport {
  double totalLength = 0;  // what was integrated; a lower bound when divergent
  bool divergent = false;  // last 5 complete shell contributions non-decreasing and positive
  std::vector<std::pair<int, double>> perShell;  // (j, contribution), j >= 1
  double outside = 0;        // contribution from |x - p| >= 1
  double stoppedAt = 0;      // |x - p| where integration stopped, 0 if it reached p
  int completeShells = 0;    // shells crossed entirely
  std::vector<double> refinementTrend;  // totals at coarser resolutions, finest last
};

// integral of u^{2/(n-2)} ds along samples..., closedEnd. The last segment may run into
// the undefined region; everything before it must stay defined.
LengthReport conformal_length(const FieldEval& u, int n, const Curve& curve, const LengthConfig& cfg = {});
LengthReport conformal_length(const ScalarField& u, const Curve& curve, LengthConfig cfg = {});
LengthReport conformal_length(const SolutionField& s, const Curve& curve, const LengthConfig& cfg = {});
// same curve on a sequence of solutions, coarse to fine; the report is the finest one
LengthReport length_trend(const std::vector<const SolutionField*>& fields, const Curve& curve, const LengthConfig& cfg = {});

struct ShellBound {
  int j = 0;
  double r = 0;
  double b = 0;  // r_j (C(K ∩ B(p, r_{j+2})) / r_j^{n-2})^{2/(n-2)} with C(B_r) = r^{(n-2)/2}
  bool missing = false;
  std::string note;
};

struct ShellBoundSeries {
  std::vector<ShellBound> terms;
  std::vector<double> partialSums;
  WienerVerdict trend = WienerVerdict::Inconclusive;  // of the b_j as a series
};

// terms j = jMin..jMax, ratios from the oracle at scale r_{j+2}
ShellBoundSeries shell_lower_bound(const CompactSetSpec& spec, const Vec& p, int jMin, int jMax, const ScaleOracle& oracle);

struct ProbeConfig {
  int J = 2;                     // first shell carrying a cutoff
  int jMax = 6;                  // last one; cells closer to p use it too
  double level = 0.99;           // E_j = {phi_j >= level}
  double m = 0;                  // cutoff exponent, 0 means (n+2)/2
  double rayLength = 1;          // rays run from p to distance rayLength
  long directions = 10000;
  std::optional<std::uint64_t> seed;  // random directions instead of the low-discrepancy set
  ScaleOracle oracle;            // capacity grid and method for the per-shell cutoffs
  LengthConfig length;
};

struct RayResult {
  long direction = -1;
  double length = 0;
  bool divergent = false;
};

struct RadialProbe {
  Vec p;
  Mask sigmaMask;               // on the solution grid
  std::vector<Vec> directions;  // all sampled directions, in order
  std::vector<long> xi;         // indices of directions whose ray avoids sigma and K
  std::vector<RayResult> rays;  // one per xi entry
  std::vector<double> lengths;  // per direction, -1 when the ray meets K
  std::vector<std::uint8_t> divergentRay;
  std::optional<long> chosen;   // shortest non-divergent ray avoiding sigma, index into directions
  double rayLength = 0;
  double minAvoidingLength = 0;  // shortest ray among those avoiding K alone
  bool minAvoidingDivergent = false;
  std::vector<int> missingShells;  // shells whose cutoff could not be built
  std::vector<std::string> flags;
};

// per-shell cutoffs of K ∩ B(p, r_j) built on oracle's capacity grid, rescaled by 1/(2 r_j) about p
struct ShellCutoff {
  int j = 0;
  std::optional<CutoffPair> cutoff;
  std::optional<double> ratio;  // C(K ∩ B(p, r_j)) / C(B(p, r_j)) on the same grid
  std::string note;
};
std::vector<ShellCutoff> shell_cutoffs(const CompactSetSpec& spec, const Vec& p, const ProbeConfig& cfg);

std::vector<Vec> probe_directions(int n, long count, std::optional<std::uint64_t> seed = {});

RadialProbe build_radial_probe(const CompactSetSpec& spec, const Vec& p, const std::vector<ShellCutoff>& cutoffs,
                               const SolutionField& u, const ProbeConfig& cfg);

enum class CompletenessVerdict { CompleteTrend, IncompleteTrend, Inconclusive };
const char* to_string(CompletenessVerdict v);

struct CompletenessConfig {
  GridSpec grid;     // coarse solution grid; the fine one halves h
  SolveConfig solve;
  ProbeConfig probe;
  double stability = 0.1;  // relative change allowed under refinement
};

struct CompletenessReport {
  CompletenessVerdict verdict = CompletenessVerdict::Inconclusive;
  std::vector<std::string> reasons;
  ShellBoundSeries bound;
  RadialProbe coarse, fine;
  // rays avoiding sigma on both meshes, not divergent on the fine one, length stable under refinement
  std::vector<long> finiteRays;
  std::optional<long> chosen;  // shortest of them
  std::optional<double> chosenCoarse, chosenFine;
  double boundRatio = 0;  // shortest K-avoiding ray over the b_j partial sum, on the shells both cover
  std::vector<std::string> flags;
};

CompletenessReport completeness_probe(const CompactSetSpec& spec, const Vec& p, const CompletenessConfig& cfg);

}  // namespace yamabe
