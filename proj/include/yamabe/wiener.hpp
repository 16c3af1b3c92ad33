#pragma once

#include "yamabe/capacity.hpp"

#include <string>

namespace yamabe {

enum class WienerVerdict { DivergesNumerically, ConvergesNumerically, Inconclusive };
enum class ThinVerdict { NotThin, Thin };
enum class MetricVerdict { MetricExists, NoMetric, Inconclusive };

const char* to_string(WienerVerdict v);
const char* to_string(ThinVerdict v);
const char* to_string(MetricVerdict v);

// shapes with a closed-form existence criterion
struct CatalogShape {
  enum class Kind { Submanifold, DensitySet, Cusp, FiniteMeasureSet };
  Kind kind = Kind::Submanifold;
  int n = 3;
  int k = 0;                   // submanifold dimension
  double d = 0;                // density exponent
  double C = 0;                // density constant
  double validityRange = 0;    // density bound holds for r < validityRange
  CuspProfile profile;         // cusp h
};

struct Classification {
  MetricVerdict verdict = MetricVerdict::Inconclusive;
  std::string criterion;
};

Classification classify_catalog(const CatalogShape& shape);

// how per-scale capacities are obtained
struct ScaleOracle {
  enum class Kind { Variational, Catalog };
  Kind kind = Kind::Variational;
  Reduction reduction = Reduction::Full;
  Vec axis;            // for axisymmetric grids; must pass through p
  int cells = 64;      // capacity grid cells per full axis
  CapacityConfig cap;
};

struct ScaleRatio {
  std::optional<double> ratio;  // empty when the oracle cannot answer
  std::string note;
};

// C(K ∩ B(p, r)) / C(B(p, r)), both rescaled by 1/(2r) about p so they sit in B(0, 1/2).
// `reference` is the capacity of B(0, 1/2) on the oracle grid, computed when absent.
ScaleRatio capacity_ratio_at_scale(const CompactSetSpec& spec, const Vec& p, double r, const ScaleOracle& oracle,
                                   std::optional<double> reference = {});

// the grid the variational oracle solves on
GridSpec oracle_grid(int n, const ScaleOracle& oracle);
// capacity of B(0, 1/2) on that grid; throws NumericalError when the solve fails
double reference_ball_capacity(int n, const ScaleOracle& oracle);
// K ∩ B(p, r) mapped by x -> (x - p) / (2r); empty primitive list when K misses the ball
CompactSetSpec localized(const CompactSetSpec& spec, const Vec& p, double r);

struct WienerTerm {
  int j = 0;
  double r = 0;
  double capRatio = 0;
  double term = 0;  // capRatio^{2/(n-2)}
  bool missing = false;
  std::string note;
};

struct WienerConfig {
  int jMin = 1;
  int jMax = 8;
  ScaleOracle oracle;
  double divergenceFloor = 0.01;  // each of the last 5 terms above it
  double zeroFloor = 1e-8;        // terms below it count as zero
  double decayRatio = 0.9;        // fitted geometric ratio needed for convergence
  double ratioSlack = 0.05;       // capacity ratios above 1 + slack are flagged
};

struct WienerReport {
  Vec basePoint;
  std::vector<WienerTerm> terms;
  std::vector<double> partialSums;
  double tailSlope = 0;   // d log S_j / d log j over the last 5 terms
  double decayFit = 0;    // fitted geometric ratio of the last 5 terms, 0 if not all positive
  WienerVerdict verdict = WienerVerdict::Inconclusive;
  std::optional<ThinVerdict> catalogVerdict;
  std::vector<std::string> flags;
  std::vector<Vec> testedPoints;
};

// p must lie in K; jMax <= 10
WienerReport wiener_terms(const CompactSetSpec& spec, const Vec& p, const WienerConfig& cfg,
                          const std::optional<CatalogShape>& catalog = {});

// verdict rules applied to a finished term list
WienerVerdict wiener_verdict(const std::vector<WienerTerm>& terms, const WienerConfig& cfg, double* decayFit = nullptr);

enum class Monotone { NonIncreasing, NonDecreasing };

struct BridgeResult {
  double lowerSum = 0;         // sum over j >= J+1 of zeta_j r_j^kappa
  double integralEstimate = 0; // trapezoid of int_0^{r_J} zeta r^kappa dr / r
  double upperSum = 0;         // sum over j >= J
  bool divergent = false;      // terms do not decay; the values are partial
  double tailRatio = 0;        // fitted ratio used for the geometric tail
  double lowerConstant = 0;    // integral / lowerSum
  double upperConstant = 0;    // upperSum / integral
  std::vector<double> partialSums;
};

// zeta[i] = zeta(r_{J+i}); monotone in i as declared
BridgeResult dyadic_bridge(const std::vector<double>& zeta, double kappa, int J, Monotone declared);

}  // namespace yamabe
