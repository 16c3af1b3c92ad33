#pragma once

#include "yamabe/core.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace yamabe {

struct Ball {
  Vec center;
  double radius = 0;
};

struct Box {
  Vec lo, hi;
};

struct Point {
  Vec center;
};

struct SegmentTube {
  Vec a, b;
  double thickness = 0;
};

// thickened k-disk: origin + span(basis) restricted to radius extent
struct SubmanifoldTube {
  Vec origin;
  Eigen::MatrixXd basis;  // n x k, orthonormal columns
  double extent = 0;
  double thickness = 0;
};

// PowerLog: h(r) = c r^a log^b(1/r)
// ExpThin:  h(r) = c r exp(-a r^{-b})
// scale s gives s h(r/s), which is how a cusp transforms under x -> s x
struct CuspProfile {
  enum class Kind { PowerLog, ExpThin };
  Kind kind = Kind::PowerLog;
  double c = 1, a = 2, b = 0;
  double scale = 1;

  double operator()(double r) const;
  double unscaled(double r) const;
};

// {apex + t axis + w : 0 <= t <= height, w perp axis, |w| <= h(t)}
struct Cusp {
  Vec apex;
  Vec axis;
  double height = 0;
  CuspProfile profile;
};

using Primitive = std::variant<Ball, Box, Point, SegmentTube, SubmanifoldTube, Cusp>;

double signed_distance(const Primitive& p, const Vec& x);
bool contains(const Primitive& p, const Vec& x);
// radius of a ball about the origin containing the primitive
double outer_radius(const Primitive& p);
int primitive_dimension(const Primitive& p);
bool is_point(const Primitive& p);
Primitive transformed(const Primitive& p, double s, const Vec& shift);

// finite union of primitives, optionally intersected with a closed ball
class CompactSetSpec {
public:
  struct Clip {
    Vec center;
    double radius;
  };

  CompactSetSpec() = default;
  CompactSetSpec(int dim, std::vector<Primitive> prims, double boundingRadius, std::optional<Clip> clip = {});

  int dimension() const { return dim_; }
  const std::vector<Primitive>& primitives() const { return prims_; }
  double boundingRadius() const { return radius_; }
  const std::optional<Clip>& clip() const { return clip_; }
  bool empty() const { return prims_.empty(); }

  double signed_distance(const Vec& x) const;
  bool contains(const Vec& x) const;

  // image under x -> s (x - shift)
  CompactSetSpec transformed(double s, const Vec& shift) const;
  // K ∩ closed ball
  CompactSetSpec clipped(const Vec& center, double radius) const;

private:
  int dim_ = 0;
  std::vector<Primitive> prims_;
  double radius_ = 0;
  std::optional<Clip> clip_;
};

enum class Reduction { Full, Radial1D, Axisymmetric2D, Slab1D };

const char* to_string(Reduction r);
Reduction reduction_from_string(const std::string& s);

// Uniform cell-centred grid. Radial1D has one axis r >= 0 about `center`;
// Axisymmetric2D has axes (z, rho) about the line center + z axis.
// Slab1D has one axis t, x = center + t axis; weights are per unit cross-section.
struct GridSpec {
  int dimension = 3;
  Reduction reduction = Reduction::Full;
  std::vector<double> lo, hi;
  std::vector<int> cells;
  double h = 0;
  Vec center;
  Vec axis;

  static GridSpec full(int n, double halfWidth, int cellsPerAxis);
  static GridSpec radial(int n, double radius, int cellsAlongRadius, const Vec& center);
  static GridSpec axisymmetric(int n, double zlo, double zhi, double rho, double h, const Vec& center, const Vec& axis);
  static GridSpec slab(int n, double tlo, double thi, int cells, const Vec& center = Vec(), const Vec& axis = Vec());
  // capacity grid over [-halfWidth, halfWidth] with N cells per full axis
  static GridSpec capacity(int n, Reduction red, int cellsPerAxis, double halfWidth = 2.25,
                           const Vec& center = Vec(), const Vec& axis = Vec());

  void validate() const;
  int axes() const { return int(cells.size()); }
  long size() const;
  long index(const int* ijk) const;
  void unravel(long idx, int* ijk) const;
  // grid coordinates of the cell centre
  Eigen::VectorXd coords(long idx) const;
  // a physical point in R^n represented by grid coordinates
  Vec physical(const Eigen::VectorXd& g) const;
  Vec physical_center(long idx) const { return physical(coords(idx)); }
  Eigen::VectorXd to_grid(const Vec& x) const;
  double weight(long idx) const;
  // second axis of Axisymmetric2D and the only axis of Radial1D reflect at 0
  bool reflects(int axis) const;
  bool same_geometry(const GridSpec& o) const;
};

using Mask = std::vector<std::uint8_t>;

struct RasterMask {
  Mask inside;
  long count = 0;
  bool coarseWarning = false;
};

RasterMask rasterize(const CompactSetSpec& spec, const GridSpec& grid);

// Euclidean distance from each cell centre to the nearest marked centre
Eigen::VectorXd distance_transform(const Mask& mask, const GridSpec& grid);

struct ScalarField {
  GridSpec grid;
  Eigen::VectorXd values;
  Mask defined;

  ScalarField() = default;
  ScalarField(GridSpec g, double fill = 0.0);

  // multilinear over defined cells; nullopt if no defined cell nearby
  std::optional<double> sample(const Vec& x) const;
  bool all_finite() const;
};

struct Curve {
  std::vector<Vec> samples;
  Vec closedEnd;

  Curve(std::vector<Vec> s, Vec end);
  double polyline_length() const;
};

}  // namespace yamabe
