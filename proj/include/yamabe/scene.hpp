#pragma once

#include "yamabe/io.hpp"
#include "yamabe/metriclen.hpp"

#include <optional>
#include <string>

namespace yamabe {

// capacity grid declaration; GridSpec::capacity builds it
struct CapacityGridDecl {
  Reduction reduction = Reduction::Full;
  int cells = 64;
  double halfWidth = 2.25;
  Vec axis;

  GridSpec grid(int n) const { return GridSpec::capacity(n, reduction, cells, halfWidth, Vec(), axis); }
  ScaleOracle oracle() const;
};

// pde dirichlet / large boundary values
struct BoundaryData {
  double inner = 1;  // on K cells (dirichlet)
  double outer = 0;  // on the edge of the grid box
  bool asymptotic = false;  // edge data A d^{-(n-2)/2}, d the distance to K (large)
};

// solver knobs; every field has a default, files override what they name
struct RunConfig {
  SolveConfig solve;
  CapacityConfig cap;
  WienerConfig wiener;
  ProbeConfig probe;
  double stability = 0.1;
  double cutoffM = 0;       // 0 means (n+2)/2
  double verifyRadius = 0.5;
  BoundaryData boundary;
};

struct Scene {
  std::string name;
  int dimension = 3;
  CompactSetSpec spec;
  std::optional<Vec> point;
  std::optional<GridSpec> grid;
  std::optional<CapacityGridDecl> capacity;
  std::optional<CatalogShape> catalog;
  std::optional<MetricVerdict> expect;  // documented verdict of a catalog scene
  Json config = Json::object();         // scene-level defaults for RunConfig
};

Scene parse_scene(const Json& j);
Scene load_scene(const std::string& path);

// `shape` object; n comes from the enclosing document
CatalogShape parse_shape(const Json& j, int n, const std::string& ptr);
// standalone shape file {"dimension": n, "shape": {...}}
CatalogShape load_shape(const std::string& path);

GridSpec parse_grid(const Json& j, int n, const std::string& ptr);
// same geometry with N cells along the first axis; axisymmetric grids keep their box
GridSpec with_cells(const GridSpec& g, int N);

// defaults, then the scene block, then the file block
RunConfig parse_config(const Json& merged, int n);

Vec parse_point(const std::string& text, int n);

}  // namespace yamabe
