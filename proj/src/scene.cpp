#include "yamabe/scene.hpp"

#include <set>
#include <sstream>

namespace yamabe {

namespace {

// one JSON object with a fixed key set; errors carry the pointer of the field
class Obj {
public:
  Obj(const Json& j, std::string ptr, std::set<std::string> keys) : j_(j), ptr_(std::move(ptr)) {
    if (!j.is_object()) throw InputError("expected an object", ptr_);
    for (const auto& [k, v] : j.items())
      if (!keys.count(k)) throw InputError("unknown key '" + k + "'", at(k));
  }

  std::string at(const std::string& k) const { return ptr_ + "/" + k; }
  bool has(const std::string& k) const { return j_.contains(k); }
  const Json& raw(const std::string& k) const {
    if (!has(k)) throw InputError("missing key '" + k + "'", at(k));
    return j_.at(k);
  }

  double num(const std::string& k) const {
    const Json& v = raw(k);
    if (!v.is_number()) throw InputError("'" + k + "' must be a number", at(k));
    double x = v.get<double>();
    if (!std::isfinite(x)) throw InputError("'" + k + "' must be finite", at(k));
    return x;
  }
  double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }
  double positive(const std::string& k) const {
    double x = num(k);
    if (!(x > 0)) throw InputError("'" + k + "' must be positive", at(k));
    return x;
  }
  double positive(const std::string& k, double def) const { return has(k) ? positive(k) : def; }

  long integer(const std::string& k) const {
    const Json& v = raw(k);
    if (!v.is_number_integer()) throw InputError("'" + k + "' must be an integer", at(k));
    return v.get<long>();
  }
  long integer(const std::string& k, long def) const { return has(k) ? integer(k) : def; }

  bool flag(const std::string& k, bool def) const {
    if (!has(k)) return def;
    if (!j_.at(k).is_boolean()) throw InputError("'" + k + "' must be true or false", at(k));
    return j_.at(k).get<bool>();
  }

  std::string str(const std::string& k) const {
    const Json& v = raw(k);
    if (!v.is_string()) throw InputError("'" + k + "' must be a string", at(k));
    return v.get<std::string>();
  }
  std::string str(const std::string& k, const std::string& def) const { return has(k) ? str(k) : def; }

  std::vector<double> numbers(const std::string& k) const {
    const Json& v = raw(k);
    if (!v.is_array()) throw InputError("'" + k + "' must be an array", at(k));
    std::vector<double> out;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw InputError("entry must be a number", at(k) + "/" + std::to_string(i));
      out.push_back(v[i].get<double>());
      if (!std::isfinite(out.back())) throw InputError("entry must be finite", at(k) + "/" + std::to_string(i));
    }
    return out;
  }

  Vec vec(const std::string& k, int n) const {
    auto v = numbers(k);
    if (int(v.size()) != n) throw InputError("'" + k + "' must have " + std::to_string(n) + " entries", at(k));
    return Eigen::Map<const Vec>(v.data(), n);
  }
  Vec unit(const std::string& k, int n) const {
    Vec v = vec(k, n);
    if (!(v.norm() > 0)) throw InputError("'" + k + "' must be nonzero", at(k));
    return v.normalized();
  }

private:
  const Json& j_;
  std::string ptr_;
};

Reduction parse_reduction(const Obj& o) {
  std::string s = o.str("reduction");
  try {
    return reduction_from_string(s);
  } catch (const InputError&) {
    throw InputError("reduction must be full, radial, axisymmetric or slab", o.at("reduction"));
  }
}

CuspProfile parse_profile(const Json& j, const std::string& ptr) {
  Obj o(j, ptr, {"kind", "c", "a", "b"});
  CuspProfile p;
  std::string kind = o.str("kind", "powerlog");
  if (kind == "powerlog") p.kind = CuspProfile::Kind::PowerLog;
  else if (kind == "expthin") p.kind = CuspProfile::Kind::ExpThin;
  else throw InputError("profile kind must be powerlog or expthin", o.at("kind"));
  p.c = o.positive("c", 1.0);
  p.a = o.num("a", 2.0);
  p.b = o.num("b", 0.0);
  return p;
}

Primitive parse_primitive(const Json& j, int n, const std::string& ptr) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw InputError("primitive needs a string 'type'", ptr + "/type");
  const std::string type = j["type"];
  if (type == "ball") {
    Obj o(j, ptr, {"type", "center", "radius"});
    return Ball{o.vec("center", n), o.positive("radius")};
  }
  if (type == "point") {
    Obj o(j, ptr, {"type", "center"});
    return Point{o.vec("center", n)};
  }
  if (type == "box") {
    Obj o(j, ptr, {"type", "lo", "hi"});
    Box b{o.vec("lo", n), o.vec("hi", n)};
    for (int a = 0; a < n; ++a)
      if (!(b.hi(a) > b.lo(a))) throw InputError("box needs hi > lo on every axis", o.at("hi") + "/" + std::to_string(a));
    return b;
  }
  if (type == "segment") {
    Obj o(j, ptr, {"type", "a", "b", "thickness"});
    SegmentTube s{o.vec("a", n), o.vec("b", n), o.positive("thickness")};
    if ((s.a - s.b).norm() == 0) throw InputError("segment ends coincide", o.at("b"));
    return s;
  }
  if (type == "submanifold") {
    Obj o(j, ptr, {"type", "origin", "basis", "extent", "thickness"});
    SubmanifoldTube s;
    s.origin = o.vec("origin", n);
    const Json& B = o.raw("basis");
    if (!B.is_array() || B.empty() || B.size() >= size_t(n)) throw InputError("basis must hold 1 to n-1 vectors", o.at("basis"));
    s.basis.resize(n, Eigen::Index(B.size()));
    for (size_t k = 0; k < B.size(); ++k) {
      const std::string at = o.at("basis") + "/" + std::to_string(k);
      if (!B[k].is_array() || B[k].size() != size_t(n)) throw InputError("basis vector must have n entries", at);
      for (int a = 0; a < n; ++a) {
        if (!B[k][a].is_number()) throw InputError("entry must be a number", at + "/" + std::to_string(a));
        s.basis(a, Eigen::Index(k)) = B[k][a].get<double>();
      }
    }
    Eigen::MatrixXd G = s.basis.transpose() * s.basis;
    if ((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() > 1e-10)
      throw InputError("basis must be orthonormal", o.at("basis"));
    s.extent = o.positive("extent");
    s.thickness = o.positive("thickness");
    return s;
  }
  if (type == "cusp") {
    Obj o(j, ptr, {"type", "apex", "axis", "height", "profile"});
    Cusp c;
    c.apex = o.vec("apex", n);
    c.axis = o.unit("axis", n);
    c.height = o.positive("height");
    c.profile = o.has("profile") ? parse_profile(o.raw("profile"), o.at("profile")) : CuspProfile{};
    return c;
  }
  throw InputError("unknown primitive type '" + type + "'", ptr + "/type");
}

}  // namespace

ScaleOracle CapacityGridDecl::oracle() const {
  ScaleOracle o;
  o.reduction = reduction;
  o.cells = cells;
  o.axis = axis;
  return o;
}

GridSpec parse_grid(const Json& j, int n, const std::string& ptr) {
  if (!j.is_object() || !j.contains("reduction")) throw InputError("grid needs a 'reduction'", ptr + "/reduction");
  Reduction red;
  try {
    red = reduction_from_string(j["reduction"].is_string() ? j["reduction"].get<std::string>() : "?");
  } catch (const InputError&) {
    throw InputError("reduction must be full, radial, axisymmetric or slab", ptr + "/reduction");
  }
  auto cells = [](const Obj& o) {
    long N = o.integer("cells");
    if (N < 2 || N > 100000) throw InputError("cells must lie in [2, 100000]", o.at("cells"));
    return int(N);
  };
  auto range = [](const Obj& o, const std::string& k) {
    auto r = o.numbers(k);
    if (r.size() != 2 || !(r[1] > r[0])) throw InputError("'" + k + "' must be [lo, hi] with lo < hi", o.at(k));
    return r;
  };
  switch (red) {
    case Reduction::Full: {
      Obj o(j, ptr, {"reduction", "halfWidth", "cells"});
      return GridSpec::full(n, o.positive("halfWidth"), cells(o));
    }
    case Reduction::Radial1D: {
      Obj o(j, ptr, {"reduction", "radius", "cells", "center"});
      return GridSpec::radial(n, o.positive("radius"), cells(o), o.has("center") ? o.vec("center", n) : Vec());
    }
    case Reduction::Axisymmetric2D: {
      Obj o(j, ptr, {"reduction", "z", "rho", "h", "cells", "center", "axis"});
      auto z = range(o, "z");
      if (o.has("h") == o.has("cells")) throw InputError("give exactly one of 'h' and 'cells'", o.at("h"));
      double h = o.has("h") ? o.positive("h") : (z[1] - z[0]) / cells(o);
      return GridSpec::axisymmetric(n, z[0], z[1], o.positive("rho"), h, o.has("center") ? o.vec("center", n) : Vec(),
                                    o.has("axis") ? o.unit("axis", n) : Vec());
    }
    case Reduction::Slab1D: {
      Obj o(j, ptr, {"reduction", "t", "cells", "center", "axis"});
      auto t = range(o, "t");
      return GridSpec::slab(n, t[0], t[1], cells(o), o.has("center") ? o.vec("center", n) : Vec(),
                            o.has("axis") ? o.unit("axis", n) : Vec());
    }
  }
  throw InputError("bad reduction", ptr + "/reduction");
}

GridSpec with_cells(const GridSpec& g, int N) {
  if (N < 2) throw InputError("--grid must be at least 2");
  switch (g.reduction) {
    case Reduction::Full: return GridSpec::full(g.dimension, g.hi[0], N);
    case Reduction::Radial1D: return GridSpec::radial(g.dimension, g.hi[0], N, g.center);
    case Reduction::Axisymmetric2D:
      return GridSpec::axisymmetric(g.dimension, g.lo[0], g.hi[0], g.hi[1], (g.hi[0] - g.lo[0]) / N, g.center, g.axis);
    case Reduction::Slab1D: return GridSpec::slab(g.dimension, g.lo[0], g.hi[0], N, g.center, g.axis);
  }
  return g;
}

CatalogShape parse_shape(const Json& j, int n, const std::string& ptr) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw InputError("shape needs a string 'kind'", ptr + "/kind");
  CatalogShape s;
  s.n = n;
  const std::string kind = j["kind"];
  if (kind == "submanifold") {
    Obj o(j, ptr, {"kind", "k"});
    s.kind = CatalogShape::Kind::Submanifold;
    s.k = int(o.integer("k"));
    if (s.k < 0 || s.k >= n) throw InputError("k must lie in [0, n)", o.at("k"));
  } else if (kind == "density") {
    Obj o(j, ptr, {"kind", "d", "C", "validityRange"});
    s.kind = CatalogShape::Kind::DensitySet;
    s.d = o.positive("d");
    s.C = o.positive("C");
    s.validityRange = o.positive("validityRange");
  } else if (kind == "cusp") {
    Obj o(j, ptr, {"kind", "profile"});
    s.kind = CatalogShape::Kind::Cusp;
    s.profile = parse_profile(o.raw("profile"), o.at("profile"));
  } else if (kind == "finiteMeasure") {
    Obj o(j, ptr, {"kind"});
    s.kind = CatalogShape::Kind::FiniteMeasureSet;
  } else {
    throw InputError("shape kind must be submanifold, density, cusp or finiteMeasure", ptr + "/kind");
  }
  return s;
}

CatalogShape load_shape(const std::string& path) {
  Json j = parse_json(read_file(path), path);
  Obj o(j, "", {"dimension", "shape"});
  long n = o.integer("dimension");
  if (n < 3 || n > 5) throw InputError("dimension must be 3, 4 or 5", "/dimension");
  return parse_shape(o.raw("shape"), int(n), "/shape");
}

Scene parse_scene(const Json& j) {
  Obj o(j, "", {"name", "dimension", "primitives", "boundingRadius", "clip", "point", "grid", "capacity", "catalog",
                "expect", "config"});
  Scene s;
  s.name = o.str("name", "scene");
  long n = o.integer("dimension");
  if (n < 3 || n > 5) throw InputError("dimension must be 3, 4 or 5", "/dimension");
  s.dimension = int(n);
  const Json& P = o.raw("primitives");
  if (!P.is_array()) throw InputError("primitives must be an array", "/primitives");
  std::vector<Primitive> prims;
  double reach = 0;
  for (size_t i = 0; i < P.size(); ++i) {
    prims.push_back(parse_primitive(P[i], s.dimension, "/primitives/" + std::to_string(i)));
    reach = std::max(reach, outer_radius(prims.back()));
  }
  double R = o.has("boundingRadius") ? o.positive("boundingRadius") : std::max(reach, 1e-9);
  if (R < reach - 1e-12) throw InputError("boundingRadius is smaller than the primitives' reach", "/boundingRadius");
  std::optional<CompactSetSpec::Clip> clip;
  if (o.has("clip")) {
    Obj c(o.raw("clip"), "/clip", {"center", "radius"});
    clip = CompactSetSpec::Clip{c.vec("center", s.dimension), c.positive("radius")};
  }
  s.spec = CompactSetSpec(s.dimension, std::move(prims), R, clip);
  if (o.has("point")) s.point = o.vec("point", s.dimension);
  if (o.has("grid")) s.grid = parse_grid(o.raw("grid"), s.dimension, "/grid");
  if (o.has("capacity")) {
    Obj c(o.raw("capacity"), "/capacity", {"reduction", "cells", "halfWidth", "axis"});
    CapacityGridDecl d;
    d.reduction = parse_reduction(c);
    if (d.reduction == Reduction::Slab1D) throw InputError("capacity grids cannot be slabs", "/capacity/reduction");
    long N = c.integer("cells");
    if (N < 4 || N > 4096) throw InputError("cells must lie in [4, 4096]", "/capacity/cells");
    d.cells = int(N);
    d.halfWidth = c.positive("halfWidth", 2.25);
    if (c.has("axis")) d.axis = c.unit("axis", s.dimension);
    s.capacity = d;
  }
  if (o.has("catalog")) s.catalog = parse_shape(o.raw("catalog"), s.dimension, "/catalog");
  if (o.has("expect")) {
    std::string e = o.str("expect");
    if (e == "MetricExists") s.expect = MetricVerdict::MetricExists;
    else if (e == "NoMetric") s.expect = MetricVerdict::NoMetric;
    else throw InputError("expect must be MetricExists or NoMetric", "/expect");
  }
  if (o.has("config")) {
    s.config = o.raw("config");
    parse_config(s.config, s.dimension);  // validate early, pointers relative to the block
  }
  return s;
}

Scene load_scene(const std::string& path) { return parse_scene(parse_json(read_file(path), path)); }

RunConfig parse_config(const Json& j, int n) {
  RunConfig rc;
  Obj o(j, "", {"solve", "capacity", "wiener", "probe", "cutoff", "verify", "boundary"});
  if (o.has("solve")) {
    Obj s(o.raw("solve"), "/solve",
          {"newtonTol", "maxNewton", "damping", "collarWidth", "exhaustionLevels", "outerRadii", "crossValidate",
           "cgMaxIterations"});
    SolveConfig& c = rc.solve;
    c.newtonTol = s.num("newtonTol", c.newtonTol);
    c.maxNewton = int(s.integer("maxNewton", c.maxNewton));
    c.damping = s.num("damping", c.damping);
    c.collarWidth = s.num("collarWidth", c.collarWidth);
    if (s.has("exhaustionLevels")) c.exhaustionLevels = s.numbers("exhaustionLevels");
    if (s.has("outerRadii")) c.outerRadii = s.numbers("outerRadii");
    c.crossValidate = s.flag("crossValidate", c.crossValidate);
    c.cgMaxIterations = int(s.integer("cgMaxIterations", c.cgMaxIterations));
    try {
      c.validate();
    } catch (const InputError& e) {
      throw InputError(e.what(), "/solve");
    }
  }
  if (o.has("capacity")) {
    Obj s(o.raw("capacity"), "/capacity",
          {"method", "maxIterations", "relTol", "window", "coarseToFine", "maxNewtonPerLevel", "smoothingLevels",
           "directLimit"});
    CapacityConfig& c = rc.cap;
    std::string m = s.str("method", "auto");
    if (m == "auto") c.method = CapacityConfig::Method::Auto;
    else if (m == "newton") c.method = CapacityConfig::Method::Newton;
    else if (m == "fista") c.method = CapacityConfig::Method::Fista;
    else throw InputError("method must be auto, newton or fista", "/capacity/method");
    c.maxIterations = int(s.integer("maxIterations", c.maxIterations));
    c.relTol = s.positive("relTol", c.relTol);
    c.window = int(s.integer("window", c.window));
    c.coarseToFine = s.flag("coarseToFine", c.coarseToFine);
    c.maxNewtonPerLevel = int(s.integer("maxNewtonPerLevel", c.maxNewtonPerLevel));
    c.smoothingLevels = int(s.integer("smoothingLevels", c.smoothingLevels));
    c.directLimit = s.integer("directLimit", c.directLimit);
    if (c.maxIterations < 1 || c.window < 1 || c.maxNewtonPerLevel < 1 || c.smoothingLevels < 1)
      throw InputError("iteration counts must be positive", "/capacity");
  }
  if (o.has("wiener")) {
    Obj s(o.raw("wiener"), "/wiener", {"jMin", "jMax", "oracle", "divergenceFloor", "zeroFloor", "decayRatio", "ratioSlack"});
    WienerConfig& c = rc.wiener;
    c.jMin = int(s.integer("jMin", c.jMin));
    c.jMax = int(s.integer("jMax", c.jMax));
    if (c.jMin < 1 || c.jMax < c.jMin || c.jMax > 10) throw InputError("need 1 <= jMin <= jMax <= 10", "/wiener/jMax");
    std::string k = s.str("oracle", "variational");
    if (k == "variational") c.oracle.kind = ScaleOracle::Kind::Variational;
    else if (k == "catalog") c.oracle.kind = ScaleOracle::Kind::Catalog;
    else throw InputError("oracle must be variational or catalog", "/wiener/oracle");
    c.divergenceFloor = s.positive("divergenceFloor", c.divergenceFloor);
    c.zeroFloor = s.positive("zeroFloor", c.zeroFloor);
    c.decayRatio = s.positive("decayRatio", c.decayRatio);
    c.ratioSlack = s.positive("ratioSlack", c.ratioSlack);
  }
  if (o.has("probe")) {
    Obj s(o.raw("probe"), "/probe",
          {"J", "jMax", "level", "m", "rayLength", "directions", "seed", "samplesPerPiece", "stability"});
    ProbeConfig& c = rc.probe;
    c.J = int(s.integer("J", c.J));
    c.jMax = int(s.integer("jMax", c.jMax));
    if (c.J < 1 || c.jMax < c.J || c.jMax > 12) throw InputError("need 1 <= J <= jMax <= 12", "/probe/jMax");
    c.level = s.num("level", c.level);
    if (!(c.level > 0 && c.level < 1)) throw InputError("level must lie in (0, 1)", "/probe/level");
    c.m = s.num("m", c.m);
    if (c.m != 0 && c.m < 0.5 * (n + 2)) throw InputError("m must be 0 or at least (n+2)/2", "/probe/m");
    c.rayLength = s.positive("rayLength", c.rayLength);
    c.directions = s.integer("directions", c.directions);
    if (c.directions < 1) throw InputError("directions must be positive", "/probe/directions");
    if (s.has("seed")) {
      long seed = s.integer("seed");
      if (seed < 0) throw InputError("seed must be nonnegative", "/probe/seed");
      c.seed = std::uint64_t(seed);
    }
    c.length.samplesPerPiece = int(s.integer("samplesPerPiece", c.length.samplesPerPiece));
    if (c.length.samplesPerPiece < 1) throw InputError("samplesPerPiece must be positive", "/probe/samplesPerPiece");
    rc.stability = s.positive("stability", rc.stability);
  }
  if (o.has("cutoff")) {
    Obj s(o.raw("cutoff"), "/cutoff", {"m"});
    rc.cutoffM = s.num("m", 0);
    if (rc.cutoffM != 0 && rc.cutoffM < 0.5 * (n + 2)) throw InputError("m must be at least (n+2)/2", "/cutoff/m");
  }
  if (o.has("verify")) {
    Obj s(o.raw("verify"), "/verify", {"radius"});
    rc.verifyRadius = s.positive("radius", rc.verifyRadius);
  }
  if (o.has("boundary")) {
    Obj s(o.raw("boundary"), "/boundary", {"inner", "outer", "asymptotic"});
    rc.boundary.inner = s.num("inner", rc.boundary.inner);
    rc.boundary.outer = s.num("outer", rc.boundary.outer);
    rc.boundary.asymptotic = s.flag("asymptotic", rc.boundary.asymptotic);
    if (rc.boundary.inner < 0 || rc.boundary.outer < 0) throw InputError("boundary data must be nonnegative", "/boundary");
  }
  return rc;
}

Vec parse_point(const std::string& text, int n) {
  std::string t = text;
  for (char& ch : t)
    if (ch == ',' || ch == '[' || ch == ']') ch = ' ';
  std::istringstream in(t);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof() || int(v.size()) != n)
    throw InputError("--point needs " + std::to_string(n) + " comma-separated numbers, got '" + text + "'");
  return Eigen::Map<const Vec>(v.data(), n);
}

}  // namespace yamabe
