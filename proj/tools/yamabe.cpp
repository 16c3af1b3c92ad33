// yamabe: batch runs over scene files, JSON/CSV results plus a run manifest.
// Exit codes: 0 ok, 2 bad input (JSON pointer on stderr), 3 numerical failure (flags on stderr).

#include "yamabe/parallel.hpp"
#include "yamabe/scene.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace yamabe;
namespace fs = std::filesystem;

namespace {

const char* kVersion = "0.3.0";

struct Options {
  std::string scene, cfg, out = "result.json";
  int grid = 0;
  int threads = 1;
  bool dump = false;
  std::string point, oracle, shape, zeta, direction;
  int jmax = 0, jmin = 0;
  double m = 0, radius = 0;
};

// numerical failure after the outputs were written
struct Failure {
  std::string what;
  std::vector<std::string> flags;
};

class Run {
public:
  Run(const Options& o, std::string sceneDigest, std::string configDigest, const std::vector<std::string>& args) {
    man_.sceneDigest = std::move(sceneDigest);
    man_.configDigest = std::move(configDigest);
    man_.toolVersion = kVersion;
    std::string verbatim, canon = "yamabe";
    for (size_t i = 0; i < args.size(); ++i) {
      verbatim += (i ? " " : "") + quote(args[i]);
      if (i == 0) continue;
      if (args[i] == "--threads") {
        ++i;
        if (i < args.size()) verbatim += " " + quote(args[i]);
        continue;
      }
      if (args[i].rfind("--threads=", 0) == 0) continue;
      canon += " " + quote(args[i]);
    }
    man_.command = verbatim;
    man_.canonicalCommand = canon;
    fs::path out = o.out;
    if (const char* dir = std::getenv("YAMABE_OUT_DIR"); dir && *dir) out = fs::path(dir) / out.filename();
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    out_ = out;
  }

  std::string digest() const { return man_.digest(); }

  // <stem><suffix> next to the main output
  std::string sibling(const std::string& suffix) const {
    fs::path p = out_;
    return (p.parent_path() / (p.stem().string() + suffix)).string();
  }

  void json(const std::string& path, Json j) {
    j["manifestDigest"] = digest();
    text(path, j.dump(2) + "\n");
  }
  void main_json(Json j) { json(out_.string(), std::move(j)); }
  void text(const std::string& path, const std::string& body) {
    write_file(path, body);
    record(path, body);
  }
  void field(const std::string& path, const ScalarField& f) {
    write_field(path, f, Json{{"manifestDigest", digest()}});
    record(path, read_file(path));
    record(path + ".json", read_file(path + ".json"));
  }

  void finish() {
    fs::path mp = sibling(".manifest.json");
    write_file(mp.string(), man_.to_json().dump(2) + "\n");
  }

  const fs::path& out() const { return out_; }

private:
  static std::string quote(const std::string& s) {
    if (!s.empty() && s.find_first_of(" \t\"'") == std::string::npos) return s;
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
  }
  void record(const std::string& path, const std::string& body) { man_.outputs.emplace_back(path, sha256_hex(body)); }

  RunManifest man_;
  fs::path out_;
};

Json flags_json(const std::vector<std::string>& f) { return Json(f); }

// --- scene helpers ---

struct Loaded {
  Scene scene;
  RunConfig cfg;
  std::string sceneDigest, configDigest;
};

Loaded load(const Options& o) {
  if (o.scene.empty()) throw InputError("--scene is required");
  Loaded L;
  std::string text = read_file(o.scene);
  L.sceneDigest = sha256_hex(text);
  L.scene = parse_scene(parse_json(text, o.scene));
  Json merged = L.scene.config;
  if (!o.cfg.empty()) {
    Json file = parse_json(read_file(o.cfg), o.cfg);
    parse_config(file, L.scene.dimension);  // pointers relative to the file
    merged.merge_patch(file);
  }
  L.cfg = parse_config(merged, L.scene.dimension);
  L.configDigest = sha256_hex(merged.dump());
  return L;
}

GridSpec solution_grid(const Loaded& L, const Options& o) {
  if (!L.scene.grid) throw InputError("scene has no grid", "/grid");
  return o.grid ? with_cells(*L.scene.grid, o.grid) : *L.scene.grid;
}

CapacityGridDecl capacity_decl(const Loaded& L, const Options& o) {
  if (!L.scene.capacity) throw InputError("scene has no capacity grid", "/capacity");
  CapacityGridDecl d = *L.scene.capacity;
  if (o.grid) d.cells = o.grid;
  return d;
}

Vec base_point(const Loaded& L, const Options& o) {
  if (!o.point.empty()) return parse_point(o.point, L.scene.dimension);
  if (!L.scene.point) throw InputError("give --point or a scene 'point'", "/point");
  return *L.scene.point;
}

Json solution_json(const SolutionField& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["converged"] = s.converged;
  j["trivial"] = s.trivial;
  j["residualNorm"] = s.residualNorm;
  j["newtonIterations"] = s.newtonIterations;
  j["grid"] = to_json(s.u.grid);
  if (s.farFieldA) j["farFieldA"] = *s.farFieldA;
  if (std::isfinite(s.outerRadius)) j["outerRadius"] = s.outerRadius;
  j["exhaustionTrace"] = Json::array();
  for (const auto& [m, d] : s.exhaustionTrace) j["exhaustionTrace"].push_back({{"level", m}, {"change", d}});
  j["exhaustionFarChange"] = s.exhaustionFarChange;
  j["modeDisagreement"] = s.modeDisagreement;
  j["radiusTrace"] = Json::array();
  for (const auto& r : s.radiusTrace)
    j["radiusTrace"].push_back({{"R", r.R}, {"fittedA", r.fittedA}, {"monotoneViolation", r.monotoneViolation}});
  if (!s.trivial && s.kind != SolutionField::Kind::Dirichlet) j["kellerOssermanSup"] = keller_osserman_sup(s);
  j["flags"] = flags_json(s.flags);
  return j;
}

std::optional<Failure> unconverged(const SolutionField& s) {
  if (s.converged) return std::nullopt;
  return Failure{"solver did not converge", s.flags};
}

// edge cells of the grid box; reflecting low ends are not edges
bool edge_cell(const GridSpec& g, long c) {
  std::vector<int> ijk(g.axes());
  g.unravel(c, ijk.data());
  for (int a = 0; a < g.axes(); ++a) {
    if (ijk[a] == g.cells[a] - 1) return true;
    if (ijk[a] == 0 && !g.reflects(a)) return true;
  }
  return false;
}

// --- subcommands ---

using Handler = std::function<std::optional<Failure>(Run&, const Loaded&)>;

std::vector<std::string> g_args;

// load, run, write the manifest
std::optional<Failure> with_scene(const Options& o, const Handler& h) {
  Loaded L = load(o);
  set_threads(o.threads);
  Run run(o, L.sceneDigest, L.configDigest, g_args);
  auto f = h(run, L);
  run.finish();
  return f;
}

std::optional<Failure> do_cap_estimate(Run& run, const Loaded& L, const Options& o) {
  CapacityGridDecl d = capacity_decl(L, o);
  GridSpec g = d.grid(L.scene.dimension);
  CapacityResult r = estimate_capacity(L.scene.spec, g, L.cfg.cap);
  Json j;
  j["scene"] = L.scene.name;
  j["value"] = r.value;
  j["meshSpacing"] = r.meshSpacing;
  j["iterations"] = r.iterations;
  j["method"] = r.method;
  j["converged"] = r.converged;
  j["coarseWarning"] = r.coarseWarning;
  j["constraintViolation"] = r.constraintViolation;
  j["kCells"] = r.kCells;
  j["grid"] = to_json(g);
  if (!r.objectiveHistory.empty()) j["finalObjective"] = r.objectiveHistory.back();
  if (o.dump) run.field(run.sibling(".extremal.bin"), r.extremal);
  run.main_json(j);
  std::cout << "capacity " << CsvWriter::num(r.value) << "\n";
  if (!r.converged) return Failure{"capacity solve did not converge", {"not converged after " + std::to_string(r.iterations) + " iterations"}};
  return {};
}

std::optional<Failure> do_cap_cutoff(Run& run, const Loaded& L, const Options& o) {
  const int n = L.scene.dimension;
  GridSpec g = capacity_decl(L, o).grid(n);
  double m = o.m > 0 ? o.m : L.cfg.cutoffM > 0 ? L.cfg.cutoffM : 0.5 * (n + 2);
  CutoffPair c = build_cutoff(L.scene.spec, m, g, L.cfg.cap);
  Json j;
  j["scene"] = L.scene.name;
  j["m"] = c.m;
  j["capacity"] = c.capacity;
  j["hessianBudget"] = c.hessianBudget;
  j["cCut"] = c.cCut;
  j["grid"] = to_json(g);
  if (o.dump) {
    run.field(run.sibling(".phi.bin"), c.phi);
    run.field(run.sibling(".phitilde.bin"), c.phiTilde);
    run.field(run.sibling(".eta.bin"), c.eta);
  }
  run.main_json(j);
  std::cout << "cCut " << CsvWriter::num(c.cCut) << "\n";
  return {};
}

std::optional<Failure> do_pde_maximal(Run& run, const Loaded& L, const Options& o) {
  SolutionField s = maximal_solution(L.scene.spec, solution_grid(L, o), L.cfg.solve);
  Json j = solution_json(s);
  j["scene"] = L.scene.name;
  if (o.dump) run.field(run.sibling(".u.bin"), s.u);
  run.main_json(j);
  std::cout << "maximal " << (s.converged ? "converged" : "not converged") << " flags " << s.flags.size() << "\n";
  return unconverged(s);
}

std::optional<Failure> do_pde_boundary(Run& run, const Loaded& L, const Options& o, bool large) {
  const GridSpec g = solution_grid(L, o);
  const CompactSetSpec& K = L.scene.spec;
  const BoundaryData& bd = L.cfg.boundary;
  RasterMask km = rasterize(K, g);
  const double A = Exponents(g.dimension).blowupConstant(), alpha = 0.5 * (g.dimension - 2);
  SolutionField s;
  if (large) {
    LargeProblem P{g, std::vector<CellRole>(g.size(), CellRole::Free), Eigen::VectorXd::Zero(g.size()),
                   Eigen::VectorXd::Zero(g.size())};
    for (long c = 0; c < g.size(); ++c) {
      double d = std::max(0.0, K.signed_distance(g.physical_center(c)));
      P.distance(c) = d;
      if (km.inside[c]) {
        P.role[c] = CellRole::Excluded;
        P.distance(c) = 0;
      } else if (edge_cell(g, c)) {
        P.role[c] = CellRole::Fixed;
        P.data(c) = bd.asymptotic ? A * std::pow(d, -alpha) : bd.outer;
      }
    }
    s = solve_large(P, L.cfg.solve);
  } else {
    DirichletProblem P{g, std::vector<CellRole>(g.size(), CellRole::Free), Eigen::VectorXd::Zero(g.size())};
    for (long c = 0; c < g.size(); ++c) {
      if (km.inside[c]) {
        P.role[c] = CellRole::Fixed;
        P.values(c) = bd.inner;
      } else if (edge_cell(g, c)) {
        P.role[c] = CellRole::Fixed;
        P.values(c) = bd.outer;
      }
    }
    s = solve_dirichlet(P, L.cfg.solve);
  }
  Json j = solution_json(s);
  j["scene"] = L.scene.name;
  if (o.dump) run.field(run.sibling(".u.bin"), s.u);
  run.main_json(j);
  std::cout << to_string(s.kind) << " " << (s.converged ? "converged" : "not converged") << "\n";
  return unconverged(s);
}

std::optional<Failure> do_pde_verify(Run& run, const Loaded& L, const Options& o, bool integral) {
  EstimateSetup st{solution_grid(L, o), capacity_decl(L, Options{}).grid(L.scene.dimension), L.cfg.solve, L.cfg.cap};
  std::string line;
  if (integral) {
    IntegralEstimate e = verify_integral_estimate(L.scene.spec, st);
    line = "integral," + L.scene.name + "," + CsvWriter::num(e.ratio) + "," + CsvWriter::num(e.integral) + "," +
           CsvWriter::num(e.capacity) + "," + CsvWriter::num(e.m);
  } else {
    double r = o.radius > 0 ? o.radius : L.cfg.verifyRadius;
    PointwiseEstimate e = verify_pointwise_estimate(L.scene.spec, r, st);
    std::string f;
    for (const auto& s : e.flags) f += (f.empty() ? "" : "; ") + s;
    for (char& c : f)
      if (c == ',' || c == '"') c = ' ';
    line = "mainest," + L.scene.name + "," + CsvWriter::num(r) + "," + CsvWriter::num(e.lowerRatio) + "," +
           CsvWriter::num(e.upperRatio) + "," + CsvWriter::num(e.capacity) + "," + std::to_string(e.shellCells) + "," + f;
  }
  line += "," + run.digest();
  run.text(run.out().string(), line + "\n");
  std::cout << line << "\n";
  return {};
}

Json wiener_json(const WienerReport& r) {
  Json j;
  j["basePoint"] = to_json(r.basePoint);
  j["verdict"] = to_string(r.verdict);
  if (r.catalogVerdict) j["catalogVerdict"] = to_string(*r.catalogVerdict);
  j["tailSlope"] = r.tailSlope;
  j["decayFit"] = r.decayFit;
  j["terms"] = Json::array();
  for (size_t i = 0; i < r.terms.size(); ++i) {
    const WienerTerm& t = r.terms[i];
    Json tj{{"j", t.j}, {"r", t.r}, {"missing", t.missing}};
    if (!t.missing) {
      tj["capRatio"] = t.capRatio;
      tj["term"] = t.term;
    }
    if (!t.note.empty()) tj["note"] = t.note;
    j["terms"].push_back(tj);
  }
  j["partialSums"] = r.partialSums;
  j["flags"] = flags_json(r.flags);
  return j;
}

std::optional<Failure> do_wiener_test(Run& run, const Loaded& L, const Options& o) {
  WienerConfig cfg = L.cfg.wiener;
  ScaleOracle::Kind kind = cfg.oracle.kind;
  cfg.oracle = capacity_decl(L, o).oracle();
  cfg.oracle.kind = kind;
  cfg.oracle.cap = L.cfg.cap;
  if (!o.oracle.empty()) {
    if (o.oracle == "variational") cfg.oracle.kind = ScaleOracle::Kind::Variational;
    else if (o.oracle == "catalog") cfg.oracle.kind = ScaleOracle::Kind::Catalog;
    else throw InputError("--oracle must be variational or catalog");
  }
  if (o.jmin) cfg.jMin = o.jmin;
  if (o.jmax) cfg.jMax = o.jmax;
  if (cfg.jMin > cfg.jMax) throw InputError("--jmin exceeds --jmax");
  WienerReport r = wiener_terms(L.scene.spec, base_point(L, o), cfg, L.scene.catalog);
  Json j = wiener_json(r);
  j["scene"] = L.scene.name;
  j["oracle"] = cfg.oracle.kind == ScaleOracle::Kind::Catalog ? "catalog" : "variational";
  CsvWriter csv({"j", "r", "capRatio", "term", "partialSum", "missing"});
  for (size_t i = 0; i < r.terms.size(); ++i) {
    const WienerTerm& t = r.terms[i];
    csv.row({std::to_string(t.j), CsvWriter::num(t.r), t.missing ? "" : CsvWriter::num(t.capRatio),
             t.missing ? "" : CsvWriter::num(t.term), CsvWriter::num(r.partialSums[i]), t.missing ? "1" : "0"});
  }
  run.text(run.sibling(".terms.csv"), csv.str());
  run.main_json(j);
  std::cout << to_string(r.verdict) << "\n";
  return {};
}

Json probe_json(const RadialProbe& p) {
  Json j;
  j["directions"] = p.directions.size();
  j["avoiding"] = p.xi.size();
  if (p.chosen) j["chosen"] = *p.chosen;
  j["chosenLength"] = p.rayLength;
  j["minAvoidingLength"] = p.minAvoidingLength;
  j["minAvoidingDivergent"] = p.minAvoidingDivergent;
  j["missingShells"] = p.missingShells;
  j["flags"] = flags_json(p.flags);
  return j;
}

std::optional<Failure> do_probe_completeness(Run& run, const Loaded& L, const Options& o) {
  CompletenessConfig cfg;
  cfg.grid = solution_grid(L, o);
  cfg.solve = L.cfg.solve;
  cfg.probe = L.cfg.probe;
  cfg.probe.oracle = capacity_decl(L, Options{}).oracle();
  cfg.probe.oracle.cap = L.cfg.cap;
  if (L.cfg.wiener.oracle.kind == ScaleOracle::Kind::Catalog) cfg.probe.oracle.kind = ScaleOracle::Kind::Catalog;
  cfg.stability = L.cfg.stability;
  const Vec p = base_point(L, o);
  CompletenessReport r = completeness_probe(L.scene.spec, p, cfg);

  Json j;
  j["scene"] = L.scene.name;
  j["basePoint"] = to_json(p);
  j["verdict"] = to_string(r.verdict);
  j["reasons"] = r.reasons;
  j["boundTrend"] = to_string(r.bound.trend);
  if (r.chosen) {
    j["chosen"] = *r.chosen;
    j["chosenDirection"] = to_json(r.fine.directions[*r.chosen]);
  }
  if (r.chosenCoarse) j["chosenCoarse"] = *r.chosenCoarse;
  if (r.chosenFine) j["chosenFine"] = *r.chosenFine;
  j["finiteRays"] = r.finiteRays.size();
  j["boundRatio"] = r.boundRatio;
  j["coarse"] = probe_json(r.coarse);
  j["coarse"]["h"] = cfg.grid.h;
  j["fine"] = probe_json(r.fine);
  j["fine"]["h"] = 0.5 * cfg.grid.h;
  j["flags"] = flags_json(r.flags);

  CsvWriter shells({"j", "r", "b", "partialSum", "missing"});
  for (size_t i = 0; i < r.bound.terms.size(); ++i) {
    const ShellBound& b = r.bound.terms[i];
    shells.row({std::to_string(b.j), CsvWriter::num(b.r), b.missing ? "" : CsvWriter::num(b.b),
                CsvWriter::num(r.bound.partialSums[i]), b.missing ? "1" : "0"});
  }
  CsvWriter rays({"direction", "lengthCoarse", "lengthFine", "divergentFine"});
  for (size_t d = 0; d < r.fine.directions.size(); ++d) {
    double lc = d < r.coarse.lengths.size() ? r.coarse.lengths[d] : -1, lf = r.fine.lengths[d];
    if (lc < 0 && lf < 0) continue;  // meets K on both meshes
    rays.row({std::to_string(d), CsvWriter::num(lc), CsvWriter::num(lf), r.fine.divergentRay[d] ? "1" : "0"});
  }
  run.text(run.sibling(".shells.csv"), shells.str());
  run.text(run.sibling(".rays.csv"), rays.str());
  run.main_json(j);
  std::cout << to_string(r.verdict) << "\n";
  return {};
}

std::optional<Failure> do_probe_ray(Run& run, const Loaded& L, const Options& o) {
  const int n = L.scene.dimension;
  if (o.direction.empty()) throw InputError("--direction is required");
  Vec w = parse_point(o.direction, n);
  if (!(w.norm() > 0)) throw InputError("--direction must be nonzero");
  w.normalize();
  const Vec p = base_point(L, o);
  GridSpec g = solution_grid(L, o);
  GridSpec gf = with_cells(g, g.cells[0] * 2);
  SolutionField sc = maximal_solution(L.scene.spec, g, L.cfg.solve);
  SolutionField sf = maximal_solution(L.scene.spec, gf, L.cfg.solve);
  const double len = L.cfg.probe.rayLength;
  Curve c({p + len * w, p}, p);
  LengthReport rep = length_trend({&sc, &sf}, c, L.cfg.probe.length);
  Json j;
  j["scene"] = L.scene.name;
  j["basePoint"] = to_json(p);
  j["direction"] = to_json(w);
  j["rayLength"] = len;
  j["totalLength"] = rep.totalLength;
  j["divergent"] = rep.divergent;
  j["stoppedAt"] = rep.stoppedAt;
  j["completeShells"] = rep.completeShells;
  j["outside"] = rep.outside;
  j["refinementTrend"] = rep.refinementTrend;
  j["flags"] = flags_json(sc.flags);
  for (const auto& f : sf.flags) j["flags"].push_back(f);
  CsvWriter csv({"j", "contribution"});
  for (const auto& [s, v] : rep.perShell) csv.row({std::to_string(s), CsvWriter::num(v)});
  run.text(run.sibling(".shells.csv"), csv.str());
  run.main_json(j);
  std::cout << "length " << CsvWriter::num(rep.totalLength) << (rep.divergent ? " divergent" : "") << "\n";
  if (auto f = unconverged(sc)) return f;
  return unconverged(sf);
}

// shape or zeta file in place of a scene
std::optional<Failure> with_file(const Options& o, const std::string& path,
                                 const std::function<std::optional<Failure>(Run&, const std::string&)>& h) {
  std::string text = read_file(path);
  set_threads(o.threads);
  Run run(o, sha256_hex(text), sha256_hex(""), g_args);
  auto f = h(run, text);
  run.finish();
  return f;
}

std::optional<Failure> do_wiener_classify(const Options& o) {
  if (o.shape.empty() == o.scene.empty()) throw InputError("give exactly one of --shape and --scene");
  auto handle = [&](Run& run, const CatalogShape& s, const std::string& name) -> std::optional<Failure> {
    Classification c = classify_catalog(s);
    Json j;
    j["shape"] = name;
    j["dimension"] = s.n;
    j["verdict"] = to_string(c.verdict);
    j["criterion"] = c.criterion;
    run.main_json(j);
    std::cout << to_string(c.verdict) << ": " << c.criterion << "\n";
    return {};
  };
  if (!o.shape.empty())
    return with_file(o, o.shape, [&](Run& run, const std::string&) {
      return handle(run, load_shape(o.shape), fs::path(o.shape).stem().string());
    });
  return with_scene(o, [&](Run& run, const Loaded& L) -> std::optional<Failure> {
    if (!L.scene.catalog) throw InputError("scene has no catalog shape", "/catalog");
    return handle(run, *L.scene.catalog, L.scene.name);
  });
}

std::optional<Failure> do_wiener_bridge(const Options& o) {
  if (o.zeta.empty()) throw InputError("--zeta is required");
  return with_file(o, o.zeta, [&](Run& run, const std::string& text) -> std::optional<Failure> {
    Json j = parse_json(text, o.zeta);
    if (!j.is_object()) throw InputError("expected an object", "");
    for (const auto& [k, v] : j.items())
      if (k != "zeta" && k != "kappa" && k != "J" && k != "monotone") throw InputError("unknown key '" + k + "'", "/" + k);
    if (!j.contains("zeta") || !j["zeta"].is_array()) throw InputError("zeta must be an array", "/zeta");
    std::vector<double> z;
    for (size_t i = 0; i < j["zeta"].size(); ++i) {
      if (!j["zeta"][i].is_number()) throw InputError("entry must be a number", "/zeta/" + std::to_string(i));
      z.push_back(j["zeta"][i].get<double>());
    }
    double kappa = 0;
    if (j.contains("kappa")) {
      if (!j["kappa"].is_number()) throw InputError("kappa must be a number", "/kappa");
      kappa = j["kappa"];
    }
    int J = 0;
    if (j.contains("J")) {
      if (!j["J"].is_number_integer()) throw InputError("J must be an integer", "/J");
      J = j["J"];
    }
    Monotone mono = Monotone::NonIncreasing;
    if (j.contains("monotone")) {
      std::string m = j["monotone"].is_string() ? j["monotone"].get<std::string>() : "";
      if (m == "nondecreasing") mono = Monotone::NonDecreasing;
      else if (m != "nonincreasing") throw InputError("monotone must be nonincreasing or nondecreasing", "/monotone");
    }
    BridgeResult b;
    try {
      b = dyadic_bridge(z, kappa, J, mono);
    } catch (const InputError& e) {
      throw InputError(e.what(), "/zeta");
    }
    Json out;
    out["lowerSum"] = b.lowerSum;
    out["integralEstimate"] = b.integralEstimate;
    out["upperSum"] = b.upperSum;
    out["divergent"] = b.divergent;
    out["tailRatio"] = b.tailRatio;
    out["lowerConstant"] = b.lowerConstant;
    out["upperConstant"] = b.upperConstant;
    out["partialSums"] = b.partialSums;
    run.main_json(out);
    std::cout << (b.divergent ? "divergent" : "integral " + CsvWriter::num(b.integralEstimate)) << "\n";
    return {};
  });
}

void print_error(const std::string& what, const std::string& pointer) {
  Json e{{"error", what}};
  e["pointer"] = pointer;
  std::cerr << e.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) g_args.emplace_back(argv[i]);
  Options o;
  CLI::App app{"yamabe: capacity, blow-up solutions, Wiener tests and completeness probes"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--scene", o.scene, "scene file (JSON)");
  app.add_option("--cfg", o.cfg, "solver config file (JSON), overrides the scene's config block");
  app.add_option("--grid", o.grid, "cells along the first axis of the grid the command solves on")->check(CLI::Range(2, 100000));
  app.add_option("--out", o.out, "main output file; YAMABE_OUT_DIR replaces its directory");
  app.add_option("--threads", o.threads, "worker cap; results do not depend on it")->check(CLI::Range(1, 256));
  app.add_flag("--dump", o.dump, "also write fields as float64 dumps with JSON sidecars");

  std::function<std::optional<Failure>()> action;
  auto scene_cmd = [&](CLI::App* sub, std::function<std::optional<Failure>(Run&, const Loaded&)> h) {
    sub->callback([&, h] { action = [&, h] { return with_scene(o, h); }; });
  };

  auto* cap = app.add_subcommand("cap", "capacity")->require_subcommand(1);
  scene_cmd(cap->add_subcommand("estimate", "capacity of K on the scene's capacity grid"),
            [&](Run& r, const Loaded& L) { return do_cap_estimate(r, L, o); });
  auto* cut = cap->add_subcommand("cutoff", "cutoff pair built from the extremal function");
  cut->add_option("--m", o.m, "cutoff exponent, default (n+2)/2");
  scene_cmd(cut, [&](Run& r, const Loaded& L) { return do_cap_cutoff(r, L, o); });

  auto* pde = app.add_subcommand("pde", "semilinear solves")->require_subcommand(1);
  scene_cmd(pde->add_subcommand("dirichlet", "K cells and the box edge carry data"),
            [&](Run& r, const Loaded& L) { return do_pde_boundary(r, L, o, false); });
  scene_cmd(pde->add_subcommand("large", "blow-up on K, data on the box edge"),
            [&](Run& r, const Loaded& L) { return do_pde_boundary(r, L, o, true); });
  scene_cmd(pde->add_subcommand("maximal", "maximal solution of the complement of K"),
            [&](Run& r, const Loaded& L) { return do_pde_maximal(r, L, o); });
  auto* verify = pde->add_subcommand("verify", "estimate checks, one CSV record")->require_subcommand(1);
  auto* mainest = verify->add_subcommand("mainest", "two-sided pointwise estimate");
  mainest->add_option("--radius", o.radius, "K must lie in B(0, radius)");
  scene_cmd(mainest, [&](Run& r, const Loaded& L) { return do_pde_verify(r, L, o, false); });
  scene_cmd(verify->add_subcommand("integral", "integral estimate"),
            [&](Run& r, const Loaded& L) { return do_pde_verify(r, L, o, true); });

  auto* wie = app.add_subcommand("wiener", "Wiener series and the catalog")->require_subcommand(1);
  auto* test = wie->add_subcommand("test", "dyadic capacity series at a point of K");
  test->add_option("--point", o.point, "base point, comma separated");
  test->add_option("--jmax", o.jmax, "last scale")->check(CLI::Range(1, 10));
  test->add_option("--jmin", o.jmin, "first scale")->check(CLI::Range(1, 10));
  test->add_option("--oracle", o.oracle, "variational or catalog")->check(CLI::IsMember({"variational", "catalog"}));
  scene_cmd(test, [&](Run& r, const Loaded& L) { return do_wiener_test(r, L, o); });
  auto* cls = wie->add_subcommand("classify", "closed-form verdict of a catalog shape");
  cls->add_option("--shape", o.shape, "shape file {dimension, shape}");
  cls->callback([&] { action = [&] { return do_wiener_classify(o); }; });
  auto* br = wie->add_subcommand("bridge", "dyadic sum against the integral");
  br->add_option("--zeta", o.zeta, "file {zeta, kappa, J, monotone}");
  br->callback([&] { action = [&] { return do_wiener_bridge(o); }; });

  auto* probe = app.add_subcommand("probe", "completeness of the conformal metric")->require_subcommand(1);
  auto* comp = probe->add_subcommand("completeness", "shell bound plus radial ray probe on two meshes");
  comp->add_option("--point", o.point, "base point on K, comma separated");
  scene_cmd(comp, [&](Run& r, const Loaded& L) { return do_probe_completeness(r, L, o); });
  auto* ray = probe->add_subcommand("ray", "conformal length of one straight ray into the base point");
  ray->add_option("--point", o.point, "base point on K");
  ray->add_option("--direction", o.direction, "ray direction, comma separated");
  scene_cmd(ray, [&](Run& r, const Loaded& L) { return do_probe_ray(r, L, o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto f = action();
    if (f) {
      Json e{{"error", f->what}, {"flags", f->flags}};
      std::cerr << e.dump() << "\n";
      return 3;
    }
  } catch (const InputError& e) {
    print_error(e.what(), e.pointer());
    return 2;
  } catch (const NumericalError& e) {
    Json err{{"error", e.what()}, {"flags", Json::array({e.what()})}};
    std::cerr << err.dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
