#include "doctest.h"

#include "yamabe/scene.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

using namespace yamabe;
namespace fs = std::filesystem;

namespace {

std::string env(const char* k) {
  const char* v = std::getenv(k);
  REQUIRE_MESSAGE(v, k << " is not set");
  return v;
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("yamabe_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::string& args, const fs::path& dir, const std::string& envPrefix = "") {
  fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  std::string cmd = "cd '" + dir.string() + "' && " + envPrefix + " '" + env("YAMABE_BIN") + "' " + args + " >'" +
                    o.string() + "' 2>'" + e.string() + "'";
  int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, read_file(o.string()), read_file(e.string())};
}

std::string scene(const std::string& name) { return env("YAMABE_SCENES") + "/" + name + ".json"; }

Json load_json(const fs::path& p) { return parse_json(read_file(p.string()), p.string()); }

void write_json(const fs::path& p, const Json& j) { write_file(p.string(), j.dump(2)); }

}  // namespace

TEST_CASE("cap estimate on the ball scene") {
  auto dir = scratch("cap");
  auto r = run("cap estimate --scene " + scene("ball") + " --out result.json", dir);
  REQUIRE(r.code == 0);
  Json j = load_json(dir / "result.json");
  CHECK(j["value"].get<double>() > 0);
  Json m = load_json(dir / "result.manifest.json");
  CHECK(j["manifestDigest"] == m["digest"]);
  CHECK(m["sceneDigest"] == sha256_hex(read_file(scene("ball"))));
  REQUIRE(m["outputs"].size() == 1);
  CHECK(m["outputs"][0]["sha256"] == sha256_hex(read_file((dir / "result.json").string())));
  CHECK(m["command"].get<std::string>().find("cap estimate") != std::string::npos);
}

TEST_CASE("schema errors exit 2 with a pointer") {
  auto dir = scratch("schema");
  Json s = load_json(scene("ball"));
  s["primitives"][0]["radius"] = -0.5;
  write_json(dir / "neg.json", s);
  auto r = run("cap estimate --scene neg.json", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("\"pointer\":\"/primitives/0/radius\"") != std::string::npos);
  CHECK(!fs::exists(dir / "result.json"));

  s = load_json(scene("ball"));
  s["grid"]["spacing"] = 1;
  write_json(dir / "extra.json", s);
  r = run("pde maximal --scene extra.json", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("/grid/spacing") != std::string::npos);

  write_json(dir / "cfg.json", Json{{"solve", {{"damping", 2.0}}}});
  r = run("pde maximal --scene " + scene("ball") + " --cfg cfg.json", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("/solve") != std::string::npos);

  write_file((dir / "broken.json").string(), "{\"dimension\": 3,");
  CHECK(run("cap estimate --scene broken.json", dir).code == 2);
  CHECK(run("cap estimate", dir).code == 2);
  CHECK(run("frobnicate", dir).code == 2);
}

TEST_CASE("probe completeness on the point scene") {
  auto dir = scratch("probe");
  auto r = run("probe completeness --scene " + scene("point") + " --out report.json", dir);
  REQUIRE(r.code == 0);
  CHECK(r.out == "IncompleteTrend\n");
  Json j = load_json(dir / "report.json");
  CHECK(j["verdict"] == "IncompleteTrend");
  REQUIRE(fs::exists(dir / "report.shells.csv"));
  std::string rays = read_file((dir / "report.rays.csv").string());
  CHECK(rays.rfind("direction,lengthCoarse,lengthFine,divergentFine\n", 0) == 0);
  CHECK(load_json(dir / "report.manifest.json")["outputs"].size() == 3);
}

TEST_CASE("probe ray on the point scene") {
  auto dir = scratch("ray");
  auto r = run("probe ray --scene " + scene("point") + " --direction 1,0,0 --out ray.json", dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("length ", 0) == 0);
  Json j = load_json(dir / "ray.json");
  CHECK(j["direction"] == Json::array({1.0, 0.0, 0.0}));
  CHECK(j["totalLength"].get<double>() == 0);  // the maximal solution of a point vanishes
  CHECK(fs::exists(dir / "ray.shells.csv"));
  CHECK(run("probe ray --scene " + scene("point") + " --direction 0,0,0 --out bad.json", dir).code == 2);
}

TEST_CASE("catalog scenes classify as documented") {
  auto dir = scratch("classify");
  for (const auto& e : fs::directory_iterator(env("YAMABE_SCENES"))) {
    Scene s = load_scene(e.path().string());
    if (!s.catalog) continue;
    REQUIRE(s.expect);
    auto r = run("wiener classify --scene " + e.path().string() + " --out c.json", dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind(std::string(to_string(*s.expect)) + ": ", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  }
  write_json(dir / "shape.json", Json{{"dimension", 5}, {"shape", {{"kind", "cusp"}, {"profile", {{"a", 2}}}}}});
  auto r = run("wiener classify --shape shape.json", dir);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("NoMetric: ", 0) == 0);
  write_json(dir / "shape.json", Json{{"dimension", 4}, {"shape", {{"kind", "submanifold"}, {"k", 4}}}});
  r = run("wiener classify --shape shape.json", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("/shape/k") != std::string::npos);
}

TEST_CASE("wiener test writes terms and a csv") {
  auto dir = scratch("wiener");
  auto r = run("wiener test --scene " + scene("point") + " --jmax 6 --oracle catalog --out w.json", dir);
  REQUIRE(r.code == 0);
  CHECK(r.out == "ConvergesNumerically\n");
  Json j = load_json(dir / "w.json");
  CHECK(j["terms"].size() == 6);
  std::string csv = read_file((dir / "w.terms.csv").string());
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(run("wiener test --scene " + scene("point") + " --point 1,0,0", dir).code == 2);
  CHECK(run("wiener test --scene " + scene("point") + " --point 1,0", dir).code == 2);
}

TEST_CASE("wiener bridge") {
  auto dir = scratch("bridge");
  write_json(dir / "z.json", Json{{"zeta", {1, 1, 1, 1, 1, 1, 1, 1}}, {"kappa", 1.0}, {"J", 0}});
  auto r = run("wiener bridge --zeta z.json --out b.json", dir);
  REQUIRE(r.code == 0);
  Json b = load_json(dir / "b.json");
  CHECK(!b["divergent"].get<bool>());
  CHECK(b["upperSum"].get<double>() > b["lowerSum"].get<double>());
  write_json(dir / "z.json", Json{{"zeta", {1, 0.5, 0.7}}, {"J", 0}});
  r = run("wiener bridge --zeta z.json", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("index 2") != std::string::npos);
}

TEST_CASE("pde subcommands and field dumps") {
  auto dir = scratch("pde");
  Json s{{"name", "small ball"},
         {"dimension", 3},
         {"primitives", {{{"type", "ball"}, {"center", {0, 0, 0}}, {"radius", 0.2}}}},
         {"grid", {{"reduction", "radial"}, {"radius", 1}, {"cells", 100}}},
         {"capacity", {{"reduction", "radial"}, {"cells", 128}}},
         {"config", {{"solve", {{"crossValidate", false}, {"outerRadii", {2, 10}}}}, {"verify", {{"radius", 0.25}}}}}};
  write_json(dir / "ball.json", s);
  auto r = run("pde maximal --scene ball.json --dump --out m.json", dir);
  REQUIRE(r.code == 0);
  Json m = load_json(dir / "m.json");
  CHECK(m["converged"].get<bool>());
  CHECK(m["farFieldA"].get<double>() > 0);
  ScalarField u = read_field((dir / "m.u.bin").string());
  CHECK(u.grid.cells[0] == m["grid"]["cells"][0].get<int>());
  Json side = load_json(dir / "m.u.bin.json");
  CHECK(side["manifestDigest"] == m["manifestDigest"]);
  CHECK(side["sha256"] == sha256_hex(read_file((dir / "m.u.bin").string())));
  CHECK(load_json(dir / "m.manifest.json")["outputs"].size() == 3);

  r = run("pde verify mainest --scene ball.json --out est.csv", dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("mainest,small ball,0.25,", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  CHECK(read_file((dir / "est.csv").string()) == r.out);

  // a Newton budget of one step cannot converge: exit 3 with the flags
  write_json(dir / "tight.json", Json{{"solve", {{"maxNewton", 1}}}});
  r = run("pde maximal --scene ball.json --cfg tight.json --out t.json", dir);
  CHECK(r.code == 3);
  CHECK(r.err.find("\"flags\"") != std::string::npos);
  CHECK(fs::exists(dir / "t.json"));

  s["config"]["boundary"] = {{"inner", 2.0}, {"outer", 0.5}};
  s["grid"] = {{"reduction", "full"}, {"halfWidth", 1}, {"cells", 12}};
  write_json(dir / "box.json", s);
  r = run("pde dirichlet --scene box.json --out d.json", dir);
  CHECK(r.code == 0);
  CHECK(load_json(dir / "d.json")["kind"] == "dirichlet");
}

TEST_CASE("--grid and the output directory variable") {
  auto dir = scratch("grid"), other = scratch("grid_out");
  auto r = run("cap estimate --scene " + scene("ball") + " --grid 24 --out sub/c.json", dir,
               "YAMABE_OUT_DIR='" + other.string() + "'");
  REQUIRE(r.code == 0);
  CHECK(!fs::exists(dir / "sub"));
  Json j = load_json(other / "c.json");
  CHECK(j["grid"]["cells"][0] == 24);
}

TEST_CASE("outputs do not depend on the thread count") {
  auto a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "wiener test --scene " + scene("ball") + " --jmax 4 --out w.json";
  auto ra = run(args + " --threads 1", a), rb = run(args + " --threads 3", b);
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(read_file((a / "w.json").string()) == read_file((b / "w.json").string()));
  CHECK(read_file((a / "w.terms.csv").string()) == read_file((b / "w.terms.csv").string()));
}

TEST_CASE("sphere samples") {
  Json ok = Json::array({{{"point", {0, 0, 0, -1}}, {"value", 2.0}}, {{"point", {0.6, 0, 0.8, 0}}, {"value", 1.0}}});
  auto f = parse_sphere_samples(ok, 3);
  REQUIRE(f.size() == 2);
  CHECK(f[1].value == 1.0);
  Json bad = ok;
  bad[1]["point"][0] = 0.61;
  try {
    parse_sphere_samples(bad, 3);
    FAIL("accepted a point off the sphere");
  } catch (const InputError& e) {
    CHECK(e.pointer() == "/1/point");
  }
  bad = ok;
  bad[0]["weight"] = 1;
  CHECK_THROWS_AS(parse_sphere_samples(bad, 3), InputError);
  CHECK_THROWS_AS(parse_sphere_samples(ok, 4), InputError);
}

TEST_CASE("field dumps are little-endian row-major") {
  auto dir = scratch("dump");
  GridSpec g = GridSpec::axisymmetric(3, -1, 1, 1, 0.5, Vec(), Vec());
  ScalarField f(g, 0.0);
  for (long c = 0; c < g.size(); ++c) f.values(c) = double(c);
  f.defined[3] = 0;
  write_field((dir / "f.bin").string(), f);
  std::string raw = read_file((dir / "f.bin").string());
  REQUIRE(raw.size() == size_t(g.size()) * 8);
  // cell (1, 0) is the second row: index cells[1]
  double v;
  std::memcpy(&v, raw.data() + 8 * g.cells[1], 8);
  CHECK(v == double(g.cells[1]));
  CHECK(static_cast<unsigned char>(raw[8 * 1 + 6]) == 0xf0);  // 1.0 = 0x3ff0000000000000
  ScalarField back = read_field((dir / "f.bin").string());
  CHECK(!back.defined[3]);
  CHECK(back.values(5) == 5.0);
}

TEST_CASE("csv numbers round-trip") {
  CHECK(std::stod(CsvWriter::num(0.1)) == 0.1);
  CHECK(CsvWriter::num(std::nan("")) == "nan");
  CsvWriter w({"a", "b"});
  CHECK_THROWS(w.row({"1"}));
}
