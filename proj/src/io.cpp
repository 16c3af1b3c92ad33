#include "yamabe/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace yamabe {

static_assert(std::endian::native == std::endian::little, "field dumps assume a little-endian host");

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr)) throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(what + ": " + e.what(), "");
  }
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const GridSpec& g) {
  Json j;
  j["dimension"] = g.dimension;
  j["reduction"] = to_string(g.reduction);
  j["lo"] = g.lo;
  j["hi"] = g.hi;
  j["cells"] = g.cells;
  j["h"] = g.h;
  j["center"] = to_json(g.center);
  if (g.axis.size()) j["axis"] = to_json(g.axis);
  return j;
}

void write_field(const std::string& path, const ScalarField& f, const Json& extra) {
  const long N = f.grid.size();
  std::string buf(size_t(N) * 8, '\0');
  for (long c = 0; c < N; ++c) {
    double v = f.defined[c] ? f.values(c) : std::numeric_limits<double>::quiet_NaN();
    std::memcpy(&buf[size_t(c) * 8], &v, 8);
  }
  write_file(path, buf);
  Json side;
  side["format"] = "float64-le";
  side["order"] = "row-major, last axis fastest";
  side["shape"] = f.grid.cells;
  side["grid"] = to_json(f.grid);
  side["undefined"] = "NaN";
  side["sha256"] = sha256_hex(buf);
  for (const auto& [k, v] : extra.items()) side[k] = v;
  write_file(path + ".json", side.dump(2) + "\n");
}

ScalarField read_field(const std::string& path) {
  Json side = parse_json(read_file(path + ".json"), path + ".json");
  const Json& g = side.at("grid");
  GridSpec grid;
  grid.dimension = g.at("dimension");
  grid.reduction = reduction_from_string(g.at("reduction").get<std::string>());
  grid.lo = g.at("lo").get<std::vector<double>>();
  grid.hi = g.at("hi").get<std::vector<double>>();
  grid.cells = g.at("cells").get<std::vector<int>>();
  grid.h = g.at("h");
  auto vec = [](const Json& a) {
    auto s = a.get<std::vector<double>>();
    return Vec(Eigen::Map<const Vec>(s.data(), Eigen::Index(s.size())));
  };
  grid.center = vec(g.at("center"));
  if (g.contains("axis")) grid.axis = vec(g.at("axis"));
  grid.validate();
  std::string buf = read_file(path);
  if (long(buf.size()) != grid.size() * 8) throw InputError(path + ": size does not match the sidecar");
  ScalarField f(grid, 0.0);
  for (long c = 0; c < grid.size(); ++c) {
    double v;
    std::memcpy(&v, &buf[size_t(c) * 8], 8);
    f.defined[c] = !std::isnan(v);
    f.values(c) = f.defined[c] ? v : 0.0;
  }
  return f;
}

SphereField parse_sphere_samples(const Json& j, int n) {
  check_dimension(n);
  if (!j.is_array()) throw InputError("sphere samples must be an array", "");
  SphereField out;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string at = "/" + std::to_string(i);
    const Json& s = j[i];
    if (!s.is_object()) throw InputError("sample must be an object", at);
    for (const auto& [k, v] : s.items())
      if (k != "point" && k != "value") throw InputError("unknown key '" + k + "'", at + "/" + k);
    if (!s.contains("point") || !s["point"].is_array() || s["point"].size() != size_t(n + 1))
      throw InputError("point must have " + std::to_string(n + 1) + " coordinates", at + "/point");
    Vec p(n + 1);
    for (int a = 0; a <= n; ++a) {
      if (!s["point"][a].is_number()) throw InputError("coordinate must be a number", at + "/point/" + std::to_string(a));
      p(a) = s["point"][a].get<double>();
    }
    if (std::abs(p.norm() - 1.0) > 1e-10) throw InputError("point is not on the unit sphere", at + "/point");
    if (!s.contains("value") || !s["value"].is_number()) throw InputError("value must be a number", at + "/value");
    out.push_back({p, s["value"].get<double>()});
  }
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("csv row width");
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  return *this;
}

std::string CsvWriter::num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string RunManifest::digest() const {
  Json j;
  j["sceneDigest"] = sceneDigest;
  j["configDigest"] = configDigest;
  j["toolVersion"] = toolVersion;
  j["command"] = canonicalCommand;
  return sha256_hex(j.dump());
}

Json RunManifest::to_json() const {
  Json j;
  j["sceneDigest"] = sceneDigest;
  j["configDigest"] = configDigest;
  j["toolVersion"] = toolVersion;
  j["command"] = command;
  j["digest"] = digest();
  j["outputs"] = Json::array();
  for (const auto& [p, h] : outputs) j["outputs"].push_back({{"path", p}, {"sha256", h}});
  return j;
}

}  // namespace yamabe
