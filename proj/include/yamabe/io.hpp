#pragma once

#include "yamabe/conformal.hpp"

#include "json.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace yamabe {

using Json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

// parse with the error mapped to InputError at the document root
Json parse_json(std::string_view text, const std::string& what);

Json to_json(const Vec& v);
Json to_json(const GridSpec& g);

// little-endian float64, row-major (last grid axis fastest), plus `path.json` describing it.
// Undefined cells are written as NaN.
void write_field(const std::string& path, const ScalarField& f, const Json& extra = Json::object());
ScalarField read_field(const std::string& path);

// [{"point": [x_0..x_n], "value": v}, ...], every point on the unit sphere of R^{n+1} to 1e-10
SphereField parse_sphere_samples(const Json& j, int n);

// fixed-format rows, 17 significant digits
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  static std::string num(double v);
  std::string str() const { return text_; }

private:
  size_t width_;
  std::string text_;
};

struct RunManifest {
  std::string sceneDigest;
  std::string configDigest;
  std::string toolVersion;
  std::string command;
  // command with worker-count flags removed; it is what the digest covers
  std::string canonicalCommand;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256

  // hash of everything but the outputs, embedded in every output
  std::string digest() const;
  Json to_json() const;
};

}  // namespace yamabe
