#pragma once

// Run configuration parsing with dotted-path overrides.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "qkl/oqho.hpp"

namespace qkl::cli {

using nlohmann::json;

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("config '" + path + "' is not valid JSON: " + e.what());
  }
}

/// key=value with a dotted key; the value is read as JSON when it parses, else as a string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw config_error("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw config_error("override key '" + key + "' has an empty component");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw config_error("override key '" + key + "' descends into a non-object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw config_error("override key '" + key + "' descends into a non-object");
  (*node)[parts.back()] = std::move(value);
}

inline RealMatrix parse_matrix(const json& j, const std::string& name) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw config_error(name + ": matrix must be an object with rows, cols and data");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer())
    throw config_error(name + ": rows and cols must be integers");
  const long rows = j["rows"].get<long>(), cols = j["cols"].get<long>();
  if (rows <= 0 || cols <= 0) throw config_error(name + ": rows and cols must be positive");
  const json& data = j["data"];
  if (!data.is_array() || static_cast<long>(data.size()) != rows)
    throw config_error(name + ": data must hold " + std::to_string(rows) + " rows");
  RealMatrix m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!data[r].is_array() || static_cast<long>(data[r].size()) != cols)
      throw config_error(name + ": row " + std::to_string(r) + " must hold " + std::to_string(cols) + " entries");
    for (long c = 0; c < cols; ++c) {
      if (!data[r][c].is_number()) throw config_error(name + ": non-numeric entry");
      m(r, c) = data[r][c].get<double>();
    }
  }
  return m;
}

inline json matrix_json(const RealMatrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    data.push_back(row);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

struct RunConfig {
  json model;
  double T = 1.0;
  int basis_K = 64;
  int grid = 200;
  std::optional<RealMatrix> Pi;
  std::optional<RealMatrix> H;
  std::optional<int> N;  // empty means "auto"
  int fock_d = 0;        // 0 picks the per-N default
  std::int64_t seed = 0;
  std::string out_dir = "out";
};

namespace detail {
template <typename T>
T number(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  const json& v = doc[key];
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw config_error(std::string(key) + " must be an integer");
  } else {
    if (!v.is_number()) throw config_error(std::string(key) + " must be a number");
  }
  return v.get<T>();
}
}  // namespace detail

inline RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw config_error("config must be a JSON object");
  static const std::vector<std::string> known = {"model", "T", "basis_K", "grid", "Pi", "H",
                                                 "N", "fock_d", "seed", "out_dir"};
  for (const auto& [key, _] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw config_error("unknown config key '" + key + "'");
  RunConfig c;
  if (doc.contains("model")) c.model = doc["model"];
  c.T = detail::number<double>(doc, "T", 1.0);
  if (!(c.T > 0.0) || !std::isfinite(c.T)) throw config_error("T must be positive");
  c.basis_K = detail::number<int>(doc, "basis_K", 64);
  if (c.basis_K < 1) throw config_error("basis_K must be >= 1");
  c.grid = detail::number<int>(doc, "grid", 200);
  if (c.grid < 16) throw config_error("grid must be >= 16");
  if (doc.contains("Pi") && !doc["Pi"].is_null()) c.Pi = parse_matrix(doc["Pi"], "Pi");
  if (doc.contains("H") && !doc["H"].is_null()) c.H = parse_matrix(doc["H"], "H");
  if (doc.contains("N") && !doc["N"].is_null()) {
    const json& n = doc["N"];
    if (n.is_string() && n.get<std::string>() == "auto") {
    } else if (n.is_number_integer() && n.get<int>() >= 1) {
      c.N = n.get<int>();
    } else {
      throw config_error("N must be a positive integer or \"auto\"");
    }
  }
  c.fock_d = detail::number<int>(doc, "fock_d", 0);
  if (c.fock_d != 0 && c.fock_d < 8) throw config_error("fock_d must be >= 8");
  c.seed = detail::number<std::int64_t>(doc, "seed", 0);
  if (doc.contains("out_dir")) {
    if (!doc["out_dir"].is_string()) throw config_error("out_dir must be a string");
    c.out_dir = doc["out_dir"].get<std::string>();
  }
  return c;
}

/// {theta, R, M} or {A, B, theta}; library precondition failures surface as config errors.
inline OqhoModel build_config_model(const RunConfig& c) {
  const json& m = c.model;
  if (!m.is_object() || !m.contains("theta")) throw config_error("model must be an object with theta");
  const RealMatrix theta = parse_matrix(m["theta"], "model.theta");
  const bool rm = m.contains("R") && m.contains("M");
  const bool ab = m.contains("A") && m.contains("B");
  if (rm == ab) throw config_error("model must give exactly one of {theta, R, M} or {A, B, theta}");
  for (const auto& [key, _] : m.items())
    if (key != "theta" && key != (rm ? "R" : "A") && key != (rm ? "M" : "B"))
      throw config_error("unknown model key '" + key + "'");
  try {
    if (rm) return build_model(theta, parse_matrix(m["R"], "model.R"), parse_matrix(m["M"], "model.M"));
    return model_from_dynamics(parse_matrix(m["A"], "model.A"), parse_matrix(m["B"], "model.B"), theta);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

/// FNV-1a 64-bit digest of the compact JSON dump (object keys sorted).
inline std::string content_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qkl::cli
