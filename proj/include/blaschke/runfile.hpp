#pragma once

// Run files: JSON or TOML documents describing a metric, a graph patch or a
// harmonic-factory run. TOML is converted to JSON first so both formats share
// one schema:
//
//   harmonic       = { name = "constant", params = [] }   # factory run
//   curvature_sign = -1
//   phi            = "expression"                         # or a metric
//   psi            = "expression"                         # or a graph
//   lambda, beta, sign, F0                                # construction data
//   [chart] x = [lo, hi], y = [lo, hi], nx, ny, epsilon
//   [thresholds] check, construct, reconstruct

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "blaschke/error.hpp"
#include "blaschke/grid.hpp"
#include "blaschke/pipeline.hpp"

namespace blaschke {

inline nlohmann::json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    auto out = nlohmann::json::object();
    for (const auto& [key, value] : *t) out[std::string(key.str())] = toml_to_json(value);
    return out;
  }
  if (auto a = node.as_array()) {
    auto out = nlohmann::json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  throw ConfigError("unsupported TOML value (dates and times are not used)");
}

enum class RunFormat { json, toml };

inline nlohmann::json parse_run_text(const std::string& text, RunFormat format,
                                     const std::string& origin = "<run file>") {
  try {
    if (format == RunFormat::toml) return toml_to_json(toml::parse(text, origin));
    return nlohmann::json::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Format from the extension: ".toml" is TOML, anything else JSON.
inline nlohmann::json load_run_file(const std::string& path) {
  const bool toml = path.size() >= 5 && path.compare(path.size() - 5, 5, ".toml") == 0;
  return parse_run_text(read_text_file(path), toml ? RunFormat::toml : RunFormat::json, path);
}

struct RunFile {
  std::optional<FactorySpec> factory;
  std::optional<std::string> phi;
  std::optional<std::string> psi;
  std::optional<IsothermalChart> chart;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<double> F0;
  std::optional<int> sign;
  std::map<std::string, double> thresholds;
};

namespace detail {

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("run file key '" + key + "': " + e.what());
  }
}

inline Interval interval_from(const nlohmann::json& j, const std::string& key) {
  const auto v = get_as<std::vector<double>>(j, key);
  if (v.size() != 2) throw ConfigError("run file key '" + key + "' must be [lo, hi]");
  return {v[0], v[1]};
}

}  // namespace detail

inline IsothermalChart chart_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("'chart' must be a table");
  const int n = j.value("n", 64);
  return IsothermalChart(detail::interval_from(j, "x"), detail::interval_from(j, "y"),
                         j.value("nx", n), j.value("ny", n), j.value("epsilon", 1));
}

inline RunFile parse_run(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run file must be a table/object");
  static const std::vector<std::string> known = {
      "harmonic", "curvature_sign", "phi", "psi",   "chart",     "lambda",
      "beta",     "F0",             "sign", "thresholds", "description"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown run file key '" + key + "'");

  RunFile r;
  if (j.contains("harmonic")) {
    const auto& h = j.at("harmonic");
    FactorySpec spec;
    if (h.is_string()) {
      spec.harmonic = h.get<std::string>();
    } else {
      spec.harmonic = detail::get_as<std::string>(h, "name");
      if (h.contains("params")) spec.params = detail::get_as<std::vector<double>>(h, "params");
    }
    spec.curvature_sign = j.value("curvature_sign", -1);
    spec.lambda = j.value("lambda", 0.0);
    r.factory = spec;
  }
  if (j.contains("phi")) r.phi = detail::get_as<std::string>(j, "phi");
  if (j.contains("psi")) r.psi = detail::get_as<std::string>(j, "psi");
  const int sources = int(r.factory.has_value()) + int(r.phi.has_value()) + int(r.psi.has_value());
  if (sources > 1) throw ConfigError("run file sets more than one of harmonic, phi, psi");
  if (j.contains("chart")) r.chart = chart_from_json(j.at("chart"));
  if (j.contains("lambda")) r.lambda = detail::get_as<double>(j, "lambda");
  if (j.contains("beta")) r.beta = detail::get_as<double>(j, "beta");
  if (j.contains("F0")) r.F0 = detail::get_as<double>(j, "F0");
  if (j.contains("sign")) r.sign = detail::get_as<int>(j, "sign");
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    if (!t.is_object()) throw ConfigError("'thresholds' must be a table");
    for (const auto& [key, value] : t.items()) r.thresholds[key] = detail::get_as<double>(t, key);
  }
  return r;
}

}  // namespace blaschke
