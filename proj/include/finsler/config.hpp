#pragma once

// Plain-text configuration: `key = value` lines, '#' comments, dotted key
// names.  The schema is closed: unknown keys are rejected, missing required
// keys are reported by name, and every value is range-checked at parse time.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/measures.hpp"

namespace finsler {

namespace detail {

struct ConfigKey {
  const char* name;
  const char* kind;  // "string", "number", "integer", "numbers"
  const char* fallback;  // nullptr marks a required key
};

// schema order is the emission order of resolved configs
inline const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema{
      {"metric.family", "string", nullptr},
      {"metric.drift0", "number", "0"},
      {"metric.drift1", "number", "0"},
      {"measure", "string", "busemann-hausdorff"},
      {"domain.type", "string", nullptr},
      {"domain.radius", "number", "0.5"},
      {"torus.length", "number", "6.283185307179586"},
      {"torus.split_lo", "number", "0.2"},
      {"torus.split_hi", "number", "0.5"},
      {"torus.ramps", "numbers", "0.3,0.2,0.1"},
      {"quadrature.indicatrix", "integer", "128"},
      {"quadrature.boundary", "integer", "256"},
      {"quadrature.radial", "integer", "64"},
      {"quadrature.angular", "integer", "256"},
      {"quadrature.flux", "integer", "512"},
      {"flow.step", "number", "0.001"},
      {"flow.ring", "integer", "12"},
      {"grid.resolution", "integer", "64"},
      {"grid.sample", "integer", "32"},
      {"grid.torus", "integer", "48"},
      {"comparison.k", "number", "0"},
      {"balls.radii", "numbers", "0.05,0.1,0.15"},
      {"santalo.functions", "string", "one,bump"},
      {"tol.santalo", "number", "0.001"},
      {"tol.reference", "number", "0.001"},
      {"tol.reference_coarse", "number", "0.01"},
      {"tol.omega", "number", "0.002"},
      {"tol.energy", "number", "0.01"},
      {"tol.equality", "number", "0.002"},
      {"workers", "integer", "1"},
      {"out", "string", "reports"},
  };
  return schema;
}

inline std::string config_trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double config_number(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw config_error("config value for '" + key + "' is not a number: " + value, key);
  return v;
}

inline int config_integer(const std::string& key, const std::string& value) {
  for (char c : value)
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '-' && c != '+')
      throw config_error("config value for '" + key + "' is not an integer: " + value, key);
  return static_cast<int>(config_number(key, value));
}

inline std::vector<double> config_numbers(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = config_trim(tok);
    if (tok.empty())
      throw config_error("config value for '" + key + "' has an empty list entry", key);
    out.push_back(config_number(key, tok));
  }
  if (out.empty()) throw config_error("config value for '" + key + "' is an empty list", key);
  return out;
}

}  // namespace detail

class Config {
 public:
  static Config parse(const std::string& text) {
    std::map<std::string, std::string> raw;
    std::stringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::config_trim(line);
      if (line.empty()) continue;
      std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error("config line " + std::to_string(lineno) + " has no '=': " + line, "");
      std::string key = detail::config_trim(line.substr(0, eq));
      std::string value = detail::config_trim(line.substr(eq + 1));
      if (key.empty() || value.empty())
        throw config_error("config line " + std::to_string(lineno) + " is incomplete: " + line,
                           key);
      if (raw.count(key)) throw config_error("duplicate config key '" + key + "'", key);
      raw[key] = value;
    }

    Config cfg;
    for (const detail::ConfigKey& entry : detail::config_schema()) {
      auto it = raw.find(entry.name);
      if (it == raw.end()) {
        if (!entry.fallback)
          throw config_error("missing config key '" + std::string(entry.name) + "'", entry.name);
        cfg.values_.emplace_back(entry.name, entry.fallback);
      } else {
        cfg.values_.emplace_back(entry.name, it->second);
        raw.erase(it);
      }
    }
    if (!raw.empty())
      throw config_error("unknown config key '" + raw.begin()->first + "'", raw.begin()->first);
    cfg.validate();
    return cfg;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path, path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  const std::string& str(const std::string& key) const {
    for (const auto& kv : values_)
      if (kv.first == key) return kv.second;
    throw config_error("unknown config key '" + key + "'", key);
  }

  double number(const std::string& key) const { return detail::config_number(key, str(key)); }
  int integer(const std::string& key) const { return detail::config_integer(key, str(key)); }
  std::vector<double> numbers(const std::string& key) const {
    return detail::config_numbers(key, str(key));
  }

  MeasureKind measure() const {
    return str("measure") == "holmes-thompson" ? MeasureKind::holmes_thompson
                                               : MeasureKind::busemann_hausdorff;
  }

  void override_value(const std::string& key, const std::string& value) {
    for (auto& kv : values_)
      if (kv.first == key) {
        std::string before = kv.second;
        kv.second = value;
        try {
          validate();
        } catch (...) {
          kv.second = before;
          throw;
        }
        return;
      }
    throw config_error("unknown config key '" + key + "'", key);
  }

  // resolved key/value pairs in schema order, defaults filled in
  const std::vector<std::pair<std::string, std::string>>& resolved() const { return values_; }

 private:
  std::vector<std::pair<std::string, std::string>> values_;

  void require(bool ok, const std::string& key, const std::string& what) const {
    if (!ok) throw config_error("config key '" + key + "' " + what, key);
  }

  void one_of(const std::string& key, std::vector<std::string> allowed) const {
    const std::string& v = str(key);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string msg = "config key '" + key + "' must be one of {";
      for (std::size_t i = 0; i < allowed.size(); ++i)
        msg += (i ? ", " : "") + allowed[i];
      throw config_error(msg + "}, got '" + v + "'", key);
    }
  }

  void validate() const {
    one_of("metric.family", {"euclidean", "funk", "randers"});
    one_of("measure", {"busemann-hausdorff", "holmes-thompson"});
    one_of("domain.type", {"ball", "torus"});
    require(number("domain.radius") > 0.0, "domain.radius", "must be positive");
    require(number("torus.length") > 0.0, "torus.length", "must be positive");
    double lo = number("torus.split_lo"), hi = number("torus.split_hi");
    require(lo >= 0.0 && lo < 1.0, "torus.split_lo", "must lie in [0, 1)");
    require(hi > lo && hi < 1.0, "torus.split_hi", "must lie in (split_lo, 1)");
    for (double e : numbers("torus.ramps"))
      require(e > 0.0, "torus.ramps", "entries must be positive");
    require(integer("quadrature.indicatrix") >= 16, "quadrature.indicatrix", "must be >= 16");
    require(integer("quadrature.boundary") >= 16, "quadrature.boundary", "must be >= 16");
    require(integer("quadrature.radial") >= 4, "quadrature.radial", "must be >= 4");
    require(integer("quadrature.angular") >= 16, "quadrature.angular", "must be >= 16");
    require(integer("quadrature.flux") >= 64, "quadrature.flux", "must be >= 64");
    require(number("flow.step") > 0.0, "flow.step", "must be positive");
    require(integer("flow.ring") >= 4, "flow.ring", "must be >= 4");
    require(integer("grid.resolution") >= 32, "grid.resolution", "must be >= 32");
    require(integer("grid.sample") >= 4, "grid.sample", "must be >= 4");
    require(integer("grid.torus") >= 16, "grid.torus", "must be >= 16");
    for (double r : numbers("balls.radii"))
      require(r > 0.0, "balls.radii", "entries must be positive");
    {
      std::stringstream ss(str("santalo.functions"));
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = detail::config_trim(tok);
        require(tok == "one" || tok == "bump", "santalo.functions",
                "entries must be 'one' or 'bump'");
      }
    }
    for (const char* key : {"tol.santalo", "tol.reference", "tol.reference_coarse", "tol.omega",
                            "tol.energy", "tol.equality"})
      require(number(key) > 0.0, key, "must be positive");
    require(integer("workers") >= 1, "workers", "must be >= 1");
    require(!str("out").empty(), "out", "must not be empty");
    if (str("metric.family") == "randers") {
      double b0 = number("metric.drift0"), b1 = number("metric.drift1");
      require(b0 * b0 + b1 * b1 < 1.0, "metric.drift0", "drift must have norm below 1");
    }
    if (str("metric.family") == "funk" && str("domain.type") == "ball")
      require(number("domain.radius") < 1.0, "domain.radius",
              "must be below 1 on the funk chart");
  }
};

}  // namespace finsler
