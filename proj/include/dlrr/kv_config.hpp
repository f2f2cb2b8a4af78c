#ifndef DLRR_KV_CONFIG_HPP
#define DLRR_KV_CONFIG_HPP

// Flat key-value text with [section] headers:
//
//   # comment
//   [solver]
//   lambda = 0.02
//
// Keys are addressed as "section.key". Consumers take() every key they
// understand and then call reject_unknown(), so typos fail loudly.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlrr/error.hpp"

namespace dlrr {

class KvConfig {
 public:
  static KvConfig parse(std::istream& is, const std::string& origin = "config") {
    KvConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::string where = origin + ":" + std::to_string(lineno);
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw ConfigError(where + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(where + ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (cfg.values_.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
      cfg.values_[full] = value;
    }
    return cfg;
  }

  static KvConfig load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    return parse(is, path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string take_string(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key '" + key + "'");
    return take_string(key, {});
  }

  double take_double(const std::string& key, double fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return to_double(key, take_string(key, {}));
  }

  long take_int(const std::string& key, long fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return to_int(key, take_string(key, {}));
  }

  bool take_bool(const std::string& key, bool fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const std::string v = take_string(key, {});
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
  }

  /// Comma-separated list; empty string gives an empty list.
  std::vector<std::string> take_list(const std::string& key, const std::vector<std::string>& fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<std::string> out;
    std::stringstream ss(take_string(key, {}));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }
  }

  static double to_double(const std::string& key, const std::string& v) {
    double d = 0.0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, d);
    if (ec != std::errc() || p != end) {
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
    return d;
  }

  static long to_int(const std::string& key, const std::string& v) {
    long i = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, i);
    if (ec != std::errc() || p != end) {
      throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
    return i;
  }

  static std::string trim(const std::string& s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

/// Round-trippable text form of a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace dlrr

#endif  // DLRR_KV_CONFIG_HPP
