#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "prefgen/common.hpp"

namespace prefgen {

namespace cfgdetail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace cfgdetail

// Flat key=value configuration grouped into [section] blocks. Keys that appear
// before the first header belong to the "run" section. '#' starts a comment.
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }

  std::string require_string(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    if (s != sections.end()) {
      auto k = s->second.find(key);
      if (k != s->second.end()) return k->second;
    }
    throw ConfigError("config: missing required key " + section + "." + key);
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    return has(section, key) ? sections.at(section).at(key) : fallback;
  }

  long get_int(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections.at(section).at(key);
    try {
      std::size_t used = 0;
      long parsed = std::stol(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return parsed;
    } catch (const std::exception&) {
      throw ConfigError("config: " + section + "." + key + " is not an integer: '" + v + "'");
    }
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections.at(section).at(key);
    try {
      std::size_t used = 0;
      double parsed = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return parsed;
    } catch (const std::exception&) {
      throw ConfigError("config: " + section + "." + key + " is not a number: '" + v + "'");
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = sections.at(section).at(key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("config: " + section + "." + key + " is not a boolean: '" + v + "'");
  }

  // numeric value, or nullopt when the key is absent or set to "auto"
  std::optional<double> get_double_or_auto(const std::string& section,
                                           const std::string& key) const {
    if (!has(section, key)) return std::nullopt;
    if (sections.at(section).at(key) == "auto") return std::nullopt;
    return get_double(section, key, 0.0);
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    sections[section][key] = value;
  }
};

inline ConfigFile parse_config_text(const std::string& text,
                                    const std::string& origin = "<config>") {
  ConfigFile cfg;
  std::string section = "run";
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = cfgdetail::trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      auto close = line.find(']');
      if (close == std::string::npos)
        throw ConfigError("config: " + where + ": unterminated section header");
      if (cfgdetail::trim(line.substr(close + 1)).size() > 0)
        throw ConfigError("config: " + where + ": trailing text after section header");
      std::string name = cfgdetail::trim(line.substr(1, close - 1));
      if (name.empty()) throw ConfigError("config: " + where + ": empty section name");
      section = name;
      cfg.sections[section];  // a header alone still registers the section
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + where + ": expected key=value or [section]");
    std::string key = cfgdetail::trim(line.substr(0, eq));
    std::string value = cfgdetail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: " + where + ": empty key");
    auto [it, inserted] = cfg.sections[section].emplace(key, value);
    if (!inserted)
      throw ConfigError("config: " + where + ": duplicate key " + section + "." + key);
  }
  return cfg;
}

inline ConfigFile read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

// Stable serialization (sorted sections and keys) used for run identity.
inline std::string canonical_config_text(const ConfigFile& cfg) {
  std::ostringstream out;
  for (const auto& [section, kv] : cfg.sections) {
    if (kv.empty()) continue;
    out << '[' << section << "]\n";
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  }
  return out.str();
}

}  // namespace prefgen
