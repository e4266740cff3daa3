#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "meso/errors.hpp"

namespace meso {

// Flat `key = value` text files. '#' starts a comment, blank lines are
// ignored, keys may repeat (e.g. several incident lines).
class KeyValues {
 public:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static KeyValues parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      kv.entries_.emplace_back(key, value);
    }
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.first == key; });
  }

  std::string get(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.first == key) return e.second;
    throw ConfigError("missing required key: " + key);
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    for (const auto& e : entries_)
      if (e.first == key) return e.second;
    return fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, get(key)); }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long long get_int(const std::string& key) const {
    const std::string v = get(key);
    try {
      size_t pos = 0;
      long long r = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected integer, got '" + v + "'");
    }
  }
  long long get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::vector<std::string> get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
      if (e.first == key) out.push_back(e.second);
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      double r = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected number, got '" + v + "'");
    }
  }

  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace meso
