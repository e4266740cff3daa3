#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "meso/errors.hpp"
#include "meso/keyvalue.hpp"

namespace meso {
namespace csv {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(KeyValues::trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Header name -> column index.
inline std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < header.size(); ++i) idx[header[i]] = i;
  return idx;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Deterministic float formatting (dot decimal, shortest-ish form).
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline long long to_int(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    long long r = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return r;
  } catch (const std::exception&) {
    throw DataError(std::string("expected integer for ") + what + ", got '" + s + "'");
  }
}

inline double to_double(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    double r = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return r;
  } catch (const std::exception&) {
    throw DataError(std::string("expected number for ") + what + ", got '" + s + "'");
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw DataError("cannot write file: " + path);
  return out;
}

}  // namespace csv
}  // namespace meso
