#pragma once

#include <stdexcept>
#include <string>

namespace meso {

// Bad parameter files, invalid scenario specs, out-of-range model inputs.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (CSV rows, observation streams).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an unnormalized marginal is identically zero, i.e. the
// evidence assigns zero weight to every speed.
struct DegenerateEvidenceError : std::runtime_error {
  explicit DegenerateEvidenceError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace meso
