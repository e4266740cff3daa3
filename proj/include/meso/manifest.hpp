#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "meso/csv.hpp"
#include "meso/version.hpp"

namespace meso {

// Every output directory gets exactly one manifest recording how it was
// produced. Outputs are reproducible bit-identically from the recorded
// command line; the timestamp is informational.
inline void write_manifest(const std::string& dir, const std::string& command,
                           const std::vector<std::pair<std::string, std::string>>& fields) {
  auto out = csv::open_out(dir + "/manifest.txt");
  out << "command = " << command << '\n';
  for (const auto& [k, v] : fields) out << k << " = " << v << '\n';
  out << "tool_version = " << kVersion << '\n';
  const auto now = std::chrono::system_clock::now();
  out << "timestamp_unix = "
      << std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count() << '\n';
}

}  // namespace meso
