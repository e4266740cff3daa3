#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meso/csv.hpp"
#include "meso/units.hpp"

namespace meso {

// One probe measurement: the vehicle's own cell and speed, optionally the
// sensed gaps to the immediately adjacent vehicles (leader / follower).
struct Observation {
  std::int64_t k = 0;
  std::int64_t veh_id = 0;
  int cell = 1;
  int speed = 0;
  std::optional<int> gap_lead;
  std::optional<int> gap_follow;
};

struct ObservationSeries {
  std::vector<Observation> rows;  // sorted by (k, cell desc)

  void sort_canonical() {
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      if (a.k != b.k) return a.k < b.k;
      return a.cell > b.cell;
    });
  }

  std::map<std::int64_t, std::vector<Observation>> by_step() const {
    std::map<std::int64_t, std::vector<Observation>> out;
    for (const auto& o : rows) out[o.k].push_back(o);
    return out;
  }
};

inline void write_observations_csv(const std::string& path, const ObservationSeries& series) {
  auto out = csv::open_out(path);
  out << "k,veh_id,cell,speed_cells,gap_lead_cells,gap_follow_cells\n";
  for (const auto& o : series.rows) {
    out << o.k << ',' << o.veh_id << ',' << o.cell << ',' << o.speed << ',';
    if (o.gap_lead) out << *o.gap_lead;
    out << ',';
    if (o.gap_follow) out << *o.gap_follow;
    out << '\n';
  }
}

inline ObservationSeries load_observations(const std::string& path, const LatticeConfig& cfg) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");
  const auto idx = csv::header_index(csv::split(lines[0]));
  for (const char* col : {"k", "veh_id", "cell", "speed_cells"})
    if (!idx.count(col)) throw DataError(path + ": missing column " + std::string(col));

  ObservationSeries series;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    Observation o;
    o.k = csv::to_int(f[idx.at("k")], "k");
    o.veh_id = csv::to_int(f[idx.at("veh_id")], "veh_id");
    o.cell = static_cast<int>(csv::to_int(f[idx.at("cell")], "cell"));
    o.speed = static_cast<int>(csv::to_int(f[idx.at("speed_cells")], "speed_cells"));
    if (o.cell < 1 || o.cell > cfg.L || o.speed < 0 || o.speed > cfg.v_max)
      throw DataError(path + ": row " + std::to_string(i + 1) + " observation out of range");
    auto opt_field = [&](const char* name) -> std::optional<int> {
      auto it = idx.find(name);
      if (it == idx.end() || it->second >= f.size() || f[it->second].empty())
        return std::nullopt;
      return static_cast<int>(csv::to_int(f[it->second], name));
    };
    o.gap_lead = opt_field("gap_lead_cells");
    o.gap_follow = opt_field("gap_follow_cells");
    series.rows.push_back(o);
  }
  series.sort_canonical();
  return series;
}

}  // namespace meso
