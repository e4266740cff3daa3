#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "meso/csv.hpp"
#include "meso/errors.hpp"
#include "meso/units.hpp"

namespace meso {

struct TrajectoryRecord {
  std::int64_t k = 0;
  std::int64_t veh_id = 0;
  int cell = 1;
  int speed = 0;
};

struct ResolvedIncident {
  std::int64_t veh_id = 0;
  std::int64_t start = 0;
  std::int64_t duration = 0;
};

// Vehicle trajectories over a whole run: one record per vehicle per step it
// is present, sorted by (k asc, cell desc) so each step reads in
// downstream-first order.
struct TrajectoryDataset {
  LatticeConfig config;
  std::vector<TrajectoryRecord> records;
  std::vector<ResolvedIncident> incidents;  // filled by the simulator

  void sort_canonical() {
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
      if (a.k != b.k) return a.k < b.k;
      return a.cell > b.cell;
    });
  }

  std::int64_t max_step() const {
    std::int64_t m = 0;
    for (const auto& r : records) m = std::max(m, r.k);
    return m;
  }

  // Count of distinct recorded time indices (the K*L factor in the error
  // ratios uses this as K).
  std::int64_t step_count() const {
    std::int64_t count = 0, last = -1;
    for (const auto& r : records)
      if (r.k != last) { ++count; last = r.k; }
    return count;
  }

  struct Lifetime {
    std::int64_t entry = 0;  // first step present
    std::int64_t last = 0;   // last step present
  };

  std::map<std::int64_t, Lifetime> lifetimes() const {
    std::map<std::int64_t, Lifetime> out;
    for (const auto& r : records) {
      auto [it, fresh] = out.try_emplace(r.veh_id, Lifetime{r.k, r.k});
      if (!fresh) {
        it->second.entry = std::min(it->second.entry, r.k);
        it->second.last = std::max(it->second.last, r.k);
      }
    }
    return out;
  }

  // (max_k + 1) x L speed grid; -1 marks empty cells.
  std::vector<std::vector<int>> speed_grid() const {
    std::vector<std::vector<int>> grid(static_cast<std::size_t>(max_step() + 1),
                                       std::vector<int>(static_cast<std::size_t>(config.L), -1));
    for (const auto& r : records)
      grid[static_cast<std::size_t>(r.k)][static_cast<std::size_t>(r.cell - 1)] = r.speed;
    return grid;
  }

  // Offsets of the first record of each step; records must be sorted.
  std::vector<std::size_t> step_offsets() const {
    std::vector<std::size_t> offsets(static_cast<std::size_t>(max_step() + 2), records.size());
    for (std::size_t i = records.size(); i-- > 0;)
      offsets[static_cast<std::size_t>(records[i].k)] = i;
    for (std::size_t k = offsets.size() - 1; k-- > 0;)
      offsets[k] = std::min(offsets[k], offsets[k + 1]);
    return offsets;
  }

  // Structural checks: cells unique per step, everything in range.
  void validate() const {
    std::int64_t prev_k = -1;
    std::vector<bool> seen(static_cast<std::size_t>(config.L), false);
    for (const auto& r : records) {
      if (r.k < prev_k) throw DataError("TrajectoryDataset: records not sorted by step");
      if (r.k != prev_k) std::fill(seen.begin(), seen.end(), false);
      if (r.cell < 1 || r.cell > config.L) throw DataError("TrajectoryDataset: cell out of lattice");
      if (r.speed < 0 || r.speed > config.v_max)
        throw DataError("TrajectoryDataset: speed out of range");
      if (seen[static_cast<std::size_t>(r.cell - 1)])
        throw DataError("TrajectoryDataset: two vehicles in cell " + std::to_string(r.cell) +
                        " at step " + std::to_string(r.k));
      seen[static_cast<std::size_t>(r.cell - 1)] = true;
      prev_k = r.k;
    }
  }
};

inline void write_trajectory_csv(const std::string& path, const TrajectoryDataset& ds) {
  auto out = csv::open_out(path);
  out << "k,veh_id,cell,speed_cells\n";
  for (const auto& r : ds.records)
    out << r.k << ',' << r.veh_id << ',' << r.cell << ',' << r.speed << '\n';
}

// Reads either lattice-unit trajectories (k,veh_id,cell,speed_cells) or
// physical-unit ones (k,veh_id,pos_m,speed_mps). Physical rows are
// rasterized: cell = ceil(pos/delta_l), speed = clamp(round(v*dt/dl)).
// Vehicles rasterized into an occupied cell are shifted one cell upstream
// with a warning.
inline TrajectoryDataset load_trajectories(const std::string& path, const LatticeConfig& cfg) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");
  const auto header = csv::split(lines[0]);
  const auto idx = csv::header_index(header);

  const bool physical = idx.count("pos_m") > 0;
  if (!idx.count("k") || !idx.count("veh_id") ||
      (!physical && (!idx.count("cell") || !idx.count("speed_cells"))) ||
      (physical && !idx.count("speed_mps")))
    throw DataError(path + ": unrecognized trajectory header");

  TrajectoryDataset ds;
  ds.config = cfg;
  std::int64_t prev_k = -1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() < header.size())
      throw DataError(path + ": row " + std::to_string(i + 1) + " has too few fields");
    TrajectoryRecord r;
    r.k = csv::to_int(f[idx.at("k")], "k");
    r.veh_id = csv::to_int(f[idx.at("veh_id")], "veh_id");
    if (physical) {
      const double pos = csv::to_double(f[idx.at("pos_m")], "pos_m");
      const double v = csv::to_double(f[idx.at("speed_mps")], "speed_mps");
      r.cell = static_cast<int>(std::ceil(cfg.meters_to_cells(pos)));
      if (r.cell < 1) r.cell = 1;
      const long rounded = std::lround(cfg.mps_to_cell_speed(v));
      r.speed = static_cast<int>(std::clamp(rounded, 0L, static_cast<long>(cfg.v_max)));
    } else {
      r.cell = static_cast<int>(csv::to_int(f[idx.at("cell")], "cell"));
      r.speed = static_cast<int>(csv::to_int(f[idx.at("speed_cells")], "speed_cells"));
    }
    if (r.k < prev_k) throw DataError(path + ": time steps not sorted ascending");
    prev_k = std::max(prev_k, r.k);
    if (r.cell > cfg.L || r.cell < 1)
      throw DataError(path + ": row " + std::to_string(i + 1) + " position outside lattice");
    if (r.speed < 0 || r.speed > cfg.v_max)
      throw DataError(path + ": row " + std::to_string(i + 1) + " speed out of range");
    ds.records.push_back(r);
  }
  ds.sort_canonical();

  // Resolve rasterization collisions: walk each step downstream-first and
  // push followers upstream.
  std::size_t begin = 0;
  while (begin < ds.records.size()) {
    std::size_t end = begin;
    while (end < ds.records.size() && ds.records[end].k == ds.records[begin].k) ++end;
    int next_free = cfg.L;  // highest cell still available
    for (std::size_t i = begin; i < end; ++i) {
      auto& r = ds.records[i];
      if (r.cell > next_free) {
        std::cerr << "warning: " << path << ": vehicle " << r.veh_id << " at step " << r.k
                  << " shifted upstream from cell " << r.cell << " to " << next_free << "\n";
        r.cell = next_free;
      }
      if (r.cell < 1) throw DataError(path + ": cannot resolve cell collisions at step " +
                                      std::to_string(r.k));
      next_free = r.cell - 1;
    }
    begin = end;
  }
  ds.validate();
  return ds;
}

// Speed-map grid CSV: header c1..cL, then one row per step, -1 for empty.
inline void write_speedmap_csv(const std::string& path, const std::vector<std::vector<int>>& grid) {
  auto out = csv::open_out(path);
  if (!grid.empty()) {
    for (std::size_t c = 0; c < grid[0].size(); ++c) out << (c ? "," : "") << 'c' << (c + 1);
    out << '\n';
  }
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

// Plain ASCII PGM render of a speed grid (rows = time). Empty cells are
// white; occupied cells shade from black (stopped) to light gray (v_max).
inline void write_speedmap_pgm(const std::string& path, const std::vector<std::vector<int>>& grid,
                               int v_max) {
  auto out = csv::open_out(path);
  const std::size_t rows = grid.size();
  const std::size_t cols = rows ? grid[0].size() : 0;
  out << "P2\n" << cols << ' ' << rows << "\n255\n";
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < cols; ++c) {
      int px = 255;
      if (row[c] >= 0) px = v_max > 0 ? (200 * row[c]) / v_max : 0;
      out << (c ? " " : "") << px;
    }
    out << '\n';
  }
}

// Three-level variant following the speed bands 0-25 / 25-70 / 70+ km/h.
inline void write_speedmap_bands_pgm(const std::string& path,
                                     const std::vector<std::vector<int>>& grid,
                                     const LatticeConfig& cfg) {
  auto out = csv::open_out(path);
  const std::size_t rows = grid.size();
  const std::size_t cols = rows ? grid[0].size() : 0;
  out << "P2\n" << cols << ' ' << rows << "\n255\n";
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < cols; ++c) {
      int px = 255;
      if (row[c] >= 0) {
        const double kmh = cfg.cell_speed_to_kmh(row[c]);
        px = kmh < 25.0 ? 30 : (kmh < 70.0 ? 128 : 220);
      }
      out << (c ? " " : "") << px;
    }
    out << '\n';
  }
}

}  // namespace meso
