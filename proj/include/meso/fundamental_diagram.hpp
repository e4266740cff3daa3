#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meso/csv.hpp"
#include "meso/dataset.hpp"

// Edie-style box aggregation of trajectories into (density, flow, speed)
// samples: density = vehicle-steps per box area, flow = cell advancements
// per box area, speed = flow / density.

namespace meso {

struct FdSample {
  double density_veh_km = 0.0;
  double flow_veh_h = 0.0;
  double speed_kmh = 0.0;
};

inline constexpr int kDefaultFdBoxCells = 50;
inline constexpr int kDefaultFdBoxSteps = 30;

inline std::vector<FdSample> fundamental_diagram(const TrajectoryDataset& ds, int box_cells,
                                                 int box_steps, bool ring = false) {
  if (box_cells < 1 || box_steps < 1)
    throw ConfigError("fundamental_diagram: box dimensions must be >= 1");
  const auto& cfg = ds.config;
  const std::int64_t T = ds.max_step() + 1;
  const int n_cell_boxes = cfg.L / box_cells;
  const std::int64_t n_step_boxes = T / box_steps;
  if (n_cell_boxes < 1 || n_step_boxes < 1) return {};

  struct Acc {
    std::int64_t presence = 0;  // vehicle-steps in the box
    std::int64_t advance = 0;   // cells moved out of those steps
  };
  std::vector<Acc> boxes(static_cast<std::size_t>(n_cell_boxes * n_step_boxes));

  // Successor position per (k, id) for the displacement sums.
  std::map<std::pair<std::int64_t, std::int64_t>, int> cell_at;
  for (const auto& r : ds.records) cell_at[{r.k, r.veh_id}] = r.cell;

  for (const auto& r : ds.records) {
    const std::int64_t bk = r.k / box_steps;
    const int bc = (r.cell - 1) / box_cells;
    if (bk >= n_step_boxes || bc >= n_cell_boxes) continue;
    auto& acc = boxes[static_cast<std::size_t>(bk * n_cell_boxes + bc)];
    ++acc.presence;
    auto it = cell_at.find({r.k + 1, r.veh_id});
    if (it != cell_at.end()) {
      int d = it->second - r.cell;
      if (ring && d < 0) d += cfg.L;
      acc.advance += d;
    }
  }

  std::vector<FdSample> out;
  const double area_cells_steps = static_cast<double>(box_cells) * box_steps;
  for (const auto& acc : boxes) {
    if (acc.presence == 0) continue;  // empty box
    FdSample s;
    const double density_veh_m = static_cast<double>(acc.presence) / (area_cells_steps * cfg.delta_l);
    const double flow_veh_s = static_cast<double>(acc.advance) / (area_cells_steps * cfg.delta_t);
    s.density_veh_km = density_veh_m * 1000.0;
    s.flow_veh_h = flow_veh_s * 3600.0;
    s.speed_kmh = s.density_veh_km > 0.0 ? s.flow_veh_h / s.density_veh_km : 0.0;
    out.push_back(s);
  }
  return out;
}

inline void write_fd_csv(const std::string& path, const std::vector<FdSample>& samples) {
  auto out = csv::open_out(path);
  out << "density_veh_km,flow_veh_h,speed_kmh\n";
  for (const auto& s : samples)
    out << csv::fmt(s.density_veh_km) << ',' << csv::fmt(s.flow_veh_h) << ','
        << csv::fmt(s.speed_kmh) << '\n';
}

}  // namespace meso
