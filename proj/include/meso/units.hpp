#pragma once

#include <string>

#include "meso/errors.hpp"

namespace meso {

// One-lane road discretized into a uniform lattice. Cells are 1-based:
// l in {1, ..., L}. Each cell holds at most one vehicle. Speeds are integer
// numbers of cells per time step in {0, ..., v_max}.
struct LatticeConfig {
  int L = 0;             // number of cells
  double delta_l = 7.5;  // cell length [m]
  double delta_t = 1.0;  // step duration [s]
  int v_max = 1;         // maximum speed [cells/step]

  void validate() const {
    if (L < 2) throw ConfigError("LatticeConfig: L must be >= 2, got " + std::to_string(L));
    if (delta_l <= 0.0) throw ConfigError("LatticeConfig: delta_l must be > 0");
    if (delta_t <= 0.0) throw ConfigError("LatticeConfig: delta_t must be > 0");
    if (v_max < 1) throw ConfigError("LatticeConfig: v_max must be >= 1");
  }

  // Exact affine unit conversions. Round trips are identities up to
  // floating-point rounding.
  double cells_to_meters(double cells) const { return cells * delta_l; }
  double meters_to_cells(double meters) const { return meters / delta_l; }
  double cell_speed_to_mps(double v) const { return v * delta_l / delta_t; }
  double mps_to_cell_speed(double v) const { return v * delta_t / delta_l; }
  double cell_speed_to_kmh(double v) const { return cell_speed_to_mps(v) * 3.6; }
  double kmh_to_cell_speed(double v) const { return mps_to_cell_speed(v / 3.6); }
};

}  // namespace meso
