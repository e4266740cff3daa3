#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meso/errors.hpp"
#include "meso/units.hpp"

namespace meso {

struct VehicleState {
  std::int64_t id = 0;
  int cell = 1;   // in {1, ..., L}
  int speed = 0;  // in {0, ..., v_max}
};

// Full traffic state at one time step: the cell field sigma plus the ordered
// vehicle list. Vehicles are stored downstream-most first (index 0 has the
// largest cell); on a ring the order is the cyclic follower order rotated so
// positions are strictly decreasing.
struct TrafficState {
  std::int64_t k = 0;
  std::vector<int> sigma;              // sigma[l-1] in {-1, 0, ..., v_max}; -1 = empty
  std::vector<VehicleState> vehicles;  // downstream-most first

  int sigma_at(int cell) const { return sigma[static_cast<std::size_t>(cell - 1)]; }

  void rebuild_sigma(const LatticeConfig& cfg) {
    sigma.assign(static_cast<std::size_t>(cfg.L), -1);
    for (const auto& v : vehicles) sigma[static_cast<std::size_t>(v.cell - 1)] = v.speed;
  }

  static TrafficState from_vehicles(std::int64_t k, std::vector<VehicleState> vehicles,
                                    const LatticeConfig& cfg) {
    TrafficState s;
    s.k = k;
    s.vehicles = std::move(vehicles);
    s.rebuild_sigma(cfg);
    return s;
  }

  // Throws on any violated invariant: positions/speeds in range, one vehicle
  // per cell, strictly decreasing positions, sigma consistent with vehicles.
  void validate(const LatticeConfig& cfg) const {
    if (sigma.size() != static_cast<std::size_t>(cfg.L))
      throw DataError("TrafficState: sigma length != L");
    int occupied = 0;
    for (int v : sigma) {
      if (v < -1 || v > cfg.v_max) throw DataError("TrafficState: sigma value out of range");
      if (v >= 0) ++occupied;
    }
    if (occupied != static_cast<int>(vehicles.size()))
      throw DataError("TrafficState: occupied cell count != vehicle count");
    int prev_cell = cfg.L + 1;
    for (const auto& v : vehicles) {
      if (v.cell < 1 || v.cell > cfg.L)
        throw DataError("TrafficState: vehicle " + std::to_string(v.id) + " cell out of lattice");
      if (v.speed < 0 || v.speed > cfg.v_max)
        throw DataError("TrafficState: vehicle " + std::to_string(v.id) + " speed out of range");
      if (v.cell >= prev_cell)
        throw DataError("TrafficState: vehicle order not strictly decreasing in position");
      if (sigma[static_cast<std::size_t>(v.cell - 1)] != v.speed)
        throw DataError("TrafficState: sigma inconsistent with vehicle at cell " + std::to_string(v.cell));
      prev_cell = v.cell;
    }
  }
};

}  // namespace meso
