#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "meso/dataset.hpp"
#include "meso/keyvalue.hpp"
#include "meso/params.hpp"
#include "meso/potentials.hpp"
#include "meso/rng.hpp"
#include "meso/state.hpp"

namespace meso {

// ---------------------------------------------------------------- scenario

enum class InitialKind { Empty, UniformRing, Explicit };

struct InitialCondition {
  InitialKind kind = InitialKind::Empty;
  int n_vehicles = 0;                   // UniformRing
  std::vector<VehicleState> vehicles;   // Explicit

  static InitialCondition empty() { return {}; }
  static InitialCondition uniform_ring(int n) {
    InitialCondition c;
    c.kind = InitialKind::UniformRing;
    c.n_vehicles = n;
    return c;
  }
  static InitialCondition explicit_list(std::vector<VehicleState> v) {
    InitialCondition c;
    c.kind = InitialKind::Explicit;
    c.vehicles = std::move(v);
    return c;
  }
};

enum class IncidentSelector {
  VehicleId,    // the vehicle with this id
  NearestCell,  // vehicle nearest the given cell when the window opens
  Downstream,   // the current downstream-most vehicle, re-resolved each step
};

// The selected vehicle's speed is forced to 0 at steps start+1 .. start+duration.
struct IncidentSpec {
  IncidentSelector selector = IncidentSelector::NearestCell;
  std::int64_t value = 0;  // vehicle id or target cell
  std::int64_t start = 0;
  std::int64_t duration = 0;
};

struct ScenarioSpec {
  LatticeConfig config;
  ModelParams params;
  std::int64_t K = 0;
  InitialCondition initial;
  std::vector<IncidentSpec> incidents;

  void validate() const {
    config.validate();
    params.validate();
    if (K < 0) throw ConfigError("ScenarioSpec: K must be >= 0");
    if (initial.kind == InitialKind::UniformRing) {
      if (params.boundary != Boundary::Periodic)
        throw ConfigError("ScenarioSpec: ring initial condition requires periodic boundary");
      if (initial.n_vehicles < 1 || initial.n_vehicles > config.L)
        throw ConfigError("ScenarioSpec: ring vehicle count must be in [1, L]");
    }
    for (const auto& inc : incidents) {
      if (inc.start < 0 || inc.duration < 1 || inc.start + inc.duration > K)
        throw ConfigError("ScenarioSpec: incident window outside [0, K)");
    }
  }

  // Scenario keys on top of the parameter file: K, initial (empty | ring:N),
  // incident (repeatable: selector,start,duration with selector one of
  // veh:<id>, cell:<c>, downstream).
  static ScenarioSpec parse(const KeyValues& kv) {
    ScenarioSpec spec;
    spec.config = lattice_config_from(kv);
    spec.params = model_params_from(kv);
    spec.K = kv.get_int_or("K", 0);
    const std::string init = kv.get_or("initial", "empty");
    if (init == "empty") {
      spec.initial = InitialCondition::empty();
    } else if (init.rfind("ring:", 0) == 0) {
      spec.initial = InitialCondition::uniform_ring(
          static_cast<int>(csv::to_int(init.substr(5), "initial ring count")));
    } else {
      throw ConfigError("initial must be 'empty' or 'ring:N', got '" + init + "'");
    }
    for (const auto& text : kv.get_all("incident")) {
      const auto f = csv::split(text);
      if (f.size() != 3) throw ConfigError("incident must be 'selector,start,duration'");
      IncidentSpec inc;
      if (f[0] == "downstream") {
        inc.selector = IncidentSelector::Downstream;
      } else if (f[0].rfind("veh:", 0) == 0) {
        inc.selector = IncidentSelector::VehicleId;
        inc.value = csv::to_int(f[0].substr(4), "incident vehicle id");
      } else if (f[0].rfind("cell:", 0) == 0) {
        inc.selector = IncidentSelector::NearestCell;
        inc.value = csv::to_int(f[0].substr(5), "incident cell");
      } else {
        throw ConfigError("incident selector must be veh:<id>, cell:<c> or downstream");
      }
      inc.start = csv::to_int(f[1], "incident start");
      inc.duration = csv::to_int(f[2], "incident duration");
      spec.incidents.push_back(inc);
    }
    spec.validate();
    return spec;
  }

  static ScenarioSpec load_file(const std::string& path) { return parse(KeyValues::load(path)); }
};

// ---------------------------------------------------------------- sampling

// Normalized categorical distribution over {0,...,v_max} centered on the
// equilibrium speed: pi(v) proportional to exp(-(v - v_eq)^2 / theta0).
// Energies are shifted by their minimum before exponentiation, which leaves
// the distribution unchanged and keeps the zero-temperature limit exact.
inline std::vector<double> speed_distribution(double v_eq, const LatticeParams& lp) {
  std::vector<double> w(static_cast<std::size_t>(lp.v_max) + 1);
  double e_min = kInfiniteEnergy;
  for (int v = 0; v <= lp.v_max; ++v) {
    const double d = v - v_eq;
    w[static_cast<std::size_t>(v)] = d * d / lp.theta0;
    e_min = std::min(e_min, w[static_cast<std::size_t>(v)]);
  }
  double z = 0.0;
  for (auto& x : w) z += (x = std::exp(-(x - e_min)));
  for (auto& x : w) x /= z;
  return w;
}

// One draw from the speed distribution for a given gap to the leader.
inline int sample_speed(double gap_cells, const LatticeParams& lp, Rng& rng) {
  const auto pi = speed_distribution(speed_spacing(gap_cells, lp), lp);
  return sample_categorical(pi, rng);
}

// Random slow-down. Always consumes one draw so the stream stays aligned
// regardless of state. Clamps at 0 (the speed space has no -1).
inline int apply_slowdown(int v, double p2, Rng& rng) {
  const double u1 = uniform01(rng);
  if (u1 < p2) return std::max(v - 1, 0);
  return v;
}

// ---------------------------------------------------------------- stepping

namespace detail {

// Leader position one step back, unwrapped for rings. nullopt = free road ahead.
inline std::optional<int> prev_leader_cell(const std::vector<VehicleState>& vehicles,
                                           std::size_t i, Boundary boundary, int L) {
  if (i > 0) return vehicles[i - 1].cell;
  if (boundary == Boundary::Periodic && vehicles.size() > 1)
    return vehicles.back().cell + L;
  return std::nullopt;
}

}  // namespace detail

// Arrival injection at the upstream boundary. Consumes one draw; appends a
// vehicle at cell 1 when the draw succeeds and cell 1 is empty. Entry speed
// is the equilibrium speed for the gap to the current upstream-most vehicle,
// rounded to the nearest integer (v_max on an empty road).
inline void inject_arrival(TrafficState& state, const ModelParams& params,
                           const LatticeConfig& cfg, Rng& rng, std::int64_t& next_vehicle_id) {
  const double u2 = uniform01(rng);
  if (u2 >= params.p1) return;
  if (!state.vehicles.empty() && state.vehicles.back().cell == 1) return;
  const LatticeParams lp(params, cfg);
  int v_entry = cfg.v_max;
  if (!state.vehicles.empty()) {
    const int gap = state.vehicles.back().cell - 1;
    v_entry = static_cast<int>(std::lround(speed_spacing(gap, lp)));
  }
  state.vehicles.push_back({next_vehicle_id++, 1, v_entry});
  state.sigma[0] = v_entry;
}

// One step of the mesoscopic dynamics. Processing order (downstream-most
// first) and the per-vehicle draw order (speed sample, then slow-down) are
// fixed; determinism for a given seed depends on it.
//
//   1. positions move via the collision-free update against the leader's
//      previous position; vehicles past L exit (free boundary) or wrap (ring)
//   2. speeds are re-sampled from the Boltzmann distribution around the
//      equilibrium speed for the new gap (v_max for the free downstream-most)
//   3. random slow-down, then forced stops (incidents)
//   4. one arrival attempt at the upstream boundary
inline TrafficState step(const TrafficState& state, const ModelParams& params,
                         const LatticeConfig& cfg, Rng& rng,
                         const std::unordered_set<std::int64_t>& forced_stops = {},
                         std::int64_t* next_vehicle_id = nullptr) {
  const LatticeParams lp(params, cfg);
  const bool ring = params.boundary == Boundary::Periodic;

  // Position sweep. All reads are from the previous state, so the sweep
  // order carries no data dependence here; the order matters in the speed
  // sweep below, which sees the already-updated leader positions.
  std::vector<VehicleState> moved;
  moved.reserve(state.vehicles.size());
  std::size_t wrapped = 0;
  for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
    const auto& v = state.vehicles[i];
    const auto leader = detail::prev_leader_cell(state.vehicles, i, params.boundary, cfg.L);
    int s_new = position_update(v.cell, v.speed, leader);
    if (s_new > cfg.L) {
      if (!ring) continue;  // exits the system
      s_new -= cfg.L;
      ++wrapped;
    }
    moved.push_back({v.id, s_new, v.speed});
  }
  // Wrapped vehicles moved from the head of the list to the tail; rotation
  // restores strictly decreasing positions.
  if (wrapped > 0) std::rotate(moved.begin(), moved.begin() + static_cast<long>(wrapped), moved.end());

  // Speed sweep against the new positions.
  for (std::size_t i = 0; i < moved.size(); ++i) {
    double v_eq;
    if (i == 0 && !ring) {
      v_eq = static_cast<double>(cfg.v_max);  // free boundary
    } else {
      const int leader_cell =
          i == 0 ? moved.back().cell + cfg.L : moved[i - 1].cell;
      v_eq = speed_spacing(leader_cell - moved[i].cell, lp);
    }
    int v = sample_categorical(speed_distribution(v_eq, lp), rng);
    v = apply_slowdown(v, params.p2, rng);
    if (forced_stops.count(moved[i].id)) v = 0;
    moved[i].speed = v;
  }

  TrafficState next = TrafficState::from_vehicles(state.k + 1, std::move(moved), cfg);

  if (!ring && next_vehicle_id != nullptr)
    inject_arrival(next, params, cfg, rng, *next_vehicle_id);

  return next;
}

// ---------------------------------------------------------------- full runs

inline TrafficState make_initial_state(const ScenarioSpec& spec) {
  std::vector<VehicleState> vehicles;
  switch (spec.initial.kind) {
    case InitialKind::Empty:
      break;
    case InitialKind::UniformRing: {
      const int n = spec.initial.n_vehicles;
      const LatticeParams lp(spec.params, spec.config);
      std::vector<int> cells(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        cells[static_cast<std::size_t>(i)] =
            spec.config.L - static_cast<int>((static_cast<std::int64_t>(i) * spec.config.L) / n);
      for (int i = 0; i < n; ++i) {
        const int cell = cells[static_cast<std::size_t>(i)];
        const int leader = i == 0 ? cells[static_cast<std::size_t>(n - 1)] + spec.config.L
                                  : cells[static_cast<std::size_t>(i - 1)];
        const int v = static_cast<int>(std::lround(speed_spacing(leader - cell, lp)));
        vehicles.push_back({i + 1, cell, v});
      }
      break;
    }
    case InitialKind::Explicit: {
      vehicles = spec.initial.vehicles;
      std::sort(vehicles.begin(), vehicles.end(),
                [](const auto& a, const auto& b) { return a.cell > b.cell; });
      break;
    }
  }
  auto state = TrafficState::from_vehicles(0, std::move(vehicles), spec.config);
  state.validate(spec.config);
  return state;
}

namespace detail {

inline std::optional<std::int64_t> resolve_incident_vehicle(const IncidentSpec& inc,
                                                            const TrafficState& state) {
  if (state.vehicles.empty()) return std::nullopt;
  switch (inc.selector) {
    case IncidentSelector::Downstream:
      return state.vehicles.front().id;
    case IncidentSelector::VehicleId:
      for (const auto& v : state.vehicles)
        if (v.id == inc.value) return v.id;
      return std::nullopt;
    case IncidentSelector::NearestCell: {
      const VehicleState* best = nullptr;
      for (const auto& v : state.vehicles) {
        if (best == nullptr ||
            std::abs(v.cell - inc.value) < std::abs(best->cell - inc.value))
          best = &v;
      }
      return best->id;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Deterministic given (spec, seed). Records the initial state at k = 0 and
// every subsequent state at k = 1..K.
inline TrajectoryDataset run(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  TrafficState state = make_initial_state(spec);

  TrajectoryDataset ds;
  ds.config = spec.config;
  auto record = [&](const TrafficState& s) {
    for (const auto& v : s.vehicles) ds.records.push_back({s.k, v.id, v.cell, v.speed});
  };
  record(state);

  std::int64_t next_id =
      1 + static_cast<std::int64_t>(state.vehicles.size());  // ids 1..n used by the initial state

  // Selector -> vehicle id, resolved when each incident window opens.
  std::vector<std::optional<std::int64_t>> resolved(spec.incidents.size());

  for (std::int64_t k = 1; k <= spec.K; ++k) {
    std::unordered_set<std::int64_t> forced;
    for (std::size_t i = 0; i < spec.incidents.size(); ++i) {
      const auto& inc = spec.incidents[i];
      if (k <= inc.start || k > inc.start + inc.duration) continue;
      if (inc.selector == IncidentSelector::Downstream) {
        if (!state.vehicles.empty()) forced.insert(state.vehicles.front().id);
        continue;
      }
      if (k == inc.start + 1) {
        resolved[i] = detail::resolve_incident_vehicle(inc, state);
        if (resolved[i])
          ds.incidents.push_back({*resolved[i], inc.start, inc.duration});
        else
          std::cerr << "warning: incident at step " << inc.start << " matched no vehicle\n";
      }
      if (resolved[i]) forced.insert(*resolved[i]);
    }
    state = step(state, spec.params, spec.config, rng, forced, &next_id);
    record(state);
  }
  ds.sort_canonical();
  return ds;
}

}  // namespace meso
