#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "meso/dataset.hpp"
#include "meso/factor_graph.hpp"
#include "meso/observation.hpp"
#include "meso/params.hpp"
#include "meso/potentials.hpp"
#include "meso/simulator.hpp"
#include "meso/state.hpp"
#include "meso/sum_product.hpp"

// Per-step traffic state estimation: advance the previous MAP state, fold in
// the step's observations, run exact inference on the resulting forest, read
// out per-vehicle MAP speeds, repeat.

namespace meso {

// MAP state carried between steps; vehicles downstream-most first.
struct EstimateState {
  std::int64_t k = 0;
  std::vector<VehicleState> vehicles;
};

// Vehicle arrivals are assumed known (traffic volumes are exogenous); this
// is the schedule of ids entering at each step.
struct EntryEvent {
  std::int64_t step = 0;
  std::int64_t veh_id = 0;
};

struct EntrySchedule {
  std::vector<EntryEvent> events;  // sorted by step

  static EntrySchedule from_dataset(const TrajectoryDataset& truth) {
    EntrySchedule s;
    for (const auto& [id, life] : truth.lifetimes())
      if (life.entry > 0) s.events.push_back({life.entry, id});
    std::sort(s.events.begin(), s.events.end(), [](const auto& a, const auto& b) {
      if (a.step != b.step) return a.step < b.step;
      return a.veh_id < b.veh_id;
    });
    return s;
  }
};

enum class PriorInit {
  TruthState,  // start from the ground-truth initial condition
  ColdStart,   // truth positions, speeds re-seeded at the equilibrium value
};

inline EstimateState initial_estimate(const TrajectoryDataset& truth, const ModelParams& params,
                                      const LatticeConfig& cfg,
                                      PriorInit init = PriorInit::TruthState) {
  EstimateState state;
  for (const auto& r : truth.records) {
    if (r.k != 0) break;
    state.vehicles.push_back({r.veh_id, r.cell, r.speed});
  }
  if (init == PriorInit::ColdStart) {
    const LatticeParams lp(params, cfg);
    const std::size_t n = state.vehicles.size();
    for (std::size_t i = 0; i < n; ++i) {
      double v_eq;
      if (i == 0) {
        v_eq = params.boundary == Boundary::Periodic && n > 1
                   ? speed_spacing(state.vehicles[n - 1].cell + cfg.L - state.vehicles[0].cell, lp)
                   : static_cast<double>(cfg.v_max);
      } else {
        v_eq = speed_spacing(state.vehicles[i - 1].cell - state.vehicles[i].cell, lp);
      }
      state.vehicles[i].speed = static_cast<int>(std::lround(v_eq));
    }
  }
  return state;
}

struct AdvanceResult {
  std::vector<VehicleState> vehicles;  // positions updated, speeds carried over
  std::vector<std::int64_t> exited;
};

// Position advancement in leader-first order via the collision-free update.
// Exits are removed under a free boundary; a ring wraps and rotates like the
// simulator.
inline AdvanceResult advance_positions(const EstimateState& state, const LatticeConfig& cfg,
                                       Boundary boundary) {
  AdvanceResult out;
  const bool ring = boundary == Boundary::Periodic;
  std::size_t wrapped = 0;
  for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
    const auto& v = state.vehicles[i];
    const auto leader = detail::prev_leader_cell(state.vehicles, i, boundary, cfg.L);
    int s_new = position_update(v.cell, v.speed, leader);
    if (s_new > cfg.L) {
      if (!ring) {
        out.exited.push_back(v.id);
        continue;
      }
      s_new -= cfg.L;
      ++wrapped;
    }
    out.vehicles.push_back({v.id, s_new, v.speed});
  }
  if (wrapped > 0)
    std::rotate(out.vehicles.begin(), out.vehicles.begin() + static_cast<long>(wrapped),
                out.vehicles.end());
  return out;
}

namespace detail {

// Observed positions are authoritative: overwrite, then restore strict
// ordering. Unobserved leaders conflicting with an observed follower are
// pushed downstream (and exit if pushed past L); remaining conflicts pull
// the follower upstream.
inline void apply_observed_positions(std::vector<VehicleState>& vehicles,
                                     const std::map<std::int64_t, const Observation*>& obs,
                                     int L, std::vector<std::int64_t>* pushed_out) {
  std::vector<bool> observed(vehicles.size(), false);
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    auto it = obs.find(vehicles[i].id);
    if (it == obs.end()) continue;
    vehicles[i].cell = it->second->cell;
    observed[i] = true;
  }
  for (std::size_t i = vehicles.size(); i-- > 1;) {
    if (vehicles[i].cell >= vehicles[i - 1].cell && observed[i] && !observed[i - 1])
      vehicles[i - 1].cell = vehicles[i].cell + 1;
  }
  // Leaders pushed past the end of the lattice have exited in truth.
  std::size_t w = 0;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (vehicles[i].cell > L) {
      if (pushed_out) pushed_out->push_back(vehicles[i].id);
      continue;
    }
    vehicles[w] = vehicles[i];
    observed[w] = observed[i];
    ++w;
  }
  vehicles.resize(w);
  observed.resize(w);
  for (std::size_t i = 1; i < vehicles.size(); ++i) {
    if (vehicles[i].cell >= vehicles[i - 1].cell) {
      if (observed[i])
        std::cerr << "warning: observed position of vehicle " << vehicles[i].id
                  << " conflicts with its leader; shifted upstream\n";
      vehicles[i].cell = vehicles[i - 1].cell - 1;
      if (vehicles[i].cell < 1)
        throw DataError("cannot restore vehicle ordering after observation overwrite");
    }
  }
}

}  // namespace detail

struct EstimatorOptions {
  bool record_marginals = false;
};

struct MarginalRecord {
  std::int64_t k = 0;
  std::int64_t veh_id = 0;
  int v = 0;
  double prob = 0.0;
};

struct StepDiagnostics {
  std::int64_t k = 0;
  int n_vehicles = 0;
  int n_observed = 0;
  long messages_computed = 0;
  long messages_full_chain = 0;  // 5n-2 baseline without clamping
  int dropped_observations = 0;
};

struct EstimateResult {
  TrajectoryDataset dataset;
  std::vector<StepDiagnostics> steps;
  std::vector<MarginalRecord> marginals;
  int dropped_observations = 0;
};

inline long full_chain_message_count(int n) {
  if (n <= 0) return 0;
  if (n == 1) return 2;
  return 5L * n - 2;
}

// Runs the per-step estimation over k = 1..K. The prior state is recorded at
// k = 0. Deterministic: no randomness anywhere in the estimation path.
inline EstimateResult estimate_run(const EntrySchedule& entries,
                                   const ObservationSeries& observations,
                                   EstimateState prior, const ModelParams& params,
                                   const LatticeConfig& cfg, std::int64_t K,
                                   const EstimatorOptions& opts = {}) {
  params.validate();
  cfg.validate();
  const LatticeParams lp(params, cfg);
  const bool ring = params.boundary == Boundary::Periodic;

  EstimateResult result;
  result.dataset.config = cfg;
  auto record = [&](const EstimateState& s) {
    for (const auto& v : s.vehicles)
      result.dataset.records.push_back({s.k, v.id, v.cell, v.speed});
  };
  EstimateState state = std::move(prior);
  state.k = 0;
  record(state);

  const auto obs_by_step = observations.by_step();
  std::size_t next_event = 0;
  std::deque<std::int64_t> pending_entries;
  std::set<std::int64_t> warned_ids;  // one stale-id warning per vehicle

  for (std::int64_t k = 1; k <= K; ++k) {
    // 1. advance positions with the previous MAP speeds
    auto adv = advance_positions(state, cfg, params.boundary);
    std::vector<VehicleState> vehicles = std::move(adv.vehicles);
    std::map<std::int64_t, std::pair<int, int>> prev;  // id -> (cell, speed) at k-1
    for (const auto& v : state.vehicles) prev[v.id] = {v.cell, v.speed};

    // 2. scheduled arrivals enter at cell 1 when it is free
    while (next_event < entries.events.size() && entries.events[next_event].step == k)
      pending_entries.push_back(entries.events[next_event++].veh_id);
    while (!pending_entries.empty() && !ring) {
      if (!vehicles.empty() && vehicles.back().cell == 1) break;
      int v_entry = cfg.v_max;
      if (!vehicles.empty())
        v_entry = static_cast<int>(std::lround(speed_spacing(vehicles.back().cell - 1, lp)));
      const std::int64_t id = pending_entries.front();
      pending_entries.pop_front();
      vehicles.push_back({id, 1, v_entry});
      prev[id] = {1, v_entry};
    }

    // 3. observations: drop unknown ids, overwrite positions
    std::map<std::int64_t, const Observation*> obs;
    std::vector<Observation> obs_rows;
    if (auto it = obs_by_step.find(k); it != obs_by_step.end()) obs_rows = it->second;
    std::vector<Observation> known;
    known.reserve(obs_rows.size());
    {
      std::map<std::int64_t, std::size_t> index;
      for (std::size_t i = 0; i < vehicles.size(); ++i) index[vehicles[i].id] = i;
      for (const auto& o : obs_rows) {
        if (!index.count(o.veh_id)) {
          if (warned_ids.insert(o.veh_id).second)
            std::cerr << "warning: observation for unknown vehicle " << o.veh_id << " at step "
                      << k << " dropped\n";
          ++result.dropped_observations;
          continue;
        }
        known.push_back(o);
      }
    }
    for (const auto& o : known) obs[o.veh_id] = &o;
    if (!ring) detail::apply_observed_positions(vehicles, obs, cfg.L, nullptr);

    // 4. factors, forest, exact inference
    std::vector<VehiclePrior> priors;
    priors.reserve(vehicles.size());
    for (const auto& v : vehicles) {
      const auto& p = prev.at(v.id);
      priors.push_back({v.id, p.first, p.second, v.cell});
    }
    auto assembled = assemble(priors, known, lp, cfg.L);
    auto inference = infer_forest(assembled.forest, cfg.v_max);

    // 5. MAP readout
    for (auto& v : vehicles) v.speed = map_estimate(inference.by_id.at(v.id).p);

    state.k = k;
    state.vehicles = std::move(vehicles);
    for (std::size_t i = 1; i < state.vehicles.size(); ++i)
      if (state.vehicles[i].cell >= state.vehicles[i - 1].cell)
        throw std::logic_error("estimate_run: vehicle ordering violated at step " +
                               std::to_string(k));
    record(state);

    if (opts.record_marginals) {
      for (const auto& v : state.vehicles) {
        const auto& m = inference.by_id.at(v.id).p;
        for (int s = 0; s < static_cast<int>(m.size()); ++s)
          result.marginals.push_back({k, v.id, s, m[static_cast<std::size_t>(s)]});
      }
    }
    StepDiagnostics diag;
    diag.k = k;
    diag.n_vehicles = static_cast<int>(state.vehicles.size());
    diag.n_observed = static_cast<int>(assembled.chain.clamps.size());
    diag.messages_computed = inference.messages_computed;
    diag.messages_full_chain = full_chain_message_count(diag.n_vehicles);
    diag.dropped_observations = assembled.dropped_observations;
    result.steps.push_back(diag);
  }
  result.dataset.sort_canonical();
  return result;
}

inline void write_marginals_csv(const std::string& path,
                                const std::vector<MarginalRecord>& rows) {
  auto out = csv::open_out(path);
  out << "k,veh_id,v,prob\n";
  for (const auto& r : rows)
    out << r.k << ',' << r.veh_id << ',' << r.v << ',' << csv::fmt(r.prob) << '\n';
}

}  // namespace meso
