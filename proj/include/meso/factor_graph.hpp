#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meso/errors.hpp"
#include "meso/observation.hpp"
#include "meso/params.hpp"
#include "meso/potentials.hpp"

// Per-time-step chain factor graph over vehicle speeds. Node factors carry
// the dependence on the previous estimated state through the dynamical
// potentials; edge factors couple adjacent vehicles through the interaction
// potentials. Observed vehicles are clamped, which splits the chain into an
// independent forest.

namespace meso {

struct NodeFactor {
  std::vector<double> values;  // length v_max+1, at least one entry > 0

  double& operator[](int v) { return values[static_cast<std::size_t>(v)]; }
  double operator[](int v) const { return values[static_cast<std::size_t>(v)]; }
  int size() const { return static_cast<int>(values.size()); }
};

// Pairwise factor between a leader and its follower. Entries are strictly
// positive (Boltzmann weights of finite energies).
struct EdgeFactor {
  int n = 0;                   // v_max + 1
  std::vector<double> values;  // row-major [leader_v][follower_v]

  EdgeFactor() = default;
  explicit EdgeFactor(int cardinality)
      : n(cardinality), values(static_cast<std::size_t>(cardinality) * cardinality, 0.0) {}

  double& at(int leader_v, int follower_v) {
    return values[static_cast<std::size_t>(leader_v) * n + follower_v];
  }
  double at(int leader_v, int follower_v) const {
    return values[static_cast<std::size_t>(leader_v) * n + follower_v];
  }
};

// The full chain for one time step, downstream-most vehicle first.
// edge_factors[i] joins ids[i] (leader) and ids[i+1] (follower).
struct FactorChain {
  std::vector<std::int64_t> ids;
  std::vector<NodeFactor> node_factors;
  std::vector<EdgeFactor> edge_factors;
  std::map<std::int64_t, int> clamps;  // id -> observed speed
};

// A maximal run of unclamped vehicles with observed-neighbor edge slices
// absorbed into its terminal node factors.
struct SubChain {
  std::vector<std::int64_t> ids;
  std::vector<NodeFactor> node_factors;
  std::vector<EdgeFactor> edge_factors;
};

struct Forest {
  std::vector<SubChain> chains;
  std::vector<std::pair<std::int64_t, int>> clamped;  // id -> point-mass speed
};

// ------------------------------------------------------------- factor build

// Node factor over speeds: each speed v maps through the position update to
// a candidate cell; the factor weighs the candidate against the deterministic
// propagation of the previous estimate. With beta = +inf this reduces to the
// indicator of the deterministic update.
inline NodeFactor build_node_factor(int prev_cell, int prev_speed,
                                    std::optional<int> prev_leader_cell,
                                    const LatticeParams& lp) {
  NodeFactor f;
  f.values.resize(static_cast<std::size_t>(lp.v_max) + 1);
  for (int v = 0; v <= lp.v_max; ++v) {
    const int candidate = position_update(prev_cell, v, prev_leader_cell);
    const double e =
        dynamical_potential(candidate, prev_cell, prev_speed, prev_leader_cell, lp.beta);
    f[v] = std::isinf(e) ? 0.0 : std::exp(-e);
  }
  return f;
}

// Edge factor for a leader/follower pair. follower_gap is the follower's gap
// to this leader; leader_gap is the leader's gap to its own leader, with
// nullopt selecting the free-boundary form (equilibrium v_max).
inline EdgeFactor build_edge_factor(double follower_gap, std::optional<double> leader_gap,
                                    const LatticeParams& lp) {
  EdgeFactor f(lp.v_max + 1);
  const double eq_f = speed_spacing(follower_gap, lp);
  const double eq_l = leader_gap ? speed_spacing(*leader_gap, lp) : static_cast<double>(lp.v_max);
  for (int w = 0; w <= lp.v_max; ++w) {
    const double rl = w - eq_l;
    for (int v = 0; v <= lp.v_max; ++v) {
      const double rf = v - eq_f;
      f.at(w, v) = std::exp(-(rf * rf + rl * rl) / lp.theta0);
    }
  }
  return f;
}

// What the estimator knows about one vehicle going into step k: its previous
// MAP state and its already-advanced position.
struct VehiclePrior {
  std::int64_t id = 0;
  int prev_cell = 1;
  int prev_speed = 0;
  int advanced_cell = 1;
};

// Builds the chain from priors (downstream-most first). gaps[i] is vehicle
// i's gap to its leader measured on the advanced positions; gaps[0] is
// nullopt for a free boundary and the wrap gap on a ring.
inline FactorChain build_chain(std::span<const VehiclePrior> vehicles,
                               std::span<const std::optional<double>> gaps,
                               const LatticeParams& lp, int L) {
  FactorChain chain;
  const std::size_t n = vehicles.size();
  chain.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    chain.ids.push_back(vehicles[i].id);
    std::optional<int> prev_leader;
    if (i > 0)
      prev_leader = vehicles[i - 1].prev_cell;
    else if (lp.boundary == Boundary::Periodic && n > 1)
      prev_leader = vehicles[n - 1].prev_cell + L;  // unwrapped
    chain.node_factors.push_back(build_node_factor(
        vehicles[i].prev_cell, vehicles[i].prev_speed, prev_leader, lp));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!gaps[i + 1])
      throw ConfigError("build_chain: interior vehicle missing leader gap");
    chain.edge_factors.push_back(build_edge_factor(*gaps[i + 1], gaps[i], lp));
  }
  return chain;
}

// -------------------------------------------------------------- clamping

// Splits a (possibly clamped) chain into independent sub-chains. Terminal
// edge factors adjacent to a clamped vehicle are sliced at the observed
// speed and folded into the neighboring node factor.
inline Forest decompose(const FactorChain& chain) {
  Forest forest;
  const std::size_t n = chain.ids.size();
  auto clamped_speed = [&](std::size_t i) -> std::optional<int> {
    auto it = chain.clamps.find(chain.ids[i]);
    if (it == chain.clamps.end()) return std::nullopt;
    return it->second;
  };

  std::size_t i = 0;
  while (i < n) {
    if (auto v = clamped_speed(i)) {
      forest.clamped.emplace_back(chain.ids[i], *v);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && !clamped_speed(j + 1)) ++j;
    SubChain sub;
    for (std::size_t t = i; t <= j; ++t) {
      sub.ids.push_back(chain.ids[t]);
      sub.node_factors.push_back(chain.node_factors[t]);
      if (t > i) sub.edge_factors.push_back(chain.edge_factors[t - 1]);
    }
    // Downstream clamped neighbor: slice its row out of the joining edge.
    if (i > 0) {
      const int w = *clamped_speed(i - 1);
      const auto& e = chain.edge_factors[i - 1];
      for (int v = 0; v < e.n; ++v) sub.node_factors.front()[v] *= e.at(w, v);
    }
    // Upstream clamped neighbor: slice its column.
    if (j + 1 < n) {
      const int v = *clamped_speed(j + 1);
      const auto& e = chain.edge_factors[j];
      for (int w = 0; w < e.n; ++w) sub.node_factors.back()[w] *= e.at(w, v);
    }
    forest.chains.push_back(std::move(sub));
    i = j + 1;
  }
  return forest;
}

// ------------------------------------------------------------- assembly

struct AssembleResult {
  FactorChain chain;
  Forest forest;
  int dropped_observations = 0;
};

// Builds the step's chain and forest from vehicle priors and the step's
// observations. Gaps come from the advanced positions; probe-reported
// adjacent gaps override them for the flanking pairs. Observations for
// unknown ids are dropped with a warning; contradictory duplicates for one
// vehicle are rejected.
inline AssembleResult assemble(std::span<const VehiclePrior> vehicles,
                               std::span<const Observation> observations,
                               const LatticeParams& lp, int L) {
  const std::size_t n = vehicles.size();
  std::map<std::int64_t, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[vehicles[i].id] = i;

  AssembleResult result;
  std::map<std::int64_t, const Observation*> kept;
  for (const auto& o : observations) {
    if (!index.count(o.veh_id)) {
      std::cerr << "warning: observation for unknown vehicle " << o.veh_id << " at step " << o.k
                << " dropped\n";
      ++result.dropped_observations;
      continue;
    }
    auto [it, fresh] = kept.try_emplace(o.veh_id, &o);
    if (!fresh) {
      const auto& prev = *it->second;
      if (prev.speed != o.speed || prev.cell != o.cell)
        throw DataError("contradictory observations for vehicle " + std::to_string(o.veh_id) +
                        " at step " + std::to_string(o.k));
    }
  }

  // Per-vehicle gap to the leader from advanced positions, then overrides
  // from adjacent sensing.
  std::vector<std::optional<double>> gaps(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0)
      gaps[i] = static_cast<double>(vehicles[i - 1].advanced_cell - vehicles[i].advanced_cell);
    else if (lp.boundary == Boundary::Periodic && n > 1)
      gaps[0] = static_cast<double>(vehicles[n - 1].advanced_cell + L - vehicles[0].advanced_cell);
  }
  for (const auto& [id, obs] : kept) {
    const std::size_t i = index[id];
    if (obs->gap_lead && i > 0) gaps[i] = static_cast<double>(*obs->gap_lead);
    if (obs->gap_follow && i + 1 < n) gaps[i + 1] = static_cast<double>(*obs->gap_follow);
  }

  result.chain = build_chain(vehicles, gaps, lp, L);
  for (const auto& [id, obs] : kept) result.chain.clamps[id] = obs->speed;
  result.forest = decompose(result.chain);
  return result;
}

}  // namespace meso
