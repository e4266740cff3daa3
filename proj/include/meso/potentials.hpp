#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "meso/params.hpp"
#include "meso/state.hpp"

// Potential/energy/probability formulas shared by the simulator and the
// estimator. Everything here is a pure function of its inputs; speeds and
// spacings are in lattice units (cells/step, cells) unless noted.

namespace meso {

// Weight applied to each pairwise interaction term in the total energy.
inline constexpr double kInteractionEnergyWeight = 2.0;

inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

// Equilibrium speed for a given spacing (gap to leader, in cells).
// Real-valued, in [0, v_max] cells/step.
inline double speed_spacing(double gap_cells, const LatticeParams& lp) {
  const double v = (gap_cells - lp.theta1) / lp.theta2;
  return std::min(std::max(v, 0.0), static_cast<double>(lp.v_max));
}

namespace detail {
inline void check_speed(int v, int v_max, const char* name) {
  if (v < 0 || v > v_max)
    throw std::out_of_range(std::string(name) + " speed outside {0,...,v_max}");
}
}  // namespace detail

// Pairwise interaction energy for a follower-leader pair: penalizes each
// speed's deviation from its equilibrium value. g_follow is the follower's
// gap to the leader, g_lead the leader's gap to its own leader.
inline double interaction_potential(int v_follower, int v_leader, double g_follow,
                                    double g_lead, const LatticeParams& lp) {
  detail::check_speed(v_follower, lp.v_max, "follower");
  detail::check_speed(v_leader, lp.v_max, "leader");
  const double rf = v_follower - speed_spacing(g_follow, lp);
  const double rl = v_leader - speed_spacing(g_lead, lp);
  return (rf * rf + rl * rl) / lp.theta0;
}

// Free-boundary form: both speeds are pulled toward v_max.
inline double free_boundary_interaction(int v_follower, int v_leader, const LatticeParams& lp) {
  detail::check_speed(v_follower, lp.v_max, "follower");
  detail::check_speed(v_leader, lp.v_max, "leader");
  const double rf = v_follower - static_cast<double>(lp.v_max);
  const double rl = v_leader - static_cast<double>(lp.v_max);
  return (rf * rf + rl * rl) / lp.theta0;
}

// Collision-free position update. Unbounded leader (nullopt) means the
// vehicle is unobstructed.
inline int position_update(int s, int v, std::optional<int> s_leader) {
  const int target = s + v;
  return s_leader ? std::min(target, *s_leader - 1) : target;
}

// Energy of a candidate position given the previous state. Positions at or
// beyond the previous leader position carry infinite energy (zero
// probability). beta = +inf selects the deterministic update rule: zero
// energy exactly at min{prev_s + prev_v, prev_leader - 1}.
inline double dynamical_potential(int s, int prev_s, int prev_v,
                                  std::optional<int> prev_leader_s, double beta) {
  if (prev_leader_s && s > *prev_leader_s - 1) return kInfiniteEnergy;
  if (std::isinf(beta)) {
    const int target = position_update(prev_s, prev_v, prev_leader_s);
    return s == target ? 0.0 : kInfiniteEnergy;
  }
  const double d = s - prev_s - prev_v;
  return beta * d * d;
}

// Total energy of a proposed (positions, speeds) configuration for the
// vehicles of `prev`, in the same downstream-first order. Node terms come
// from the dynamical potentials, pair terms from the interaction potentials
// with gaps taken from the proposed positions. The downstream-most vehicle's
// pair term uses the boundary form (v_max equilibrium for a free boundary,
// wrap gap on a ring).
inline double total_energy(std::span<const int> positions, std::span<const int> speeds,
                           const TrafficState& prev, const LatticeParams& lp, int L) {
  const std::size_t n = prev.vehicles.size();
  if (positions.size() != n || speeds.size() != n)
    throw std::invalid_argument("total_energy: array sizes must match vehicle count");
  if (n == 0) return 0.0;

  const bool ring = lp.boundary == Boundary::Periodic;
  auto gap_to_leader = [&](std::size_t i) -> double {
    if (i == 0) return positions[n - 1] + L - positions[0];  // ring wrap
    return positions[i - 1] - positions[i];
  };

  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<int> prev_leader;
    if (i > 0)
      prev_leader = prev.vehicles[i - 1].cell;
    else if (ring && n > 1)
      prev_leader = prev.vehicles[n - 1].cell + L;
    energy += dynamical_potential(positions[i], prev.vehicles[i].cell,
                                  prev.vehicles[i].speed, prev_leader, lp.beta);
    if (std::isinf(energy)) return kInfiniteEnergy;

    double pair;
    if (i == 0) {
      if (ring && n > 1) {
        pair = interaction_potential(speeds[0], speeds[n - 1], gap_to_leader(0),
                                     gap_to_leader(n - 1), lp);
      } else {
        // Free boundary: only the vehicle's own residual; the virtual
        // leader's term is a constant and is dropped.
        const double r = speeds[0] - static_cast<double>(lp.v_max);
        pair = r * r / lp.theta0;
      }
    } else {
      const bool leader_free = (i == 1) && !ring;
      const double rf = speeds[i] - speed_spacing(gap_to_leader(i), lp);
      const double rl =
          speeds[i - 1] - (leader_free ? static_cast<double>(lp.v_max)
                                       : speed_spacing(gap_to_leader(i - 1), lp));
      pair = (rf * rf + rl * rl) / lp.theta0;
    }
    energy += kInteractionEnergyWeight * pair;
  }
  return energy;
}

// exp(-E) with hard support constraints: any speed outside {0,...,v_max} or
// position outside the lattice gets weight exactly 0.
inline double joint_probability_unnormalized(std::span<const int> positions,
                                             std::span<const int> speeds,
                                             const TrafficState& prev,
                                             const LatticeParams& lp, int L) {
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    if (speeds[i] < 0 || speeds[i] > lp.v_max) return 0.0;
    if (positions[i] < 1 || positions[i] > L) return 0.0;
  }
  const double e = total_energy(positions, speeds, prev, lp, L);
  return std::isinf(e) ? 0.0 : std::exp(-e);
}

}  // namespace meso
