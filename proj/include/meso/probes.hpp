#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "meso/dataset.hpp"
#include "meso/errors.hpp"
#include "meso/observation.hpp"
#include "meso/rng.hpp"

namespace meso {

enum class ProbeStrategy {
  UniformRandomSubset,  // floor(rate * N) vehicle ids are probes for life
  PerStepBernoulli,     // each (vehicle, step) observed independently
};

struct ProbePlan {
  double rate = 0.0;
  ProbeStrategy strategy = ProbeStrategy::UniformRandomSubset;
  std::uint64_t seed = 0;
  bool include_adjacent = false;

  void validate() const {
    if (rate < 0.0 || rate > 1.0) throw ConfigError("ProbePlan: rate must be in [0,1]");
  }
};

// Draws probe observations from ground-truth trajectories. Identical plans
// (including seed) yield identical streams.
inline ObservationSeries sample_probes(const TrajectoryDataset& truth, const ProbePlan& plan) {
  plan.validate();
  Rng rng(plan.seed);

  std::set<std::int64_t> probe_ids;
  if (plan.strategy == ProbeStrategy::UniformRandomSubset) {
    std::vector<std::int64_t> ids;
    for (const auto& [id, life] : truth.lifetimes()) ids.push_back(id);
    shuffle(ids, rng);
    const std::size_t count =
        static_cast<std::size_t>(plan.rate * static_cast<double>(ids.size()));
    probe_ids.insert(ids.begin(), ids.begin() + static_cast<long>(std::min(count, ids.size())));
  }

  ObservationSeries series;
  // Records are sorted (k, cell desc), so within a step the previous record
  // is the leader and the next record the follower.
  for (std::size_t i = 0; i < truth.records.size(); ++i) {
    const auto& r = truth.records[i];
    bool take = false;
    if (plan.strategy == ProbeStrategy::UniformRandomSubset) {
      take = probe_ids.count(r.veh_id) > 0;
    } else {
      take = uniform01(rng) < plan.rate;  // one draw per record, in record order
    }
    if (!take) continue;
    Observation o;
    o.k = r.k;
    o.veh_id = r.veh_id;
    o.cell = r.cell;
    o.speed = r.speed;
    if (plan.include_adjacent) {
      if (i > 0 && truth.records[i - 1].k == r.k)
        o.gap_lead = truth.records[i - 1].cell - r.cell;
      if (i + 1 < truth.records.size() && truth.records[i + 1].k == r.k)
        o.gap_follow = r.cell - truth.records[i + 1].cell;
    }
    series.rows.push_back(o);
  }
  return series;
}

}  // namespace meso
