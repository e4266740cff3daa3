#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "meso/estimator.hpp"
#include "meso/metrics.hpp"
#include "meso/probes.hpp"

// Monte Carlo penetration studies: for each rate, repeat the estimation with
// independent probe draws against a fixed ground truth and collect the error
// distributions.

namespace meso {

struct SweepRow {
  double rate = 0.0;
  int rep = 0;
  std::uint64_t probe_seed = 0;
  MetricReport metrics;
};

struct SweepConfig {
  std::vector<double> rates;
  int repetitions = 1;
  std::uint64_t probe_seed_base = 1;
  ProbeStrategy strategy = ProbeStrategy::UniformRandomSubset;
  bool include_adjacent = false;
};

// Probe seed for (rate index, rep); fixed so sweeps are reproducible from
// the base seed alone.
inline std::uint64_t sweep_probe_seed(std::uint64_t base, std::size_t rate_index, int rep) {
  return base + 10007ULL * rate_index + static_cast<std::uint64_t>(rep);
}

inline std::vector<SweepRow> run_sweep(const TrajectoryDataset& truth, const ModelParams& params,
                                       const SweepConfig& sweep,
                                       const MetricsOptions& mopts = {}) {
  const auto entries = EntrySchedule::from_dataset(truth);
  const auto prior = initial_estimate(truth, params, truth.config);
  const std::int64_t K = truth.max_step();

  std::vector<SweepRow> rows;
  for (std::size_t ri = 0; ri < sweep.rates.size(); ++ri) {
    for (int rep = 0; rep < sweep.repetitions; ++rep) {
      ProbePlan plan;
      plan.rate = sweep.rates[ri];
      plan.strategy = sweep.strategy;
      plan.include_adjacent = sweep.include_adjacent;
      plan.seed = sweep_probe_seed(sweep.probe_seed_base, ri, rep);
      const auto obs = sample_probes(truth, plan);
      const auto est = estimate_run(entries, obs, prior, params, truth.config, K);
      SweepRow row;
      row.rate = plan.rate;
      row.rep = rep;
      row.probe_seed = plan.seed;
      row.metrics = evaluate(truth, est.dataset, mopts);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  auto out = csv::open_out(path);
  out << "rate,rep,probe_seed,eps_sigma_rel,rmse_kmh,eps_rho,mape_travel_time\n";
  for (const auto& r : rows)
    out << csv::fmt(r.rate) << ',' << r.rep << ',' << r.probe_seed << ','
        << csv::fmt(r.metrics.eps_sigma_rel) << ',' << csv::fmt(r.metrics.rmse_kmh) << ','
        << csv::fmt(r.metrics.eps_rho) << ',' << csv::fmt(r.metrics.mape_travel_time) << '\n';
}

// Histogram of travel-time MAPE per rate, fixed-width bins.
inline void write_mape_histogram_csv(const std::string& path, const std::vector<SweepRow>& rows,
                                     double bin_width = 2.0) {
  double max_mape = 0.0;
  for (const auto& r : rows) max_mape = std::max(max_mape, r.metrics.mape_travel_time);
  const int n_bins = std::max(1, static_cast<int>(max_mape / bin_width) + 1);

  std::vector<double> rates;
  for (const auto& r : rows)
    if (std::find(rates.begin(), rates.end(), r.rate) == rates.end()) rates.push_back(r.rate);

  auto out = csv::open_out(path);
  out << "rate,bin_lo,bin_hi,count\n";
  for (double rate : rates) {
    std::vector<int> counts(static_cast<std::size_t>(n_bins), 0);
    for (const auto& r : rows) {
      if (r.rate != rate) continue;
      int b = static_cast<int>(r.metrics.mape_travel_time / bin_width);
      b = std::clamp(b, 0, n_bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < n_bins; ++b)
      out << csv::fmt(rate) << ',' << csv::fmt(b * bin_width) << ','
          << csv::fmt((b + 1) * bin_width) << ',' << counts[static_cast<std::size_t>(b)] << '\n';
  }
}

}  // namespace meso
