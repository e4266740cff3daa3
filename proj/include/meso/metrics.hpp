#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meso/csv.hpp"
#include "meso/dataset.hpp"
#include "meso/errors.hpp"

// Error metrics between ground-truth and estimated trajectory datasets.
// Since volumes are known and estimation is per-vehicle, speeds are matched
// by vehicle id and evaluated at truth-occupied cells; a cell-wise grid
// comparison is available behind MetricsOptions::cell_wise.

namespace meso {

struct MetricsOptions {
  bool cell_wise = false;   // compare sigma grids directly, mismatches at speed 0
  bool normalized = false;  // RMS / mean form instead of the printed sqrt(KL...) ratio
};

namespace detail {

struct PairSums {
  double sq = 0.0;     // sum of squared speed errors
  double truth = 0.0;  // sum of truth speeds
  std::int64_t count = 0;
};

inline PairSums matched_pairs(const TrajectoryDataset& truth, const TrajectoryDataset& est) {
  std::map<std::pair<std::int64_t, std::int64_t>, int> est_speed;
  for (const auto& r : est.records) est_speed[{r.k, r.veh_id}] = r.speed;
  PairSums s;
  for (const auto& r : truth.records) {
    auto it = est_speed.find({r.k, r.veh_id});
    if (it == est_speed.end()) continue;
    const double d = r.speed - it->second;
    s.sq += d * d;
    s.truth += r.speed;
    ++s.count;
  }
  return s;
}

inline PairSums cellwise_pairs(const TrajectoryDataset& truth, const TrajectoryDataset& est) {
  const auto tg = truth.speed_grid();
  auto eg = est.speed_grid();
  eg.resize(tg.size(), std::vector<int>(static_cast<std::size_t>(truth.config.L), -1));
  PairSums s;
  for (std::size_t k = 0; k < tg.size(); ++k) {
    for (std::size_t l = 0; l < tg[k].size(); ++l) {
      const int t = tg[k][l];
      const int e = eg[k][l];
      if (t < 0 && e < 0) continue;
      const double tv = t < 0 ? 0.0 : t;
      const double ev = e < 0 ? 0.0 : e;
      const double d = tv - ev;
      s.sq += d * d;
      if (t >= 0) s.truth += t;
      ++s.count;
    }
  }
  return s;
}

}  // namespace detail

// Relative speed-field error: sqrt(K*L*sum (sigma - sigma_hat)^2) / sum sigma,
// as printed, with K the number of recorded steps. Speeds in cells/step.
inline double eps_sigma_rel(const TrajectoryDataset& truth, const TrajectoryDataset& est,
                            const MetricsOptions& opts = {}) {
  const auto s = opts.cell_wise ? detail::cellwise_pairs(truth, est)
                                : detail::matched_pairs(truth, est);
  if (s.truth <= 0.0) throw DataError("eps_sigma_rel: undefined (all-zero truth speeds)");
  if (opts.normalized) {
    if (s.count == 0) throw DataError("eps_sigma_rel: no matched pairs");
    return std::sqrt(s.sq / static_cast<double>(s.count)) /
           (s.truth / static_cast<double>(s.count));
  }
  const double kl = static_cast<double>(truth.step_count()) * truth.config.L;
  return std::sqrt(kl * s.sq) / s.truth;
}

// RMSE over id-matched vehicle-step speed pairs, in km/h.
inline double rmse_kmh(const TrajectoryDataset& truth, const TrajectoryDataset& est) {
  const auto s = detail::matched_pairs(truth, est);
  if (s.count == 0) throw DataError("rmse_kmh: no matched vehicle-step pairs");
  return truth.config.cell_speed_to_kmh(std::sqrt(s.sq / static_cast<double>(s.count)));
}

// Density grid in vehicles per meter: 1/delta_l where occupied, 0 elsewhere.
inline std::vector<std::vector<double>> density_field(const TrajectoryDataset& ds) {
  const auto grid = ds.speed_grid();
  std::vector<std::vector<double>> rho(grid.size(),
                                       std::vector<double>(static_cast<std::size_t>(ds.config.L), 0.0));
  const double inv = 1.0 / ds.config.delta_l;
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (std::size_t l = 0; l < grid[k].size(); ++l)
      if (grid[k][l] >= 0) rho[k][l] = inv;
  return rho;
}

// Relative density error, same printed form as eps_sigma_rel, compared
// cell-wise on the occupancy grids.
inline double eps_rho(const TrajectoryDataset& truth, const TrajectoryDataset& est,
                      const MetricsOptions& opts = {}) {
  const auto tr = density_field(truth);
  auto er = density_field(est);
  er.resize(tr.size(), std::vector<double>(static_cast<std::size_t>(truth.config.L), 0.0));
  double sq = 0.0, total = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    for (std::size_t l = 0; l < tr[k].size(); ++l) {
      const double d = tr[k][l] - er[k][l];
      sq += d * d;
      total += tr[k][l];
    }
  }
  if (total <= 0.0) throw DataError("eps_rho: undefined (empty truth)");
  if (opts.normalized) {
    const double cells = static_cast<double>(tr.size()) * truth.config.L;
    return std::sqrt(sq / cells) / (total / cells);
  }
  const double kl = static_cast<double>(truth.step_count()) * truth.config.L;
  return std::sqrt(kl * sq) / total;
}

// Travel time per vehicle that completes the segment (leaves before the
// horizon end): (exit step - entry step) * delta_t.
inline std::map<std::int64_t, double> travel_times(const TrajectoryDataset& ds) {
  std::map<std::int64_t, double> out;
  const std::int64_t horizon = ds.max_step();
  for (const auto& [id, life] : ds.lifetimes())
    if (life.last < horizon) out[id] = static_cast<double>(life.last + 1 - life.entry) * ds.config.delta_t;
  return out;
}

// Mean absolute percent error of travel times over vehicles completing in
// both datasets, in percent.
inline double mape_travel_time(const TrajectoryDataset& truth, const TrajectoryDataset& est) {
  const auto tt = travel_times(truth);
  const auto te = travel_times(est);
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& [id, t] : tt) {
    auto it = te.find(id);
    if (it == te.end() || t <= 0.0) continue;
    sum += std::abs(it->second - t) / t;
    ++count;
  }
  if (count == 0) throw DataError("mape_travel_time: no vehicle completes in both datasets");
  return 100.0 * sum / static_cast<double>(count);
}

struct MetricReport {
  double eps_sigma_rel = 0.0;
  double rmse_kmh = 0.0;
  double eps_rho = 0.0;
  double mape_travel_time = 0.0;
  std::vector<double> per_step_rmse_kmh;  // error series over time
};

inline MetricReport evaluate(const TrajectoryDataset& truth, const TrajectoryDataset& est,
                             const MetricsOptions& opts = {}) {
  MetricReport r;
  r.eps_sigma_rel = eps_sigma_rel(truth, est, opts);
  r.rmse_kmh = rmse_kmh(truth, est);
  r.eps_rho = eps_rho(truth, est, opts);
  r.mape_travel_time = mape_travel_time(truth, est);

  std::map<std::pair<std::int64_t, std::int64_t>, int> est_speed;
  for (const auto& rec : est.records) est_speed[{rec.k, rec.veh_id}] = rec.speed;
  std::map<std::int64_t, std::pair<double, std::int64_t>> per_step;
  for (const auto& rec : truth.records) {
    auto it = est_speed.find({rec.k, rec.veh_id});
    if (it == est_speed.end()) continue;
    const double d = rec.speed - it->second;
    auto& acc = per_step[rec.k];
    acc.first += d * d;
    acc.second += 1;
  }
  r.per_step_rmse_kmh.assign(static_cast<std::size_t>(truth.max_step()) + 1, 0.0);
  for (const auto& [k, acc] : per_step)
    r.per_step_rmse_kmh[static_cast<std::size_t>(k)] =
        truth.config.cell_speed_to_kmh(std::sqrt(acc.first / static_cast<double>(acc.second)));
  return r;
}

inline void write_metrics_kv(const std::string& path, const MetricReport& r) {
  auto out = csv::open_out(path);
  out << "eps_sigma_rel = " << csv::fmt(r.eps_sigma_rel) << '\n'
      << "rmse_kmh = " << csv::fmt(r.rmse_kmh) << '\n'
      << "eps_rho = " << csv::fmt(r.eps_rho) << '\n'
      << "mape_travel_time = " << csv::fmt(r.mape_travel_time) << '\n';
}

inline void write_metrics_csv(const std::string& path, const MetricReport& r) {
  auto out = csv::open_out(path);
  out << "eps_sigma_rel,rmse_kmh,eps_rho,mape_travel_time\n"
      << csv::fmt(r.eps_sigma_rel) << ',' << csv::fmt(r.rmse_kmh) << ',' << csv::fmt(r.eps_rho)
      << ',' << csv::fmt(r.mape_travel_time) << '\n';
}

inline void write_error_series_csv(const std::string& path, const MetricReport& r) {
  auto out = csv::open_out(path);
  out << "k,rmse_kmh\n";
  for (std::size_t k = 0; k < r.per_step_rmse_kmh.size(); ++k)
    out << k << ',' << csv::fmt(r.per_step_rmse_kmh[k]) << '\n';
}

}  // namespace meso
