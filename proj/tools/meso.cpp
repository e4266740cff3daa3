// Command-line driver: simulate / estimate / evaluate / fd / sweep.
// Batch-style; every command is deterministic given its flags and writes a
// manifest next to its outputs.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meso/dataset.hpp"
#include "meso/estimator.hpp"
#include "meso/fundamental_diagram.hpp"
#include "meso/manifest.hpp"
#include "meso/metrics.hpp"
#include "meso/probes.hpp"
#include "meso/simulator.hpp"
#include "meso/sweep.hpp"
#include "meso/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitDegenerateEvidence = 4;

std::vector<double> parse_rates(const std::string& text) {
  std::vector<double> rates;
  for (const auto& f : meso::csv::split(text)) rates.push_back(meso::csv::to_double(f, "rate"));
  if (rates.empty()) throw meso::ConfigError("--rates: empty list");
  for (double r : rates)
    if (r < 0.0 || r > 1.0) throw meso::ConfigError("--rates: values must be in [0,1]");
  return rates;
}

void write_speedmaps(const std::string& out_dir, const meso::TrajectoryDataset& ds,
                     const std::string& stem) {
  const auto grid = ds.speed_grid();
  meso::write_speedmap_csv(out_dir + "/" + stem + ".csv", grid);
  meso::write_speedmap_pgm(out_dir + "/" + stem + ".pgm", grid, ds.config.v_max);
  meso::write_speedmap_bands_pgm(out_dir + "/" + stem + "_bands.pgm", grid, ds.config);
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
  const auto spec = meso::ScenarioSpec::load_file(config_path);
  const auto ds = meso::run(spec, seed);
  fs::create_directories(out_dir);
  meso::write_trajectory_csv(out_dir + "/trajectories.csv", ds);
  write_speedmaps(out_dir, ds, "speedmap");
  meso::write_manifest(out_dir, "simulate",
                       {{"config", config_path}, {"seed", std::to_string(seed)}, {"out", out_dir}});
  return 0;
}

int cmd_estimate(const std::string& config_path, const std::string& truth_path,
                 double penetration, std::uint64_t probe_seed, const std::string& out_dir,
                 const std::string& strategy, bool adjacent, bool cold_start,
                 bool dump_marginals, bool cell_wise) {
  const auto kv = meso::KeyValues::load(config_path);
  const auto cfg = meso::lattice_config_from(kv);
  const auto params = meso::model_params_from(kv);
  const auto truth = meso::load_trajectories(truth_path, cfg);

  meso::ProbePlan plan;
  plan.rate = penetration;
  plan.seed = probe_seed;
  plan.include_adjacent = adjacent;
  if (strategy == "subset")
    plan.strategy = meso::ProbeStrategy::UniformRandomSubset;
  else if (strategy == "bernoulli")
    plan.strategy = meso::ProbeStrategy::PerStepBernoulli;
  else
    throw meso::ConfigError("--strategy must be 'subset' or 'bernoulli'");

  const auto obs = meso::sample_probes(truth, plan);
  const auto entries = meso::EntrySchedule::from_dataset(truth);
  const auto prior = meso::initial_estimate(
      truth, params, cfg, cold_start ? meso::PriorInit::ColdStart : meso::PriorInit::TruthState);
  meso::EstimatorOptions opts;
  opts.record_marginals = dump_marginals;
  const auto result =
      meso::estimate_run(entries, obs, prior, params, cfg, truth.max_step(), opts);

  meso::MetricsOptions mopts;
  mopts.cell_wise = cell_wise;
  const auto report = meso::evaluate(truth, result.dataset, mopts);

  fs::create_directories(out_dir);
  meso::write_trajectory_csv(out_dir + "/estimated.csv", result.dataset);
  meso::write_observations_csv(out_dir + "/observations.csv", obs);
  write_speedmaps(out_dir, result.dataset, "speedmap_estimated");
  meso::write_metrics_kv(out_dir + "/metrics.txt", report);
  meso::write_metrics_csv(out_dir + "/metrics.csv", report);
  meso::write_error_series_csv(out_dir + "/error_series.csv", report);
  if (dump_marginals) meso::write_marginals_csv(out_dir + "/marginals.csv", result.marginals);
  meso::write_manifest(out_dir, "estimate",
                       {{"config", config_path},
                        {"truth", truth_path},
                        {"penetration", meso::csv::fmt(penetration)},
                        {"probe_seed", std::to_string(probe_seed)},
                        {"strategy", strategy},
                        {"out", out_dir}});
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& truth_path,
                 const std::string& estimate_path, const std::string& out_dir, bool cell_wise,
                 bool normalized) {
  const auto kv = meso::KeyValues::load(config_path);
  const auto cfg = meso::lattice_config_from(kv);
  const auto truth = meso::load_trajectories(truth_path, cfg);
  const auto est = meso::load_trajectories(estimate_path, cfg);
  meso::MetricsOptions opts;
  opts.cell_wise = cell_wise;
  opts.normalized = normalized;
  const auto report = meso::evaluate(truth, est, opts);
  fs::create_directories(out_dir);
  meso::write_metrics_kv(out_dir + "/metrics.txt", report);
  meso::write_metrics_csv(out_dir + "/metrics.csv", report);
  meso::write_error_series_csv(out_dir + "/error_series.csv", report);
  meso::write_manifest(out_dir, "evaluate",
                       {{"config", config_path}, {"truth", truth_path},
                        {"estimate", estimate_path}, {"out", out_dir}});
  return 0;
}

int cmd_fd(const std::string& config_path, const std::string& trajectories_path, int box_cells,
           int box_steps, const std::string& out_dir) {
  const auto kv = meso::KeyValues::load(config_path);
  const auto cfg = meso::lattice_config_from(kv);
  const auto params = meso::model_params_from(kv);
  const auto ds = meso::load_trajectories(trajectories_path, cfg);
  const auto samples = meso::fundamental_diagram(ds, box_cells, box_steps,
                                                 params.boundary == meso::Boundary::Periodic);
  fs::create_directories(out_dir);
  meso::write_fd_csv(out_dir + "/fd.csv", samples);
  meso::write_manifest(out_dir, "fd",
                       {{"config", config_path},
                        {"trajectories", trajectories_path},
                        {"box_cells", std::to_string(box_cells)},
                        {"box_steps", std::to_string(box_steps)},
                        {"out", out_dir}});
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& rates_text, int reps,
              std::uint64_t seed, std::uint64_t probe_seed, const std::string& out_dir) {
  const auto spec = meso::ScenarioSpec::load_file(config_path);
  const auto truth = meso::run(spec, seed);
  meso::SweepConfig sweep;
  sweep.rates = parse_rates(rates_text);
  sweep.repetitions = reps;
  sweep.probe_seed_base = probe_seed;
  const auto rows = meso::run_sweep(truth, spec.params, sweep);
  fs::create_directories(out_dir);
  meso::write_trajectory_csv(out_dir + "/truth.csv", truth);
  meso::write_sweep_csv(out_dir + "/sweep.csv", rows);
  meso::write_mape_histogram_csv(out_dir + "/mape_hist.csv", rows);
  meso::write_manifest(out_dir, "sweep",
                       {{"config", config_path},
                        {"rates", rates_text},
                        {"reps", std::to_string(reps)},
                        {"seed", std::to_string(seed)},
                        {"probe_seed", std::to_string(probe_seed)},
                        {"out", out_dir}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mesoscopic traffic simulation and probe-based state estimation"};
  app.set_version_flag("--version", meso::kVersion);
  app.require_subcommand(1);

  std::string config, truth, estimate_path, trajectories, out, rates = "0.1";
  std::string strategy = "subset";
  std::uint64_t seed = 1, probe_seed = 1;
  double penetration = 0.1;
  int box_cells = meso::kDefaultFdBoxCells, box_steps = meso::kDefaultFdBoxSteps, reps = 1;
  bool adjacent = false, cold_start = false, dump_marginals = false, cell_wise = false,
       normalized = false;

  auto* sim = app.add_subcommand("simulate", "run the mesoscopic simulator");
  sim->add_option("--config", config, "scenario file")->required();
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out", out, "output directory")->required();

  auto* est = app.add_subcommand("estimate", "reconstruct states from probe samples");
  est->add_option("--config", config, "parameter file")->required();
  est->add_option("--truth", truth, "ground-truth trajectory CSV")->required();
  est->add_option("--penetration", penetration, "probe penetration rate in [0,1]")->required();
  est->add_option("--probe-seed", probe_seed, "probe sampling seed");
  est->add_option("--strategy", strategy, "subset | bernoulli");
  est->add_flag("--adjacent", adjacent, "probes also report adjacent gaps");
  est->add_flag("--cold-start", cold_start, "equilibrium prior speeds instead of truth state");
  est->add_flag("--dump-marginals", dump_marginals, "write per-step marginals CSV");
  est->add_flag("--cell-wise", cell_wise, "grid-style speed comparison");
  est->add_option("--out", out, "output directory")->required();

  auto* eva = app.add_subcommand("evaluate", "metrics between two trajectory CSVs");
  eva->add_option("--config", config, "parameter file")->required();
  eva->add_option("--truth", truth, "ground-truth trajectory CSV")->required();
  eva->add_option("--estimate", estimate_path, "estimated trajectory CSV")->required();
  eva->add_flag("--cell-wise", cell_wise, "grid-style speed comparison");
  eva->add_flag("--normalized", normalized, "RMS/mean variant of the error ratios");
  eva->add_option("--out", out, "output directory")->required();

  auto* fd = app.add_subcommand("fd", "fundamental diagram from trajectories");
  fd->add_option("--config", config, "parameter file")->required();
  fd->add_option("--trajectories", trajectories, "trajectory CSV")->required();
  fd->add_option("--box-cells", box_cells, "aggregation box width in cells");
  fd->add_option("--box-steps", box_steps, "aggregation box height in steps");
  fd->add_option("--out", out, "output directory")->required();

  auto* sw = app.add_subcommand("sweep", "Monte Carlo penetration sweep");
  sw->add_option("--config", config, "scenario file")->required();
  sw->add_option("--rates", rates, "comma-separated penetration rates")->required();
  sw->add_option("--reps", reps, "repetitions per rate")->required();
  sw->add_option("--seed", seed, "simulation seed");
  sw->add_option("--probe-seed", probe_seed, "probe seed base");
  sw->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config, seed, out);
    if (est->parsed())
      return cmd_estimate(config, truth, penetration, probe_seed, out, strategy, adjacent,
                          cold_start, dump_marginals, cell_wise);
    if (eva->parsed())
      return cmd_evaluate(config, truth, estimate_path, out, cell_wise, normalized);
    if (fd->parsed()) return cmd_fd(config, trajectories, box_cells, box_steps, out);
    if (sw->parsed()) return cmd_sweep(config, rates, reps, seed, probe_seed, out);
  } catch (const meso::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const meso::DegenerateEvidenceError& e) {
    std::cerr << "degenerate evidence: " << e.what() << '\n';
    return kExitDegenerateEvidence;
  } catch (const meso::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
