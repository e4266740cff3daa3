#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "meso/fundamental_diagram.hpp"
#include "meso/metrics.hpp"
#include "meso/probes.hpp"
#include "meso/simulator.hpp"

using namespace meso;

namespace {

TrajectoryDataset make_dataset(const LatticeConfig& cfg,
                               std::vector<TrajectoryRecord> records) {
  TrajectoryDataset ds;
  ds.config = cfg;
  ds.records = std::move(records);
  ds.sort_canonical();
  return ds;
}

}  // namespace

TEST_CASE("relative speed error") {
  SECTION("hand evaluation: one cell, one step, sigma 4 vs 2") {
    LatticeConfig cfg;
    cfg.L = 1;  // degenerate grid, constructed directly for the formula check
    cfg.delta_l = 7.5;
    cfg.delta_t = 1.0;
    cfg.v_max = 4;
    const auto truth = make_dataset(cfg, {{0, 1, 1, 4}});
    const auto est = make_dataset(cfg, {{0, 1, 1, 2}});
    CHECK(eps_sigma_rel(truth, est) == Catch::Approx(0.5));
  }

  LatticeConfig cfg{94, 7.5, 1.0, 4};
  const auto truth = make_dataset(cfg, {{0, 1, 50, 4}, {0, 2, 40, 2}, {1, 1, 54, 3}, {1, 2, 42, 2}});

  SECTION("perfect estimate gives zero") {
    CHECK(eps_sigma_rel(truth, truth) == 0.0);
    CHECK(rmse_kmh(truth, truth) == 0.0);
    CHECK(eps_rho(truth, truth) == 0.0);
  }

  SECTION("imperfect estimate is strictly positive") {
    const auto est = make_dataset(cfg, {{0, 1, 50, 3}, {0, 2, 40, 2}, {1, 1, 54, 3}, {1, 2, 42, 2}});
    CHECK(eps_sigma_rel(truth, est) > 0.0);
  }

  SECTION("all-zero truth speeds are undefined") {
    const auto zeros = make_dataset(cfg, {{0, 1, 50, 0}});
    CHECK_THROWS_AS(eps_sigma_rel(zeros, zeros), DataError);
  }

  SECTION("invariant under a consistent id relabeling") {
    const auto est = make_dataset(cfg, {{0, 1, 50, 3}, {0, 2, 40, 1}, {1, 1, 54, 2}, {1, 2, 42, 2}});
    auto relabel = [](const TrajectoryDataset& ds) {
      TrajectoryDataset out = ds;
      for (auto& r : out.records) r.veh_id += 100;
      return out;
    };
    CHECK(eps_sigma_rel(relabel(truth), relabel(est)) ==
          Catch::Approx(eps_sigma_rel(truth, est)));
    CHECK(eps_rho(relabel(truth), relabel(est)) == Catch::Approx(eps_rho(truth, est)));
  }
}

TEST_CASE("RMSE in km/h") {
  LatticeConfig cfg{94, 7.5, 1.0, 4};
  // constant +1 cell/step bias: 7.5 m/s * 3.6 = 27 km/h
  const auto truth = make_dataset(cfg, {{0, 1, 50, 3}, {1, 1, 53, 2}, {2, 1, 55, 3}});
  const auto est = make_dataset(cfg, {{0, 1, 50, 2}, {1, 1, 53, 1}, {2, 1, 55, 2}});
  CHECK(rmse_kmh(truth, est) == Catch::Approx(27.0));
}

TEST_CASE("density field and relative density error") {
  LatticeConfig cfg{10, 7.5, 1.0, 4};

  SECTION("empty lattice is all zeros") {
    const auto ds = make_dataset(cfg, {});
    const auto rho = density_field(ds);
    CHECK(rho.size() == 1);
    for (double x : rho[0]) CHECK(x == 0.0);
  }

  SECTION("occupied cells carry 1/delta_l") {
    const auto ds = make_dataset(cfg, {{0, 1, 3, 2}, {0, 2, 1, 0}});
    const auto rho = density_field(ds);
    CHECK(rho[0][2] == Catch::Approx(1.0 / 7.5));
    CHECK(rho[0][0] == Catch::Approx(1.0 / 7.5));
    CHECK(rho[0][1] == 0.0);
    double total = 0.0;
    for (double x : rho[0]) total += x;
    CHECK(total * cfg.delta_l == Catch::Approx(2.0));  // occupancy count conserved
  }

  SECTION("one displaced vehicle among M occupied matches the hand formula") {
    const auto truth = make_dataset(cfg, {{0, 1, 9, 2}, {0, 2, 5, 2}, {0, 3, 2, 1}});
    const auto est = make_dataset(cfg, {{0, 1, 9, 2}, {0, 2, 6, 2}, {0, 3, 2, 1}});
    const double dl = 7.5;
    const double expected = std::sqrt(1.0 * 10.0 * 2.0 / (dl * dl)) / (3.0 / dl);
    CHECK(eps_rho(truth, est) == Catch::Approx(expected));
  }
}

TEST_CASE("travel times and MAPE") {
  LatticeConfig cfg{94, 7.5, 1.0, 4};

  auto trajectory = [&](std::int64_t id, std::int64_t entry, std::int64_t last) {
    std::vector<TrajectoryRecord> recs;
    for (std::int64_t k = entry; k <= last; ++k)
      recs.push_back({k, id, static_cast<int>(1 + (k - entry)), 1});
    return recs;
  };

  SECTION("truth 100 s, estimate 113 s gives 13 percent") {
    auto truth_recs = trajectory(1, 0, 99);
    auto filler = trajectory(2, 0, 120);  // horizon filler, never completes
    truth_recs.insert(truth_recs.end(), filler.begin(), filler.end());
    const auto truth = make_dataset(cfg, truth_recs);

    auto est_recs = trajectory(1, 0, 112);
    est_recs.insert(est_recs.end(), filler.begin(), filler.end());
    const auto est = make_dataset(cfg, est_recs);

    const auto tt = travel_times(truth);
    REQUIRE(tt.count(1));
    CHECK(tt.at(1) == Catch::Approx(100.0));
    CHECK_FALSE(tt.count(2));
    CHECK(mape_travel_time(truth, est) == Catch::Approx(13.0));
  }

  SECTION("identical datasets give zero") {
    auto recs = trajectory(1, 0, 50);
    auto filler = trajectory(2, 0, 60);
    recs.insert(recs.end(), filler.begin(), filler.end());
    const auto ds = make_dataset(cfg, recs);
    CHECK(mape_travel_time(ds, ds) == 0.0);
  }
}

TEST_CASE("fundamental diagram") {
  LatticeConfig cfg{94, 7.5, 1.0, 4};

  SECTION("flow-density-speed identity holds by construction") {
    ScenarioSpec spec;
    spec.config = cfg;
    spec.params.theta0 = 110.0;
    spec.params.theta1 = 7.5;
    spec.params.theta2 = 1.1;
    spec.params.p1 = 0.5;
    spec.params.p2 = 0.1;
    spec.K = 120;
    const auto ds = run(spec, 33);
    const auto samples = fundamental_diagram(ds, 20, 20);
    REQUIRE_FALSE(samples.empty());
    for (const auto& s : samples) {
      CHECK(std::abs(s.flow_veh_h - s.density_veh_km * s.speed_kmh) < 1e-9);
      CHECK(s.density_veh_km >= 0.0);
    }
  }

  SECTION("empty boxes are skipped") {
    const auto ds = make_dataset(cfg, {{0, 1, 1, 0}});
    const auto samples = fundamental_diagram(ds, 47, 1);  // two boxes, one empty
    CHECK(samples.size() == 1);
  }

  SECTION("jammed box: zero flow, density equals occupancy") {
    std::vector<TrajectoryRecord> recs;
    for (std::int64_t k = 0; k < 10; ++k)
      for (int i = 0; i < 5; ++i) recs.push_back({k, i + 1, 40 + i, 0});
    const auto ds = make_dataset(cfg, recs);
    const auto samples = fundamental_diagram(ds, 94, 10);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].flow_veh_h == 0.0);
    CHECK(samples[0].density_veh_km ==
          Catch::Approx(5.0 / (94.0 * 7.5) * 1000.0));
    CHECK(samples[0].speed_kmh == 0.0);
  }
}

TEST_CASE("probe sampling") {
  ScenarioSpec spec;
  spec.config = {94, 7.5, 1.0, 4};
  spec.params.theta0 = 110.0;
  spec.params.theta1 = 7.5;
  spec.params.theta2 = 1.1;
  spec.params.p1 = 0.6;
  spec.params.p2 = 0.1;
  spec.K = 200;
  const auto truth = run(spec, 77);

  SECTION("rate 1 observes every record") {
    ProbePlan plan{1.0, ProbeStrategy::UniformRandomSubset, 5, false};
    CHECK(sample_probes(truth, plan).rows.size() == truth.records.size());
  }
  SECTION("rate 0 observes nothing") {
    ProbePlan plan{0.0, ProbeStrategy::UniformRandomSubset, 5, false};
    CHECK(sample_probes(truth, plan).rows.empty());
  }
  SECTION("floor(rate * N) distinct probe ids") {
    const std::size_t n = truth.lifetimes().size();
    REQUIRE(n >= 20);
    ProbePlan plan{0.1, ProbeStrategy::UniformRandomSubset, 5, false};
    const auto obs = sample_probes(truth, plan);
    std::set<std::int64_t> ids;
    for (const auto& o : obs.rows) ids.insert(o.veh_id);
    CHECK(ids.size() == static_cast<std::size_t>(0.1 * static_cast<double>(n)));
  }
  SECTION("same seed yields the identical probe set") {
    ProbePlan plan{0.3, ProbeStrategy::UniformRandomSubset, 9, true};
    const auto a = sample_probes(truth, plan);
    const auto b = sample_probes(truth, plan);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].veh_id == b.rows[i].veh_id);
      CHECK(a.rows[i].k == b.rows[i].k);
    }
  }
  SECTION("per-step Bernoulli rate is roughly honored") {
    ProbePlan plan{0.25, ProbeStrategy::PerStepBernoulli, 5, false};
    const auto obs = sample_probes(truth, plan);
    const double frac =
        static_cast<double>(obs.rows.size()) / static_cast<double>(truth.records.size());
    CHECK(frac > 0.2);
    CHECK(frac < 0.3);
  }
  SECTION("adjacent gaps match the truth neighbors") {
    ProbePlan plan{1.0, ProbeStrategy::UniformRandomSubset, 5, true};
    const auto obs = sample_probes(truth, plan);
    std::map<std::int64_t, std::vector<const Observation*>> per_step;
    for (const auto& o : obs.rows) per_step[o.k].push_back(&o);
    for (const auto& [k, rows] : per_step) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 0) {
          CHECK_FALSE(rows[i]->gap_lead.has_value());
        } else {
          REQUIRE(rows[i]->gap_lead.has_value());
          CHECK(*rows[i]->gap_lead == rows[i - 1]->cell - rows[i]->cell);
        }
      }
    }
  }
}
