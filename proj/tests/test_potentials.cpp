#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <limits>

#include "meso/potentials.hpp"

using namespace meso;

namespace {

// delta_l = delta_t = 1 keeps lattice units equal to physical units.
LatticeParams unit_lattice_params(double theta0 = 110.0, double theta1 = 7.5,
                                  double theta2 = 1.1, int v_max = 34) {
  LatticeConfig cfg{100, 1.0, 1.0, v_max};
  ModelParams p;
  p.theta0 = theta0;
  p.theta1 = theta1;
  p.theta2 = theta2;
  return LatticeParams(p, cfg);
}

}  // namespace

TEST_CASE("speed-spacing relation") {
  const auto lp = unit_lattice_params();

  SECTION("gap at the minimum spacing gives zero") {
    CHECK(speed_spacing(7.5, lp) == 0.0);
    CHECK(speed_spacing(2.0, lp) == 0.0);  // projected
  }
  SECTION("large gaps saturate at v_max") {
    CHECK(speed_spacing(1e6, lp) == 34.0);
  }
  SECTION("hand evaluation: 18.5 m gap, theta1 = 7.5, theta2 = 1.1") {
    CHECK(speed_spacing(18.5, lp) == Catch::Approx(10.0));
  }
  SECTION("non-decreasing and bounded") {
    double prev = 0.0;
    for (double g = 0.0; g <= 60.0; g += 0.25) {
      const double v = speed_spacing(g, lp);
      CHECK(v >= prev - 1e-15);
      CHECK(v >= 0.0);
      CHECK(v <= 34.0);
      prev = v;
    }
  }
}

TEST_CASE("interaction potential") {
  const auto lp = unit_lattice_params();

  SECTION("zero at joint equilibrium") {
    // gap 18.5 -> equilibrium 10 exactly
    CHECK(interaction_potential(10, 10, 18.5, 18.5, lp) == 0.0);
  }
  SECTION("hand evaluation: residuals 2 and 0 with theta0 = 110") {
    CHECK(interaction_potential(12, 10, 18.5, 18.5, lp) == Catch::Approx(4.0 / 110.0));
  }
  SECTION("free-boundary form vanishes at v_max") {
    CHECK(free_boundary_interaction(34, 34, lp) == 0.0);
    CHECK(free_boundary_interaction(33, 34, lp) == Catch::Approx(1.0 / 110.0));
  }
  SECTION("rejects speeds outside the range") {
    CHECK_THROWS_AS(interaction_potential(-1, 0, 10, 10, lp), std::out_of_range);
    CHECK_THROWS_AS(interaction_potential(0, 35, 10, 10, lp), std::out_of_range);
  }
  SECTION("non-negative, zero only at equilibrium") {
    for (int v = 0; v <= 34; v += 7) {
      for (int w = 0; w <= 34; w += 7) {
        const double e = interaction_potential(v, w, 18.5, 18.5, lp);
        CHECK(e >= 0.0);
        if (v != 10 || w != 10) CHECK(e > 0.0);
      }
    }
  }
}

TEST_CASE("position update") {
  CHECK(position_update(3, 2, 10) == 5);
  CHECK(position_update(3, 2, 4) == 3);
  CHECK(position_update(3, 0, 4) == 3);
  CHECK(position_update(3, 2, std::nullopt) == 5);

  SECTION("never reaches the leader") {
    for (int s = 1; s <= 10; ++s)
      for (int v = 0; v <= 5; ++v)
        for (int lead = s + 1; lead <= 12; ++lead)
          CHECK(position_update(s, v, lead) < lead);
  }
}

TEST_CASE("dynamical potential") {
  SECTION("zero residual") {
    CHECK(dynamical_potential(5, 3, 2, 10, 2.0) == 0.0);
  }
  SECTION("hand evaluation: beta = 2, one cell short") {
    CHECK(dynamical_potential(4, 3, 2, 10, 2.0) == Catch::Approx(2.0));
  }
  SECTION("collision region carries infinite energy") {
    CHECK(std::isinf(dynamical_potential(10, 3, 2, 10, 2.0)));
    CHECK(std::isinf(dynamical_potential(12, 3, 2, 10, 2.0)));
  }
  SECTION("deterministic mode is the indicator of the position update") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(dynamical_potential(5, 3, 2, 10, inf) == 0.0);
    CHECK(std::isinf(dynamical_potential(4, 3, 2, 10, inf)));
    // blocked: target = min(3+4, 6-1) = 5
    CHECK(dynamical_potential(5, 3, 4, 6, inf) == 0.0);
  }
}

TEST_CASE("total energy") {
  LatticeConfig cfg{100, 1.0, 1.0, 34};
  ModelParams p;
  p.theta0 = 110.0;
  p.theta1 = 7.5;
  p.theta2 = 1.1;
  p.beta = 0.5;
  const LatticeParams lp(p, cfg);

  SECTION("empty vehicle set") {
    TrafficState prev = TrafficState::from_vehicles(0, {}, cfg);
    CHECK(total_energy({}, {}, prev, lp, cfg.L) == 0.0);
  }

  SECTION("single free vehicle at v_max with the deterministic position") {
    TrafficState prev = TrafficState::from_vehicles(0, {{1, 40, 34}}, cfg);
    const std::array<int, 1> pos{74};  // 40 + 34
    const std::array<int, 1> spd{34};
    CHECK(total_energy(pos, spd, prev, lp, cfg.L) == 0.0);
  }

  SECTION("two vehicles match a term-by-term oracle") {
    TrafficState prev = TrafficState::from_vehicles(0, {{1, 50, 5}, {2, 30, 4}}, cfg);
    const std::array<int, 2> pos{54, 33};
    const std::array<int, 2> spd{6, 3};

    // independent recomputation
    const double node1 = 0.5 * (54 - 50 - 5) * (54 - 50 - 5);
    const double node2 = 0.5 * (33 - 30 - 4) * (33 - 30 - 4);
    const double pair1 = (6.0 - 34.0) * (6.0 - 34.0) / 110.0;  // leader vs free boundary
    const double eq_f = std::min(std::max((54.0 - 33.0 - 7.5) / 1.1, 0.0), 34.0);
    const double pair2 = ((3.0 - eq_f) * (3.0 - eq_f) + (6.0 - 34.0) * (6.0 - 34.0)) / 110.0;
    const double expected = node1 + node2 + 2.0 * (pair1 + pair2);

    CHECK(total_energy(pos, spd, prev, lp, cfg.L) == Catch::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("joint probability support") {
  LatticeConfig cfg{4, 1.0, 1.0, 2};
  ModelParams p;
  p.theta0 = 1.0;
  p.theta1 = 0.0;
  p.theta2 = 1.0;
  p.beta = 1.0;
  const LatticeParams lp(p, cfg);
  TrafficState prev = TrafficState::from_vehicles(0, {{1, 3, 1}, {2, 1, 1}}, cfg);

  SECTION("out-of-range speed gets exactly zero") {
    const std::array<int, 2> pos{4, 2};
    CHECK(joint_probability_unnormalized(pos, std::array<int, 2>{3, 0}, prev, lp, cfg.L) == 0.0);
    CHECK(joint_probability_unnormalized(pos, std::array<int, 2>{-1, 0}, prev, lp, cfg.L) == 0.0);
  }
  SECTION("out-of-lattice position gets exactly zero") {
    CHECK(joint_probability_unnormalized(std::array<int, 2>{5, 2}, std::array<int, 2>{1, 1},
                                         prev, lp, cfg.L) == 0.0);
    CHECK(joint_probability_unnormalized(std::array<int, 2>{4, 0}, std::array<int, 2>{1, 1},
                                         prev, lp, cfg.L) == 0.0);
  }
  SECTION("weight composes as exp(-E)") {
    const std::array<int, 2> pos{4, 2};
    const std::array<int, 2> spd{1, 0};
    const double e = total_energy(pos, spd, prev, lp, cfg.L);
    CHECK(joint_probability_unnormalized(pos, spd, prev, lp, cfg.L) ==
          Catch::Approx(std::exp(-e)));
  }
  SECTION("exhaustive support check on the tiny lattice") {
    // every configuration outside the legal support has weight zero; inside,
    // weight matches exp(-E)
    for (int s1 = 0; s1 <= 5; ++s1)
      for (int s2 = 0; s2 <= 5; ++s2)
        for (int v1 = -1; v1 <= 3; ++v1)
          for (int v2 = -1; v2 <= 3; ++v2) {
            const std::array<int, 2> pos{s1, s2};
            const std::array<int, 2> spd{v1, v2};
            const double w = joint_probability_unnormalized(pos, spd, prev, lp, cfg.L);
            const bool legal = s1 >= 1 && s1 <= 4 && s2 >= 1 && s2 <= 4 && v1 >= 0 &&
                               v1 <= 2 && v2 >= 0 && v2 <= 2;
            if (!legal) {
              CHECK(w == 0.0);
            } else {
              CHECK(w >= 0.0);
            }
          }
  }
}
