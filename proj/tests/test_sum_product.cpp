#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meso/rng.hpp"
#include "meso/sum_product.hpp"

using namespace meso;

namespace {

SubChain random_chain(int m, int card, Rng& rng) {
  SubChain c;
  for (int i = 0; i < m; ++i) {
    c.ids.push_back(i + 1);
    NodeFactor f;
    for (int v = 0; v < card; ++v) f.values.push_back(0.05 + uniform01(rng));
    c.node_factors.push_back(std::move(f));
    if (i > 0) {
      EdgeFactor e(card);
      for (int w = 0; w < card; ++w)
        for (int v = 0; v < card; ++v) e.at(w, v) = 0.05 + uniform01(rng);
      c.edge_factors.push_back(std::move(e));
    }
  }
  return c;
}

double max_abs_diff(const std::vector<Marginal>& a, const std::vector<Marginal>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t v = 0; v < a[i].p.size(); ++v)
      m = std::max(m, std::abs(a[i].p[v] - b[i].p[v]));
  return m;
}

// Reverse a chain end to end (transposing the pair factors). Marginals must
// not depend on which end acts as the root.
SubChain reversed(const SubChain& c) {
  SubChain r;
  const std::size_t m = c.ids.size();
  for (std::size_t i = m; i-- > 0;) {
    r.ids.push_back(c.ids[i]);
    r.node_factors.push_back(c.node_factors[i]);
  }
  for (std::size_t e = c.edge_factors.size(); e-- > 0;) {
    EdgeFactor t(c.edge_factors[e].n);
    for (int w = 0; w < t.n; ++w)
      for (int v = 0; v < t.n; ++v) t.at(w, v) = c.edge_factors[e].at(v, w);
    r.edge_factors.push_back(std::move(t));
  }
  return r;
}

}  // namespace

TEST_CASE("single-variable chain") {
  SubChain c;
  c.ids = {7};
  c.node_factors.push_back(NodeFactor{{0.2, 0.6, 0.2}});
  const auto ms = forward_pass(c);
  REQUIRE(ms.node_to_var.size() == 1);
  CHECK(ms.node_to_var[0] == std::vector<double>{0.2, 0.6, 0.2});

  const auto r = sum_product(c);
  CHECK(r.marginals[0].p[1] == Catch::Approx(0.6));
  CHECK(r.messages_computed == 2);
}

TEST_CASE("messages match a hand expansion on a 3-vehicle chain") {
  SubChain c;
  c.ids = {1, 2, 3};
  c.node_factors = {NodeFactor{{0.5, 1.0}}, NodeFactor{{1.0, 0.25}}, NodeFactor{{0.75, 0.5}}};
  EdgeFactor e1(2), e2(2);
  e1.at(0, 0) = 1.0; e1.at(0, 1) = 0.5; e1.at(1, 0) = 0.25; e1.at(1, 1) = 2.0;
  e2.at(0, 0) = 0.5; e2.at(0, 1) = 1.5; e2.at(1, 0) = 1.0; e2.at(1, 1) = 0.125;
  c.edge_factors = {e1, e2};

  auto ms = forward_pass(c);

  // mu_{V1 -> psi12} = psi1 (normalized)
  CHECK(ms.var_fwd[0][0] == Catch::Approx(0.5 / 1.5));
  CHECK(ms.var_fwd[0][1] == Catch::Approx(1.0 / 1.5));

  // mu_{psi12 -> V2}(v) = sum_z psi12(z, v) mu_{V1 -> psi12}(z)
  double m0 = e1.at(0, 0) * 0.5 + e1.at(1, 0) * 1.0;
  double m1 = e1.at(0, 1) * 0.5 + e1.at(1, 1) * 1.0;
  const double z = m0 + m1;
  CHECK(ms.edge_fwd[0][0] == Catch::Approx(m0 / z));
  CHECK(ms.edge_fwd[0][1] == Catch::Approx(m1 / z));

  backward_pass(c, ms);

  // mu_{V3 -> psi23} = psi3 (normalized)
  CHECK(ms.var_bwd[1][0] == Catch::Approx(0.75 / 1.25));
  CHECK(ms.var_bwd[1][1] == Catch::Approx(0.5 / 1.25));

  // mu_{psi23 -> V2}(w) = sum_v psi23(w, v) mu_{V3 -> psi23}(v)
  double b0 = e2.at(0, 0) * 0.6 + e2.at(0, 1) * 0.4;
  double b1 = e2.at(1, 0) * 0.6 + e2.at(1, 1) * 0.4;
  const double zb = b0 + b1;
  CHECK(ms.edge_bwd[1][0] == Catch::Approx(b0 / zb));
  CHECK(ms.edge_bwd[1][1] == Catch::Approx(b1 / zb));

  // marginals against the exhaustive oracle
  const auto exact = brute_force_marginals(c);
  const auto bp = marginals(c, ms);
  CHECK(max_abs_diff(bp, exact) < 1e-14);
}

TEST_CASE("copy-through with identity-like edge factors") {
  SubChain c;
  c.ids = {1, 2};
  c.node_factors = {NodeFactor{{1.0, 1.0, 1.0}}, NodeFactor{{1.0, 1.0, 1.0}}};
  EdgeFactor e(3);
  for (int w = 0; w < 3; ++w) e.at(w, w) = 1.0;  // identity
  c.edge_factors = {e};
  auto ms = forward_pass(c);
  CHECK(ms.edge_fwd[0] == ms.var_fwd[0]);
}

TEST_CASE("sum-product equals brute force on random chains") {
  Rng rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2 + static_cast<int>(uniform01(rng) * 5);
    const int card = 3 + static_cast<int>(uniform01(rng) * 3);
    const auto c = random_chain(m, card, rng);
    const auto bp = sum_product(c);
    const auto exact = brute_force_marginals(c);
    worst = std::max(worst, max_abs_diff(bp.marginals, exact));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("marginals are normalized and root-invariant") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_chain(5, 4, rng);
    const auto r = sum_product(c);
    for (const auto& m : r.marginals) {
      const double s = std::accumulate(m.p.begin(), m.p.end(), 0.0);
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    const auto rev = sum_product(reversed(c));
    for (std::size_t i = 0; i < c.ids.size(); ++i)
      for (std::size_t v = 0; v < r.marginals[i].p.size(); ++v)
        CHECK(std::abs(r.marginals[i].p[v] - rev.marginals[c.ids.size() - 1 - i].p[v]) < 1e-12);
  }
}

TEST_CASE("message counter") {
  Rng rng(31);
  for (int m = 2; m <= 6; ++m) {
    const auto c = random_chain(m, 4, rng);
    CHECK(sum_product(c).messages_computed == 5 * m - 2);
  }
}

TEST_CASE("MAP readout") {
  CHECK(map_estimate(std::vector<double>{0.0, 0.0, 0.0, 1.0}) == 3);
  CHECK(map_estimate(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == 0);  // ties break low
  CHECK(map_estimate(std::vector<double>{0.2, 0.5, 0.3}) == 1);
}

TEST_CASE("clamping consistency") {
  Rng rng(17);
  const auto lp_card = 4;
  for (int trial = 0; trial < 20; ++trial) {
    auto base = random_chain(6, lp_card, rng);

    FactorChain chain;
    chain.ids = base.ids;
    chain.node_factors = base.node_factors;
    chain.edge_factors = base.edge_factors;
    const int clamped_idx = 1 + static_cast<int>(uniform01(rng) * 4);
    const int clamped_val = static_cast<int>(uniform01(rng) * lp_card);
    chain.clamps[chain.ids[static_cast<std::size_t>(clamped_idx)]] = clamped_val;

    // forest route
    const auto forest = decompose(chain);
    const auto forest_result = infer_forest(forest, lp_card - 1);

    // full-chain route: restrict the observed variable's node factor
    SubChain full = base;
    for (int v = 0; v < lp_card; ++v)
      if (v != clamped_val) full.node_factors[static_cast<std::size_t>(clamped_idx)][v] = 0.0;
    const auto full_result = sum_product(full);

    for (std::size_t i = 0; i < chain.ids.size(); ++i) {
      const auto& fm = forest_result.by_id.at(chain.ids[i]).p;
      for (std::size_t v = 0; v < fm.size(); ++v)
        CHECK(std::abs(fm[v] - full_result.marginals[i].p[v]) < 1e-12);
    }
    // the observed variable's marginal is a point mass
    const auto& pm = forest_result.by_id.at(chain.ids[static_cast<std::size_t>(clamped_idx)]).p;
    CHECK(pm[static_cast<std::size_t>(clamped_val)] == 1.0);
  }
}

TEST_CASE("degenerate evidence raises") {
  SubChain c;
  c.ids = {1, 2};
  c.node_factors = {NodeFactor{{1.0, 0.0}}, NodeFactor{{0.0, 1.0}}};
  EdgeFactor e(2);
  e.at(0, 0) = 1.0;  // the only assignment compatible with both nodes has weight 0
  c.edge_factors = {e};
  CHECK_THROWS_AS(sum_product(c), DegenerateEvidenceError);
}

TEST_CASE("brute force guard") {
  Rng rng(1);
  const auto big = random_chain(9, 4, rng);
  CHECK_THROWS_AS(brute_force_marginals(big), std::invalid_argument);
}
