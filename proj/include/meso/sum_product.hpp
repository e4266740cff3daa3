#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "meso/errors.hpp"
#include "meso/factor_graph.hpp"

// Exact sum-product on chain factor graphs. Two passes suffice because the
// graphs are trees; messages are normalized after every hop to prevent
// underflow on long chains (only ratios matter before the final
// normalization).

namespace meso {

struct Marginal {
  std::vector<double> p;  // over {0,...,v_max}, sums to 1

  static Marginal point_mass(int v, int v_max) {
    Marginal m;
    m.p.assign(static_cast<std::size_t>(v_max) + 1, 0.0);
    m.p[static_cast<std::size_t>(v)] = 1.0;
    return m;
  }
};

// Per-variable MAP readout; ties break toward the lower speed.
inline int map_estimate(std::span<const double> marginal) {
  int best = 0;
  for (std::size_t v = 1; v < marginal.size(); ++v)
    if (marginal[v] > marginal[static_cast<std::size_t>(best)]) best = static_cast<int>(v);
  return best;
}

// Directed messages of one chain. Forward runs from the downstream end
// (index 0) to the upstream end; backward mirrors it. The `computed` counter
// counts message-vector assignments: m node-factor loads, 4(m-1) pass
// messages and the 2 end copies toward the leaf node factors, i.e. 5m-2 for
// a chain of m >= 2 vehicles.
struct MessageSet {
  std::vector<std::vector<double>> node_to_var;  // psi_i -> V_i
  std::vector<std::vector<double>> var_fwd;      // V_i -> psi_{i,i+1}
  std::vector<std::vector<double>> edge_fwd;     // psi_{i,i+1} -> V_{i+1}
  std::vector<std::vector<double>> var_bwd;      // V_{i+1} -> psi_{i,i+1}
  std::vector<std::vector<double>> edge_bwd;     // psi_{i,i+1} -> V_i
  long computed = 0;
};

namespace detail {

inline void normalize_message(std::vector<double>& m) {
  double s = 0.0;
  for (double x : m) s += x;
  if (s > 0.0)
    for (double& x : m) x /= s;
}

inline std::vector<double> hadamard(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace detail

inline MessageSet forward_pass(const SubChain& chain) {
  const std::size_t m = chain.ids.size();
  MessageSet ms;
  ms.node_to_var.resize(m);
  ms.var_fwd.resize(m > 0 ? m - 1 : 0);
  ms.edge_fwd.resize(m > 0 ? m - 1 : 0);
  ms.var_bwd.resize(m > 0 ? m - 1 : 0);
  ms.edge_bwd.resize(m > 0 ? m - 1 : 0);

  for (std::size_t i = 0; i < m; ++i) {
    ms.node_to_var[i] = chain.node_factors[i].values;
    ++ms.computed;
    if (i + 1 == m) break;

    ms.var_fwd[i] = i == 0 ? ms.node_to_var[0]
                           : detail::hadamard(ms.node_to_var[i], ms.edge_fwd[i - 1]);
    detail::normalize_message(ms.var_fwd[i]);
    ++ms.computed;

    const auto& e = chain.edge_factors[i];
    std::vector<double> out(static_cast<std::size_t>(e.n), 0.0);
    for (int w = 0; w < e.n; ++w) {
      const double mw = ms.var_fwd[i][static_cast<std::size_t>(w)];
      if (mw == 0.0) continue;
      for (int v = 0; v < e.n; ++v) out[static_cast<std::size_t>(v)] += e.at(w, v) * mw;
    }
    detail::normalize_message(out);
    ms.edge_fwd[i] = std::move(out);
    ++ms.computed;
  }
  return ms;
}

inline void backward_pass(const SubChain& chain, MessageSet& ms) {
  const std::size_t m = chain.ids.size();
  if (m == 0) return;
  for (std::size_t i = m; i-- > 1;) {
    // V_i -> psi_{i-1,i}
    ms.var_bwd[i - 1] = i + 1 == m ? ms.node_to_var[i]
                                   : detail::hadamard(ms.node_to_var[i], ms.edge_bwd[i]);
    detail::normalize_message(ms.var_bwd[i - 1]);
    ++ms.computed;

    const auto& e = chain.edge_factors[i - 1];
    std::vector<double> out(static_cast<std::size_t>(e.n), 0.0);
    for (int v = 0; v < e.n; ++v) {
      const double mv = ms.var_bwd[i - 1][static_cast<std::size_t>(v)];
      if (mv == 0.0) continue;
      for (int w = 0; w < e.n; ++w) out[static_cast<std::size_t>(w)] += e.at(w, v) * mv;
    }
    detail::normalize_message(out);
    ms.edge_bwd[i - 1] = std::move(out);
    ++ms.computed;
  }
  // End copies toward the leaf node factors (unused by the marginals but
  // part of the pass structure and of the message count).
  ms.computed += m == 1 ? 1 : 2;
}

inline std::vector<Marginal> marginals(const SubChain& chain, const MessageSet& ms) {
  const std::size_t m = chain.ids.size();
  std::vector<Marginal> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> pi = ms.node_to_var[i];
    if (i > 0) pi = detail::hadamard(pi, ms.edge_fwd[i - 1]);
    if (i + 1 < m) pi = detail::hadamard(pi, ms.edge_bwd[i]);
    double s = 0.0;
    for (double x : pi) s += x;
    if (!(s > 0.0))
      throw DegenerateEvidenceError("all-zero marginal for vehicle " +
                                    std::to_string(chain.ids[i]));
    for (double& x : pi) x /= s;
    out[i].p = std::move(pi);
  }
  return out;
}

struct InferenceResult {
  std::vector<Marginal> marginals;
  long messages_computed = 0;
};

inline InferenceResult sum_product(const SubChain& chain) {
  MessageSet ms = forward_pass(chain);
  backward_pass(chain, ms);
  InferenceResult r;
  r.marginals = marginals(chain, ms);
  r.messages_computed = ms.computed;
  return r;
}

// Exhaustive enumeration oracle. Independent of the message-passing path:
// walks every joint speed assignment and accumulates the factor product.
inline std::vector<Marginal> brute_force_marginals(const SubChain& chain) {
  const std::size_t m = chain.ids.size();
  if (m == 0) return {};
  const int card = chain.node_factors[0].size();
  const double states = std::pow(static_cast<double>(card), static_cast<double>(m));
  if (m > 8 || states > 1e6)
    throw std::invalid_argument("brute_force_marginals: instance too large");

  std::vector<Marginal> out(m);
  for (auto& mg : out) mg.p.assign(static_cast<std::size_t>(card), 0.0);

  std::vector<int> assign(m, 0);
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      w *= chain.node_factors[i][assign[i]];
      if (i + 1 < m) w *= chain.edge_factors[i].at(assign[i], assign[i + 1]);
    }
    for (std::size_t i = 0; i < m; ++i) out[i].p[static_cast<std::size_t>(assign[i])] += w;

    std::size_t pos = 0;
    while (pos < m && ++assign[pos] == card) assign[pos++] = 0;
    if (pos == m) break;
  }
  for (auto& mg : out) {
    double s = 0.0;
    for (double x : mg.p) s += x;
    if (!(s > 0.0)) throw DegenerateEvidenceError("brute force: zero total weight");
    for (double& x : mg.p) x /= s;
  }
  return out;
}

struct ForestResult {
  std::map<std::int64_t, Marginal> by_id;
  long messages_computed = 0;
};

inline ForestResult infer_forest(const Forest& forest, int v_max) {
  ForestResult r;
  for (const auto& sub : forest.chains) {
    auto res = sum_product(sub);
    r.messages_computed += res.messages_computed;
    for (std::size_t i = 0; i < sub.ids.size(); ++i)
      r.by_id.emplace(sub.ids[i], std::move(res.marginals[i]));
  }
  for (const auto& [id, v] : forest.clamped)
    r.by_id.emplace(id, Marginal::point_mass(v, v_max));
  return r;
}

}  // namespace meso
