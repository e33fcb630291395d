#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "regcut/graph.hpp"
#include "regcut/rng.hpp"

namespace regcut {

/// Extremal-optimization parameters. t_max <= 0 selects the default budget
/// of 10^4 * n steps per restart; every restart gets the full budget.
struct EoParams {
  double tau = 1.4;
  std::int64_t t_max = 0;
  int restarts = 2;
  std::uint64_t seed = 0;
  bool gated = false;        // flip only when the cut strictly improves
  bool record_trace = false; // sample (step, cut) every n steps, first restart
  /// Diagnostic hook, called after every accepted step with the current
  /// assignment, per-vertex crossing-edge counts, and cut. Test use only.
  std::function<void(const SpinConfig&, const std::vector<int>&, std::int64_t)>
      on_step;
};

/// Per-vertex fitness snapshot: lambda_i = (crossing edges at i) / deg(i),
/// higher is better. rank_perm lists vertices in ascending (lambda, index)
/// order, so rank_perm[0] is the worst vertex (rank 1).
struct FitnessState {
  std::vector<int> bad;       // crossing edges per vertex
  std::vector<int> good;      // deg - bad
  std::vector<double> lambda;
  std::vector<int> rank_perm;
};

inline FitnessState fitness(const Graph& g, const SpinConfig& x) {
  if (static_cast<int>(x.size()) != g.n)
    throw std::invalid_argument("fitness: spin size mismatch");
  FitnessState st;
  st.bad.assign(g.n, 0);
  st.good.assign(g.n, 0);
  st.lambda.assign(g.n, 0.0);
  for (const auto& [i, j] : g.edges) {
    if (x[i] != x[j]) {
      ++st.bad[i];
      ++st.bad[j];
    }
  }
  for (int v = 0; v < g.n; ++v) {
    const int deg = g.degree(v);
    if (deg == 0) throw std::invalid_argument("fitness: isolated vertex");
    st.good[v] = deg - st.bad[v];
    st.lambda[v] = static_cast<double>(st.bad[v]) / deg;
  }
  st.rank_perm.resize(g.n);
  std::iota(st.rank_perm.begin(), st.rank_perm.end(), 0);
  std::sort(st.rank_perm.begin(), st.rank_perm.end(), [&](int a, int b) {
    if (st.lambda[a] != st.lambda[b]) return st.lambda[a] < st.lambda[b];
    return a < b;
  });
  return st;
}

/// P(k) proportional to k^(-tau) over ranks k = 1..n, normalized.
/// tau = 0 gives the uniform distribution.
inline std::vector<double> rank_distribution(int n, double tau) {
  if (n <= 0) throw std::invalid_argument("rank_distribution: n must be positive");
  std::vector<double> p(n);
  double sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    p[k - 1] = std::pow(static_cast<double>(k), -tau);
    sum += p[k - 1];
  }
  for (double& v : p) v /= sum;
  return p;
}

namespace detail {

/// Fenwick tree over composite keys bad(v)*n + v holding one entry per
/// vertex. Supports O(log) k-th order statistic, so sampling the rank-k
/// vertex in ascending (lambda, index) order is a single select: for a
/// regular graph lambda sorts exactly like bad, and the +v term breaks
/// ties by vertex index.
class RankTree {
 public:
  explicit RankTree(int slots) : size_(slots), tree_(slots + 1, 0) {
    high_ = 1;
    while (high_ * 2 <= size_) high_ *= 2;
  }

  void add(int key, int delta) {
    for (int i = key + 1; i <= size_; i += i & -i) tree_[i] += delta;
  }

  /// Key holding the k-th (1-based) present entry.
  int select(int k) const {
    int pos = 0;
    for (int pw = high_; pw > 0; pw >>= 1) {
      const int next = pos + pw;
      if (next <= size_ && tree_[next] < k) {
        pos = next;
        k -= tree_[next];
      }
    }
    return pos;
  }

 private:
  int size_;
  int high_;
  std::vector<int> tree_;
};

}  // namespace detail

/// Result of an EO run: best assignment seen across all restarts.
struct EoResult {
  SpinConfig best;
  std::int64_t best_cut = -1;
  std::vector<std::pair<std::int64_t, std::int64_t>> trace;
};

/// tau-EO on a regular graph. Each step samples a rank from
/// rank_distribution(n, tau), flips the vertex at that rank (rank 1 = worst,
/// i.e. lowest lambda; ties by vertex index), and tracks the best cut seen.
/// Flips are unconditional unless params.gated is set. Restart r uses seed
/// mix_seed(params.seed, r); runs are merged by max with earlier restarts
/// winning ties. Deterministic given (graph, params).
inline EoResult eo_run(const Graph& g, const EoParams& params) {
  if (g.d <= 0)
    throw std::invalid_argument("eo_run: graph must be regular (generated benchmarks are)");
  if (params.restarts < 1) throw std::invalid_argument("eo_run: restarts must be >= 1");
  if (!(params.tau >= 0.0)) throw std::invalid_argument("eo_run: tau must be >= 0");
  const int n = g.n;
  const int d = g.d;
  const std::int64_t t_max =
      params.t_max > 0 ? params.t_max : static_cast<std::int64_t>(10000) * n;

  const std::vector<double> pk = rank_distribution(n, params.tau);
  std::vector<double> cum(n);
  std::partial_sum(pk.begin(), pk.end(), cum.begin());
  cum.back() = 1.0;  // guard the binary search against rounding

  EoResult result;
  for (int run = 0; run < params.restarts; ++run) {
    Rng rng(mix_seed(params.seed, run));
    SpinConfig x(n);
    for (int v = 0; v < n; ++v)
      x[v] = static_cast<std::int8_t>(rng.uniform() < 0.5 ? 1 : -1);

    std::vector<int> bad(n, 0);
    for (const auto& [i, j] : g.edges)
      if (x[i] != x[j]) {
        ++bad[i];
        ++bad[j];
      }
    std::int64_t cut = 0;
    for (int v = 0; v < n; ++v) cut += bad[v];
    cut /= 2;

    detail::RankTree tree((d + 1) * n);
    for (int v = 0; v < n; ++v) tree.add(bad[v] * n + v, 1);

    SpinConfig best_x = x;
    std::int64_t best = cut;

    for (std::int64_t t = 1; t <= t_max; ++t) {
      const double u = rng.uniform();
      const int k =
          static_cast<int>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()) + 1;
      const int v = tree.select(std::min(k, n)) % n;
      const std::int64_t gain = d - 2 * bad[v];
      if (!params.gated || gain > 0) {
        x[v] = static_cast<std::int8_t>(-x[v]);
        tree.add(bad[v] * n + v, -1);
        for (const int w : g.neighbors(v)) {
          tree.add(bad[w] * n + w, -1);
          bad[w] += (x[w] != x[v]) ? 1 : -1;
          tree.add(bad[w] * n + w, 1);
        }
        bad[v] = d - bad[v];
        tree.add(bad[v] * n + v, 1);
        cut += gain;
        if (cut > best) {
          best = cut;
          best_x = x;
        }
        if (params.on_step) params.on_step(x, bad, cut);
      }
      if (params.record_trace && run == 0 && t % n == 0)
        result.trace.emplace_back(t, cut);
    }

    if (best > result.best_cut) {
      result.best_cut = best;
      result.best = std::move(best_x);
    }
  }
  return result;
}

}  // namespace regcut
