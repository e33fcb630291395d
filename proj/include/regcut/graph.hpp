#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "regcut/rng.hpp"

namespace regcut {

/// Spin assignment, one entry per vertex, each +1 or -1.
using SpinConfig = std::vector<std::int8_t>;

/// Simple undirected graph with unit edge weights, CSR neighbor lists.
/// Immutable after construction. `d` is the uniform degree when the graph is
/// regular, 0 otherwise (generated benchmark graphs are always regular).
struct Graph {
  int n = 0;
  int d = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, int>> edges;  // sorted, i < j per pair
  std::vector<int> offsets;                // size n + 1
  std::vector<int> neigh;                  // size 2m, sorted per vertex

  int m() const { return static_cast<int>(edges.size()); }

  int degree(int v) const { return offsets[v + 1] - offsets[v]; }

  std::span<const int> neighbors(int v) const {
    return {neigh.data() + offsets[v],
            static_cast<std::size_t>(degree(v))};
  }

  bool has_edge(int i, int j) const {
    const auto nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  /// Builds a graph from an explicit edge list. Validates vertex range,
  /// rejects self-loops and duplicate edges. Pairs may come in any order.
  static Graph from_edges(int n, std::vector<std::pair<int, int>> edge_list,
                          std::uint64_t seed = 0) {
    if (n <= 0) throw std::invalid_argument("graph: n must be positive");
    for (auto& [a, b] : edge_list) {
      if (a > b) std::swap(a, b);
      if (a < 0 || b >= n) throw std::invalid_argument("graph: vertex out of range");
      if (a == b) throw std::invalid_argument("graph: self-loop");
    }
    std::sort(edge_list.begin(), edge_list.end());
    if (std::adjacent_find(edge_list.begin(), edge_list.end()) != edge_list.end())
      throw std::invalid_argument("graph: duplicate edge");

    Graph g;
    g.n = n;
    g.seed = seed;
    g.edges = std::move(edge_list);
    g.offsets.assign(n + 1, 0);
    for (const auto& [a, b] : g.edges) {
      ++g.offsets[a + 1];
      ++g.offsets[b + 1];
    }
    for (int v = 0; v < n; ++v) g.offsets[v + 1] += g.offsets[v];
    g.neigh.resize(2 * g.edges.size());
    std::vector<int> cursor(g.offsets.begin(), g.offsets.end() - 1);
    for (const auto& [a, b] : g.edges) {
      g.neigh[cursor[a]++] = b;
      g.neigh[cursor[b]++] = a;
    }
    for (int v = 0; v < n; ++v) {
      auto* beg = g.neigh.data() + g.offsets[v];
      std::sort(beg, g.neigh.data() + g.offsets[v + 1]);
    }
    const int d0 = n > 0 ? g.degree(0) : 0;
    bool regular = true;
    for (int v = 1; v < n; ++v) regular &= (g.degree(v) == d0);
    g.d = regular ? d0 : 0;
    return g;
  }
};

namespace detail {

/// One pairing attempt: shuffle the remaining stubs, keep legal pairs and
/// retry conflicted stubs next round. Returns nothing when the residual
/// state is a dead end (no legal pair left), which forces a full restart.
inline std::optional<std::vector<std::pair<int, int>>> try_stub_pairing(
    int n, int d, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n) * d / 2);
  std::unordered_set<std::int64_t> seen;
  seen.reserve(edges.capacity() * 2);
  const auto key = [n](int a, int b) {
    return static_cast<std::int64_t>(a) * n + b;
  };

  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(n) * d);
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < d; ++c) stubs.push_back(v);

  std::vector<int> leftover;
  while (!stubs.empty()) {
    rng.shuffle(stubs.begin(), stubs.end());
    leftover.clear();
    for (std::size_t t = 0; t + 1 < stubs.size(); t += 2) {
      int a = stubs[t], b = stubs[t + 1];
      if (a > b) std::swap(a, b);
      if (a != b && seen.insert(key(a, b)).second) {
        edges.emplace_back(a, b);
      } else {
        leftover.push_back(stubs[t]);
        leftover.push_back(stubs[t + 1]);
      }
    }
    if (leftover.size() == stubs.size()) {
      // No progress this round; restart unless some legal pair still exists.
      std::vector<int> verts(leftover.begin(), leftover.end());
      std::sort(verts.begin(), verts.end());
      verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
      bool legal = false;
      for (std::size_t i = 0; i < verts.size() && !legal; ++i)
        for (std::size_t j = i + 1; j < verts.size() && !legal; ++j)
          legal = !seen.count(key(verts[i], verts[j]));
      if (!legal) return std::nullopt;
    }
    stubs.swap(leftover);
  }
  return edges;
}

}  // namespace detail

/// Samples a simple d-regular graph on n vertices via the stub-pairing
/// (configuration) model, rejecting self-loops and duplicate edges by
/// retrying conflicted stubs and restarting from scratch on dead ends.
/// Deterministic given the seed.
inline Graph generate_regular(int n, int d, std::uint64_t seed) {
  if (n <= 0 || d <= 0) throw std::invalid_argument("generate_regular: n, d must be positive");
  if (d >= n) throw std::invalid_argument("generate_regular: need d < n");
  if ((static_cast<std::int64_t>(n) * d) % 2 != 0)
    throw std::invalid_argument("generate_regular: n*d must be even");

  constexpr int kMaxRestarts = 10000;
  Rng rng(seed);
  for (int attempt = 0; attempt < kMaxRestarts; ++attempt) {
    if (auto edges = detail::try_stub_pairing(n, d, rng)) {
      Graph g = Graph::from_edges(n, std::move(*edges), seed);
      g.seed = seed;
      return g;
    }
  }
  throw std::runtime_error("generate_regular: restart budget exhausted");
}

/// Number of edges cut by the assignment x, i.e. edges whose endpoints get
/// opposite spins. Equals (1/4) x^T L x for the graph Laplacian L.
inline std::int64_t cut_value(const Graph& g, const SpinConfig& x) {
  if (static_cast<int>(x.size()) != g.n)
    throw std::invalid_argument("cut_value: spin size mismatch");
  for (const auto s : x)
    if (s != 1 && s != -1) throw std::invalid_argument("cut_value: spins must be +/-1");
  std::int64_t z = 0;
  for (const auto& [i, j] : g.edges) z += (x[i] != x[j]);
  return z;
}

/// Weighted cut over an explicit edge list; used by oracle tests only
/// (benchmark graphs are unweighted).
inline double cut_value_weighted(const std::vector<std::pair<int, int>>& edges,
                                 const std::vector<double>& w,
                                 const SpinConfig& x) {
  if (edges.size() != w.size())
    throw std::invalid_argument("cut_value_weighted: weight size mismatch");
  double z = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& [i, j] = edges[e];
    if (i < 0 || j < 0 || i >= static_cast<int>(x.size()) || j >= static_cast<int>(x.size()))
      throw std::invalid_argument("cut_value_weighted: vertex out of range");
    if (x[i] != x[j]) z += w[e];
  }
  return z;
}

/// Writes the edge-list format: header line "n d seed", then one "i j" line
/// per edge with i < j, 0-indexed, ASCII decimal, newline terminated.
inline void write_edge_list(const Graph& g, std::ostream& out) {
  out << g.n << ' ' << g.d << ' ' << g.seed << '\n';
  for (const auto& [i, j] : g.edges) out << i << ' ' << j << '\n';
}

/// Parses the edge-list format and validates it against the header: vertex
/// count, declared uniform degree, i < j ordering, no duplicates.
inline Graph read_edge_list(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("edge list: empty input");
  std::istringstream head(line);
  long long n = 0, d = 0;
  unsigned long long seed = 0;
  if (!(head >> n >> d >> seed)) throw std::invalid_argument("edge list: bad header");
  if (n <= 0 || d < 0) throw std::invalid_argument("edge list: bad header values");
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long long a = 0, b = 0;
    if (!(row >> a >> b)) throw std::invalid_argument("edge list: bad edge row");
    if (a >= b) throw std::invalid_argument("edge list: edges must satisfy i < j");
    edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  Graph g = Graph::from_edges(static_cast<int>(n), std::move(edges), seed);
  if (d > 0 && g.d != static_cast<int>(d))
    throw std::invalid_argument("edge list: declared degree does not match edges");
  return g;
}

}  // namespace regcut
