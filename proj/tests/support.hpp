#pragma once

// Shared test fixtures and independent oracles. The oracles here are coded
// separately from the library on purpose: tests compare the two.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "regcut/graph.hpp"

namespace testsupport {

inline regcut::Graph triangle() {
  return regcut::Graph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
}

inline regcut::Graph k4() {
  return regcut::Graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
}

inline regcut::Graph cycle(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  edges.emplace_back(0, n - 1);
  return regcut::Graph::from_edges(n, std::move(edges));
}

inline regcut::Graph path3() {
  return regcut::Graph::from_edges(3, {{0, 1}, {1, 2}});
}

/// Independent exhaustive max-cut: plain mask enumeration in ascending mask
/// order, recomputing the cut from the edge list each time, with the
/// opposite bit-to-vertex mapping from the library's Gray-code walk.
inline std::int64_t brute_force_maxcut(const regcut::Graph& g) {
  const int n = g.n;
  std::int64_t best = 0;
  for (std::uint64_t mask = 0; mask < (1ull << (n - 1)); ++mask) {
    std::vector<int> side(n, 1);
    for (int b = 0; b < n - 1; ++b)
      if (mask & (1ull << b)) side[n - 1 - b] = -1;  // reversed vertex order
    std::int64_t cut = 0;
    for (const auto& [i, j] : g.edges) cut += side[i] != side[j];
    best = std::max(best, cut);
  }
  return best;
}

/// Dense boolean matrix power by repeated exact multiplication; reference
/// for the saturated-squaring operator powers.
inline std::vector<std::vector<int>> bool_power(const std::vector<std::vector<int>>& a,
                                                int exponent) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<int>> acc(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i) acc[i][i] = 1;
  for (int e = 0; e < exponent; ++e) {
    std::vector<std::vector<int>> next(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        if (acc[i][k])
          for (int j = 0; j < n; ++j)
            if (a[k][j]) next[i][j] = 1;
    acc = std::move(next);
  }
  return acc;
}

}  // namespace testsupport
