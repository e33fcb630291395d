#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <vector>

#include "regcut/graph.hpp"

namespace regcut {

using SpMat = Eigen::SparseMatrix<double>;

/// Indexes the 2|E| directed arcs of a graph. Arc 2e is (i -> j) and arc
/// 2e+1 is (j -> i) for the e-th undirected edge (i, j), i < j, so the
/// orientation-reversal involution is id ^ 1.
struct DirectedEdgeIndex {
  const Graph* graph = nullptr;
  std::vector<std::pair<int, int>> arcs;  // size 2m, (source, target)

  int count() const { return static_cast<int>(arcs.size()); }

  int reverse(int arc) const { return arc ^ 1; }

  /// Arc id for the ordered pair (i -> j); the edge must exist.
  int index_of(int i, int j) const {
    const int a = std::min(i, j), b = std::max(i, j);
    const auto it = std::lower_bound(graph->edges.begin(), graph->edges.end(),
                                     std::make_pair(a, b));
    if (it == graph->edges.end() || *it != std::make_pair(a, b))
      throw std::invalid_argument("DirectedEdgeIndex: no such edge");
    const int e = static_cast<int>(it - graph->edges.begin());
    return 2 * e + (i < j ? 0 : 1);
  }

  static DirectedEdgeIndex build(const Graph& g) {
    DirectedEdgeIndex idx;
    idx.graph = &g;
    idx.arcs.reserve(2 * g.edges.size());
    for (const auto& [i, j] : g.edges) {
      idx.arcs.emplace_back(i, j);
      idx.arcs.emplace_back(j, i);
    }
    return idx;
  }
};

/// Structural operators shared by the solvers:
///   laplacian        n x n,  D - A
///   nonbacktracking  2m x 2m, B[(i->j),(j->k)] = 1 for k != i
///   deg_line         row sums of B, deg(target) - 1 per arc
///   incid_sum (Pm)   n x 2m, +1 at source and target of each arc
///   incid_diff (Pd)  n x 2m, +1 at source, -1 at target
///   power_adj[j]     n x n saturated adjacency powers, j = 0..J-1:
///                    P_0 = A, P_{j+1} = min(1, P_j^2) entrywise
///   power_adj_line[j] same construction on B, for the line-graph branch
/// All matrices are immutable after construction.
struct Operators {
  DirectedEdgeIndex dir;
  SpMat laplacian;
  SpMat nonbacktracking;
  Eigen::VectorXd deg_node;
  Eigen::VectorXd deg_line;
  SpMat incid_sum;
  SpMat incid_diff;
  std::vector<SpMat> power_adj;
  std::vector<SpMat> power_adj_line;
};

namespace detail {

/// Entrywise min(1, .) on the nonzero pattern: every stored coefficient
/// becomes exactly 1.0 (explicit zeros are pruned first).
inline SpMat saturate(SpMat m) {
  m.prune(0.0);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) it.valueRef() = 1.0;
  return m;
}

inline std::vector<SpMat> saturated_powers(const SpMat& base, int count) {
  std::vector<SpMat> out;
  out.reserve(count);
  if (count == 0) return out;
  out.push_back(base);
  for (int j = 1; j < count; ++j)
    out.push_back(saturate(SpMat(out.back() * out.back())));
  return out;
}

}  // namespace detail

/// Builds every operator needed by the solvers for hop count J >= 0.
inline Operators build_line_graph_operators(const Graph& g, int J) {
  if (J < 0) throw std::invalid_argument("build_line_graph_operators: J must be >= 0");
  Operators ops;
  ops.dir = DirectedEdgeIndex::build(g);
  const int n = g.n;
  const int arcs = ops.dir.count();

  using T = Eigen::Triplet<double>;
  std::vector<T> trip;

  // adjacency and Laplacian
  trip.reserve(2 * g.edges.size());
  for (const auto& [i, j] : g.edges) {
    trip.emplace_back(i, j, 1.0);
    trip.emplace_back(j, i, 1.0);
  }
  SpMat adj(n, n);
  adj.setFromTriplets(trip.begin(), trip.end());

  ops.deg_node.resize(n);
  for (int v = 0; v < n; ++v) ops.deg_node(v) = g.degree(v);

  trip.clear();
  for (const auto& [i, j] : g.edges) {
    trip.emplace_back(i, j, -1.0);
    trip.emplace_back(j, i, -1.0);
  }
  for (int v = 0; v < n; ++v) trip.emplace_back(v, v, ops.deg_node(v));
  ops.laplacian.resize(n, n);
  ops.laplacian.setFromTriplets(trip.begin(), trip.end());

  // non-backtracking operator: arc (i -> j) continues to (j -> w), w != i
  trip.clear();
  for (int a = 0; a < arcs; ++a) {
    const auto [i, j] = ops.dir.arcs[a];
    for (const int w : g.neighbors(j)) {
      if (w == i) continue;
      trip.emplace_back(a, ops.dir.index_of(j, w), 1.0);
    }
  }
  ops.nonbacktracking.resize(arcs, arcs);
  ops.nonbacktracking.setFromTriplets(trip.begin(), trip.end());

  ops.deg_line.resize(arcs);
  for (int a = 0; a < arcs; ++a)
    ops.deg_line(a) = g.degree(ops.dir.arcs[a].second) - 1;

  // signed incidence: columns indexed by arcs
  std::vector<T> sum_trip, diff_trip;
  sum_trip.reserve(2 * arcs);
  diff_trip.reserve(2 * arcs);
  for (int a = 0; a < arcs; ++a) {
    const auto [i, j] = ops.dir.arcs[a];
    sum_trip.emplace_back(i, a, 1.0);
    sum_trip.emplace_back(j, a, 1.0);
    diff_trip.emplace_back(i, a, 1.0);
    diff_trip.emplace_back(j, a, -1.0);
  }
  ops.incid_sum.resize(n, arcs);
  ops.incid_sum.setFromTriplets(sum_trip.begin(), sum_trip.end());
  ops.incid_diff.resize(n, arcs);
  ops.incid_diff.setFromTriplets(diff_trip.begin(), diff_trip.end());

  ops.power_adj = detail::saturated_powers(adj, J);
  ops.power_adj_line = detail::saturated_powers(ops.nonbacktracking, J);
  return ops;
}

}  // namespace regcut
