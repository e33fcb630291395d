#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "regcut/graph.hpp"
#include "regcut/rng.hpp"

namespace regcut {

/// Approximation constant of hyperplane rounding on the vector-program
/// relaxation: min over x in [-1,1) of (arccos(x)/pi) / ((1-x)/2).
constexpr double kGwAlpha = 0.878;

/// Low-rank solver parameters. rank = 0 selects the default
/// k = min(n, ceil(sqrt(2n))), which is large enough for the relaxation
/// optimum to be representable generically.
struct SdpParams {
  int rank = 0;
  int max_sweeps = 2000;
  double tol_obj = 1e-8;     // relative objective improvement per sweep
  int rounding_trials = 500;
  std::uint64_t seed = 0;
};

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unit vectors u_i, one row per vertex: the relaxation variable.
struct EmbeddingMatrix {
  RowMatrixXd rows;  // n x k, every row unit norm
};

struct SdpResult {
  double relax_value = 0.0;
  std::int64_t best_cut = 0;
  SpinConfig best_config;
  int sweeps_used = 0;
  bool converged = false;
};

/// Relaxation objective: (1/2) sum over edges of (1 - u_i . u_j).
inline double relaxation_objective(const Graph& g, const EmbeddingMatrix& emb) {
  double dot_sum = 0.0;
  for (const auto& [i, j] : g.edges) dot_sum += emb.rows.row(i).dot(emb.rows.row(j));
  return 0.5 * (static_cast<double>(g.m()) - dot_sum);
}

inline int default_embedding_rank(int n) {
  const int k = static_cast<int>(std::ceil(std::sqrt(2.0 * n)));
  return std::max(2, std::min(n, k));
}

namespace detail {

inline SdpParams sdp_defaults(const SdpParams& in, const Graph& g) {
  SdpParams p = in;
  if (p.rank <= 0) p.rank = default_embedding_rank(g.n);
  if (p.rank < 2) throw std::invalid_argument("sdp: rank must be >= 2");
  if (p.max_sweeps < 1) throw std::invalid_argument("sdp: max_sweeps must be >= 1");
  if (p.rounding_trials < 1) throw std::invalid_argument("sdp: rounding_trials must be >= 1");
  return p;
}

/// Block-coordinate ascent on the unit-sphere factorization: each update
/// sets u_i to the exact maximizer -g_i/|g_i| with g_i the sum of neighbor
/// vectors, so the objective never decreases. Zero gradient leaves the row
/// unchanged. Stops when the relative per-sweep improvement drops below
/// tol_obj or after max_sweeps.
inline EmbeddingMatrix solve_embedding(const Graph& g, const SdpParams& p,
                                       int& sweeps_used, bool& converged,
                                       double& objective) {
  const int n = g.n;
  const int k = p.rank;
  EmbeddingMatrix emb;
  emb.rows.resize(n, k);
  Rng rng(p.seed);
  for (int i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      for (int c = 0; c < k; ++c) emb.rows(i, c) = rng.gaussian();
      norm = emb.rows.row(i).norm();
    } while (norm == 0.0);
    emb.rows.row(i) /= norm;
  }

  double obj = relaxation_objective(g, emb);
  converged = false;
  sweeps_used = 0;
  Eigen::RowVectorXd grad(k);
  for (int sweep = 1; sweep <= p.max_sweeps; ++sweep) {
    for (int i = 0; i < n; ++i) {
      grad.setZero();
      for (const int j : g.neighbors(i)) grad += emb.rows.row(j);
      const double norm = grad.norm();
      if (norm > 0.0) emb.rows.row(i) = -grad / norm;
    }
    sweeps_used = sweep;
    const double next = relaxation_objective(g, emb);
    const double gain = next - obj;
    obj = next;
    if (gain <= p.tol_obj * std::max(1.0, std::abs(next))) {
      converged = true;
      break;
    }
  }
  objective = obj;
  return emb;
}

}  // namespace detail

/// Solves the vector-program relaxation; see detail::solve_embedding.
inline EmbeddingMatrix solve_vector_program(const Graph& g, const SdpParams& params) {
  const SdpParams p = detail::sdp_defaults(params, g);
  int sweeps = 0;
  bool conv = false;
  double obj = 0.0;
  return detail::solve_embedding(g, p, sweeps, conv, obj);
}

/// Random-hyperplane rounding, best of `trials` draws. Trial t draws its
/// own generator from mix_seed(seed, t); the normal direction is a
/// k-dimensional Gaussian normalized to unit length; the sign rule maps
/// r . u_i = 0 to +1. Ties between trials keep the earliest winner.
inline std::pair<SpinConfig, std::int64_t> round_hyperplane(
    const EmbeddingMatrix& emb, const Graph& g, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("round_hyperplane: trials must be >= 1");
  if (emb.rows.rows() != g.n) throw std::invalid_argument("round_hyperplane: size mismatch");
  const int k = static_cast<int>(emb.rows.cols());
  SpinConfig best;
  std::int64_t best_cut = -1;
  Eigen::VectorXd r(k);
  SpinConfig x(g.n);
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, t));
    double norm = 0.0;
    do {
      for (int c = 0; c < k; ++c) r(c) = rng.gaussian();
      norm = r.norm();
    } while (norm == 0.0);
    r /= norm;
    for (int i = 0; i < g.n; ++i)
      x[i] = static_cast<std::int8_t>(emb.rows.row(i).dot(r) >= 0.0 ? 1 : -1);
    const std::int64_t cut = cut_value(g, x);
    if (cut > best_cut) {
      best_cut = cut;
      best = x;
    }
  }
  return {std::move(best), best_cut};
}

/// Full pipeline: solve the relaxation, round it, and check the
/// approximation guarantee best_cut >= kGwAlpha * relax_value - 0.5
/// (violation would mean a solver bug, hence the exception).
/// Deterministic given (graph, params).
inline SdpResult gw_solve(const Graph& g, const SdpParams& params) {
  const SdpParams p = detail::sdp_defaults(params, g);
  SdpResult res;
  EmbeddingMatrix emb =
      detail::solve_embedding(g, p, res.sweeps_used, res.converged, res.relax_value);
  auto [config, cut] = round_hyperplane(emb, g, p.rounding_trials, p.seed);
  res.best_config = std::move(config);
  res.best_cut = cut;
  if (static_cast<double>(res.best_cut) < kGwAlpha * res.relax_value - 0.5 - 1e-9)
    throw std::logic_error("gw_solve: rounding guarantee violated");
  return res;
}

}  // namespace regcut
