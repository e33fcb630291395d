#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "regcut/graph.hpp"
#include "regcut/record.hpp"

namespace regcut {

/// Asymptotic value of P at the optimum cut of large random regular graphs.
constexpr double kParisiConstant = 0.7632;

/// Normalized cut-quality score: P = (z/n - d/4) / sqrt(d/4).
/// P = 0 for a uniformly random assignment (z = nd/4 in expectation) and
/// approaches kParisiConstant at the optimum as n, d grow.
struct PScore {
  std::int64_t cut = 0;
  int n = 0;
  int d = 0;
  double value = 0.0;
};

inline PScore p_score(std::int64_t z, int n, int d) {
  if (n <= 0 || d <= 0) throw std::invalid_argument("p_score: n, d must be positive");
  PScore s;
  s.cut = z;
  s.n = n;
  s.d = d;
  s.value = (static_cast<double>(z) / n - d / 4.0) / std::sqrt(d / 4.0);
  return s;
}

/// |<x1, x2>| / n, the absolute normalized overlap of two assignments.
/// 1 for identical configurations or exact sign flips, ~0 for independent.
inline double overlap(const SpinConfig& a, const SpinConfig& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("overlap: size mismatch");
  std::int64_t dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    dot += static_cast<int>(a[i]) * static_cast<int>(b[i]);
  return std::abs(static_cast<double>(dot)) / static_cast<double>(a.size());
}

/// Exact maximum cut and argmax.
struct ExactCut {
  std::int64_t value = 0;
  SpinConfig config;
};

/// Brute force over the 2^(n-1) half-space with x_0 = +1, n <= 24 (hard cap).
/// Gray-code order with O(deg) incremental cut updates. Ties resolve to the
/// lexicographically smallest configuration (vertex 0 upward, +1 < -1).
inline ExactCut exact_maxcut(const Graph& g) {
  if (g.n > 24) throw std::invalid_argument("exact_maxcut: n > 24 refused");
  if (g.n <= 0) throw std::invalid_argument("exact_maxcut: empty graph");

  SpinConfig x(g.n, 1);
  std::int64_t cut = 0;
  ExactCut best{cut, x};

  const auto lex_less = [](const SpinConfig& a, const SpinConfig& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] > b[i];  // +1 sorts before -1
    }
    return false;
  };

  const std::uint64_t total = 1ull << (g.n - 1);
  for (std::uint64_t s = 1; s < total; ++s) {
    const int v = std::countr_zero(s) + 1;  // Gray code: flip vertex v
    x[v] = static_cast<std::int8_t>(-x[v]);
    std::int64_t delta = 0;
    for (const int w : g.neighbors(v)) delta += (x[v] != x[w]) ? 1 : -1;
    cut += delta;
    if (cut > best.value || (cut == best.value && lex_less(x, best.config))) {
      best.value = cut;
      best.config = x;
    }
  }
  return best;
}

/// Aggregated P statistics for one (method, n, d) cell.
struct SummaryRow {
  std::string method;
  int n = 0;
  int d = 0;
  int count = 0;
  double mean_p = 0.0;
  double std_p = 0.0;  // population standard deviation
  double min_p = 0.0;
  double max_p = 0.0;
};

/// Groups records by (method, n, d) and reduces their P values. Failed
/// trials are skipped; rows are ordered by (method, n, d).
inline std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records) {
  std::map<std::tuple<std::string, int, int>, std::vector<double>> groups;
  for (const auto& r : records) {
    if (r.failed) continue;
    groups[{r.method, r.n, r.d}].push_back(r.p);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, ps] : groups) {
    SummaryRow row;
    std::tie(row.method, row.n, row.d) = key;
    row.count = static_cast<int>(ps.size());
    double sum = 0.0, sq = 0.0;
    row.min_p = ps.front();
    row.max_p = ps.front();
    for (const double p : ps) {
      sum += p;
      sq += p * p;
      row.min_p = std::min(row.min_p, p);
      row.max_p = std::max(row.max_p, p);
    }
    row.mean_p = sum / row.count;
    row.std_p = std::sqrt(std::max(0.0, sq / row.count - row.mean_p * row.mean_p));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace regcut
