#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "regcut/eo.hpp"
#include "regcut/eval.hpp"
#include "regcut/graph.hpp"
#include "support.hpp"

using regcut::EoParams;
using regcut::EoResult;
using regcut::Graph;
using regcut::SpinConfig;

TEST_CASE("rank distribution is a normalized power law", "[eo]") {
  // frozen against independent arithmetic: k^-1.4 / sum, k = 1..3
  const auto p3 = regcut::rank_distribution(3, 1.4);
  REQUIRE(p3.size() == 3);
  CHECK(p3[0] == Catch::Approx(0.6274599778).epsilon(1e-8));
  CHECK(p3[1] == Catch::Approx(0.2377628708).epsilon(1e-8));
  CHECK(p3[2] == Catch::Approx(0.1347771514).epsilon(1e-8));

  const auto p5 = regcut::rank_distribution(5, 1.4);
  CHECK(p5[0] == Catch::Approx(0.5427775017).epsilon(1e-8));
  CHECK(p5[4] == Catch::Approx(0.0570248080).epsilon(1e-8));

  for (const int n : {1, 2, 7, 100}) {
    const auto p = regcut::rank_distribution(n, 1.4);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == Catch::Approx(1.0));
    CHECK(std::is_sorted(p.rbegin(), p.rend()));  // decreasing in rank
    for (const double v : p) CHECK(v > 0.0);
  }
  // tau = 0 degenerates to uniform rank choice
  for (const double v : regcut::rank_distribution(4, 0.0))
    CHECK(v == Catch::Approx(0.25));
  CHECK_THROWS_AS(regcut::rank_distribution(0, 1.4), std::invalid_argument);
}

TEST_CASE("fitness counts crossing edges per vertex", "[eo]") {
  const Graph k4 = testsupport::k4();
  const auto st = regcut::fitness(k4, {1, 1, -1, -1});
  CHECK(st.bad == std::vector<int>{2, 2, 2, 2});
  CHECK(st.good == std::vector<int>{1, 1, 1, 1});
  for (const double l : st.lambda) CHECK(l == Catch::Approx(2.0 / 3.0));
  CHECK(st.rank_perm == std::vector<int>{0, 1, 2, 3});  // ties break by index

  const Graph tri = testsupport::triangle();
  const auto st2 = regcut::fitness(tri, {1, -1, 1});
  CHECK(st2.bad == std::vector<int>{1, 2, 1});
  CHECK(st2.lambda[1] == Catch::Approx(1.0));
  CHECK(st2.rank_perm == std::vector<int>{0, 2, 1});  // worst-last ordering

  CHECK_THROWS_AS(regcut::fitness(tri, {1, 1}), std::invalid_argument);
  const Graph lonely = Graph::from_edges(3, {{0, 1}});
  CHECK_THROWS_AS(regcut::fitness(lonely, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("lambda weighted by degree double-counts the cut", "[eo]") {
  regcut::Rng rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    const Graph g = regcut::generate_regular(14, 3, 40 + rep);
    SpinConfig x(g.n);
    for (auto& s : x) s = rng.uniform() < 0.5 ? 1 : -1;
    const auto st = regcut::fitness(g, x);
    double weighted = 0.0;
    for (int v = 0; v < g.n; ++v) weighted += st.lambda[v] * g.degree(v);
    CHECK(weighted == Catch::Approx(2.0 * regcut::cut_value(g, x)));
  }
}

TEST_CASE("rank tree selects order statistics over composite keys", "[eo]") {
  regcut::detail::RankTree tree(10);
  for (const int key : {2, 5, 7}) tree.add(key, 1);
  CHECK(tree.select(1) == 2);
  CHECK(tree.select(2) == 5);
  CHECK(tree.select(3) == 7);
  tree.add(5, -1);
  CHECK(tree.select(2) == 7);
  tree.add(0, 1);
  CHECK(tree.select(1) == 0);
}

TEST_CASE("eo finds small optima fast", "[eo]") {
  EoParams p;
  p.t_max = 200;
  p.restarts = 1;
  p.seed = 5;
  CHECK(regcut::eo_run(testsupport::k4(), p).best_cut == 4);

  // single edge is a 1-regular graph; one step fixes any bad start
  const Graph edge = Graph::from_edges(2, {{0, 1}});
  EoParams q;
  q.t_max = 2;
  q.restarts = 1;
  for (std::uint64_t s = 0; s < 8; ++s) {
    q.seed = s;
    CHECK(regcut::eo_run(edge, q).best_cut == 1);
  }
}

TEST_CASE("eo is deterministic and its best config matches its best cut", "[eo]") {
  const Graph g = regcut::generate_regular(24, 3, 77);
  EoParams p;
  p.t_max = 5000;
  p.seed = 123;
  p.record_trace = true;
  const EoResult a = regcut::eo_run(g, p);
  const EoResult b = regcut::eo_run(g, p);
  CHECK(a.best_cut == b.best_cut);
  CHECK(a.best == b.best);
  CHECK(a.trace == b.trace);
  CHECK(regcut::cut_value(g, a.best) == a.best_cut);
}

TEST_CASE("trace samples every n steps on the first restart", "[eo]") {
  const Graph g = regcut::generate_regular(10, 3, 3);
  EoParams p;
  p.t_max = 1000;
  p.restarts = 2;
  p.seed = 9;
  p.record_trace = true;
  const EoResult res = regcut::eo_run(g, p);
  REQUIRE(res.trace.size() == 100);  // t_max / n entries, first run only
  for (std::size_t i = 0; i < res.trace.size(); ++i)
    CHECK(res.trace[i].first == static_cast<std::int64_t>((i + 1) * 10));
}

TEST_CASE("default budget is ten thousand steps per vertex", "[eo]") {
  const Graph g = regcut::generate_regular(10, 3, 3);
  EoParams p;
  p.restarts = 1;
  p.seed = 1;
  p.record_trace = true;  // trace length reveals the step count
  CHECK(regcut::eo_run(g, p).trace.size() == 10000);
}

TEST_CASE("incremental state matches scratch recomputation at every step", "[eo]") {
  const Graph g = regcut::generate_regular(20, 3, 55);
  EoParams p;
  p.t_max = 2000;
  p.restarts = 1;
  p.seed = 6;

  // replay the documented initialization to know the starting cut
  regcut::Rng init(regcut::mix_seed(p.seed, 0));
  SpinConfig x0(g.n);
  for (auto& s : x0) s = init.uniform() < 0.5 ? 1 : -1;
  const std::int64_t initial_cut = regcut::cut_value(g, x0);

  std::int64_t seen_best = initial_cut;
  std::int64_t steps = 0;
  p.on_step = [&](const SpinConfig& x, const std::vector<int>& bad, std::int64_t cut) {
    ++steps;
    const auto st = regcut::fitness(g, x);
    REQUIRE(st.bad == bad);                       // incremental == scratch
    REQUIRE(cut == regcut::cut_value(g, x));      // cut bookkeeping is exact
    std::int64_t twice = 0;
    for (const int b : bad) twice += b;
    REQUIRE(twice == 2 * cut);
    seen_best = std::max(seen_best, cut);
  };
  const EoResult res = regcut::eo_run(g, p);
  CHECK(steps == 2000);                 // unconditional flips accept every step
  CHECK(res.best_cut == seen_best);     // best-so-far tracking is exact
}

TEST_CASE("gated runs only ever improve the cut", "[eo]") {
  const Graph g = regcut::generate_regular(20, 3, 14);
  EoParams p;
  p.t_max = 3000;
  p.restarts = 1;
  p.seed = 4;
  p.gated = true;
  std::int64_t last = -1;
  p.on_step = [&](const SpinConfig&, const std::vector<int>&, std::int64_t cut) {
    if (last >= 0) CHECK(cut > last);
    last = cut;
  };
  const EoResult res = regcut::eo_run(g, p);
  REQUIRE(last >= 0);           // a random start always has improving flips here
  CHECK(res.best_cut == last);  // monotone path ends at its maximum
}

TEST_CASE("extra restarts never hurt", "[eo]") {
  const Graph g = regcut::generate_regular(30, 3, 21);
  EoParams one;
  one.t_max = 4000;
  one.restarts = 1;
  one.seed = 17;
  EoParams two = one;
  two.restarts = 2;
  CHECK(regcut::eo_run(g, two).best_cut >= regcut::eo_run(g, one).best_cut);
}

TEST_CASE("eo validates parameters and graph shape", "[eo]") {
  const Graph irregular = testsupport::path3();
  EoParams p;
  CHECK_THROWS_AS(regcut::eo_run(irregular, p), std::invalid_argument);
  EoParams bad_restarts;
  bad_restarts.restarts = 0;
  CHECK_THROWS_AS(regcut::eo_run(testsupport::k4(), bad_restarts), std::invalid_argument);
  EoParams bad_tau;
  bad_tau.tau = -0.5;
  CHECK_THROWS_AS(regcut::eo_run(testsupport::k4(), bad_tau), std::invalid_argument);
}
