// regcut: max-cut heuristics on random regular graphs.
//
// Subcommands:
//   gen     sample d-regular graphs to edge-list files
//   solve   run one method on one graph file
//   bench   run a benchmark campaign from a JSON config
//   oracle  exact max-cut by enumeration (n <= 24)
//   train   train a GNN model and save a checkpoint
//
// Exit codes: 0 success, 1 parameter/usage error, 2 runtime failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "regcut/regcut.hpp"

namespace {

regcut::Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file " + path);
  return regcut::read_edge_list(in);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

std::string records_csv(const std::vector<regcut::TrialRecord>& records, bool timings) {
  std::ostringstream out;
  regcut::write_records_csv(out, records, timings);
  return out.str();
}

struct GenArgs {
  int n = 0, d = 0, count = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& a) {
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = regcut::mix_seed(a.seed, i);
    const regcut::Graph g = regcut::generate_regular(a.n, a.d, seed);
    std::ostringstream body;
    regcut::write_edge_list(g, body);
    std::string path = a.out;
    if (a.count > 1) path += "." + std::to_string(i);
    regcut::write_file_atomic(path, body.str());
    std::cout << path << " n=" << g.n << " d=" << g.d << " m=" << g.m() << '\n';
  }
  return 0;
}

struct SolveArgs {
  std::string method, graph_path, config_path, model_path, out, trace_path;
  std::uint64_t seed = 0;
  int samples = 30;
};

int run_solve(const SolveArgs& a) {
  const regcut::Graph g = load_graph(a.graph_path);
  nlohmann::json j;
  if (!a.config_path.empty()) j = load_json(a.config_path);

  std::int64_t cut = 0;
  if (a.method == "eo") {
    regcut::EoParams p;
    if (j.contains("eo")) {
      p.tau = j["eo"].value("tau", p.tau);
      p.t_max = j["eo"].value("tMax", p.t_max);
      p.restarts = j["eo"].value("restarts", p.restarts);
      p.gated = j["eo"].value("gated", p.gated);
    }
    p.seed = a.seed;
    p.record_trace = !a.trace_path.empty();
    const regcut::EoResult res = regcut::eo_run(g, p);
    cut = res.best_cut;
    if (!a.trace_path.empty()) {
      std::ostringstream body;
      body << "step,cut\n";
      for (const auto& [step, c] : res.trace) body << step << ',' << c << '\n';
      regcut::write_file_atomic(a.trace_path, body.str());
    }
  } else if (a.method == "sdp") {
    regcut::SdpParams p;
    if (j.contains("sdp")) {
      p.rank = j["sdp"].value("rank", p.rank);
      p.max_sweeps = j["sdp"].value("maxSweeps", p.max_sweeps);
      p.tol_obj = j["sdp"].value("tolObj", p.tol_obj);
      p.rounding_trials = j["sdp"].value("roundingTrials", p.rounding_trials);
    }
    p.seed = a.seed;
    const regcut::SdpResult res = regcut::gw_solve(g, p);
    cut = res.best_cut;
    std::cout << "relaxValue " << res.relax_value << '\n';
  } else if (a.method == "gnn-relax" || a.method == "gnn-pg") {
    if (a.model_path.empty())
      throw std::invalid_argument("solve: gnn methods need --model <checkpoint>");
    const regcut::GnnModel model = regcut::load_gnn(a.model_path);
    const regcut::Operators ops = regcut::build_line_graph_operators(g, model.cfg.hops);
    cut = regcut::cut_value(g, regcut::infer_cut(model, g, ops, a.samples, a.seed));
  } else {
    throw std::invalid_argument("solve: unknown method '" + a.method + "'");
  }

  const double p_val =
      g.d > 0 ? regcut::p_score(cut, g.n, g.d).value
              : std::numeric_limits<double>::quiet_NaN();
  std::cout << "cut " << cut << '\n';
  std::cout << "P " << regcut::detail::format_double(p_val, 6) << '\n';

  if (!a.out.empty()) {
    regcut::TrialRecord rec;
    rec.method = a.method;
    rec.n = g.n;
    rec.d = g.d;
    rec.graph_seed = g.seed;
    rec.trial_seed = a.seed;
    rec.cut_value = cut;
    rec.p = p_val;
    regcut::write_file_atomic(a.out, records_csv({rec}, false));
  }
  return 0;
}

struct BenchArgs {
  std::string config_path, out, summary, table;
  bool timings = false;
};

int run_bench(const BenchArgs& a) {
  regcut::ExperimentConfig cfg = regcut::parse_experiment_config(load_json(a.config_path));
  if (!a.out.empty()) cfg.out = a.out;
  const auto records = regcut::run_experiment(cfg);
  const auto rows = regcut::aggregate(records);
  if (rows.empty()) std::cerr << "warning: no successful trials\n";

  if (!cfg.out.empty()) regcut::write_file_atomic(cfg.out, records_csv(records, a.timings));
  if (!a.summary.empty()) {
    std::ostringstream body;
    regcut::write_summary_csv(body, rows);
    regcut::write_file_atomic(a.summary, body.str());
  }
  std::cout << regcut::render_table(rows);
  return 0;
}

struct TrainArgs {
  std::string config_path, out;
  int n = 0, d = 0;
  std::uint64_t seed = 0;
  std::string method = "gnn-relax";
};

int run_train(const TrainArgs& a) {
  nlohmann::json j;
  if (!a.config_path.empty()) j = load_json(a.config_path);
  j["method"] = a.method;
  if (a.n > 0) j["n"] = a.n;
  if (a.d > 0) j["d"] = a.d;
  if (!j.contains("n") || !j.contains("d"))
    throw std::invalid_argument("train: need n and d (flags or config)");
  if (!j.contains("graphCount")) j["graphCount"] = 1;
  j["masterSeed"] = a.seed;
  regcut::ExperimentConfig cfg = regcut::parse_experiment_config(j);

  const regcut::GnnModel model = regcut::prepare_gnn_model(cfg);
  regcut::save_gnn(model, a.out);
  std::cout << "saved " << a.out << " (layers=" << model.cfg.layers
            << " hops=" << model.cfg.hops << " width=" << model.cfg.width << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-cut heuristics on random regular graphs"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen", "sample d-regular graphs");
  cmd_gen->add_option("--n", gen.n, "vertex count")->required();
  cmd_gen->add_option("--d", gen.d, "degree")->required();
  cmd_gen->add_option("--seed", gen.seed, "master seed");
  cmd_gen->add_option("--count", gen.count, "number of graphs")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--out", gen.out, "output path (suffixed .i when count > 1)")->required();

  SolveArgs solve;
  auto* cmd_solve = app.add_subcommand("solve", "run one method on one graph");
  cmd_solve->add_option("--method", solve.method, "eo | sdp | gnn-relax | gnn-pg")->required();
  cmd_solve->add_option("--graph", solve.graph_path, "edge-list file")->required();
  cmd_solve->add_option("--config", solve.config_path, "JSON parameter file");
  cmd_solve->add_option("--model", solve.model_path, "GNN checkpoint");
  cmd_solve->add_option("--seed", solve.seed, "solver seed");
  cmd_solve->add_option("--samples", solve.samples, "gnn-pg inference samples");
  cmd_solve->add_option("--out", solve.out, "write a one-record CSV");
  cmd_solve->add_option("--trace", solve.trace_path, "EO cut-vs-step CSV");

  BenchArgs bench;
  auto* cmd_bench = app.add_subcommand("bench", "run a benchmark campaign");
  cmd_bench->add_option("--config", bench.config_path, "experiment JSON")->required();
  cmd_bench->add_option("--out", bench.out, "records CSV (overrides config)");
  cmd_bench->add_option("--summary", bench.summary, "summary CSV path");
  cmd_bench->add_flag("--timings", bench.timings, "append wall-time column (not reproducible)");

  std::string oracle_graph;
  auto* cmd_oracle = app.add_subcommand("oracle", "exact max-cut, n <= 24");
  cmd_oracle->add_option("--graph", oracle_graph, "edge-list file")->required();

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "train a GNN checkpoint");
  cmd_train->add_option("--config", train.config_path, "JSON with gnn/train blocks");
  cmd_train->add_option("--method", train.method, "gnn-relax | gnn-pg");
  cmd_train->add_option("--n", train.n, "training graph size");
  cmd_train->add_option("--d", train.d, "training graph degree");
  cmd_train->add_option("--seed", train.seed, "master seed");
  cmd_train->add_option("--out", train.out, "checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_gen->parsed()) return run_gen(gen);
    if (cmd_solve->parsed()) return run_solve(solve);
    if (cmd_bench->parsed()) return run_bench(bench);
    if (cmd_oracle->parsed()) {
      const regcut::Graph g = load_graph(oracle_graph);
      std::cout << regcut::exact_maxcut(g).value << '\n';
      return 0;
    }
    if (cmd_train->parsed()) return run_train(train);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
