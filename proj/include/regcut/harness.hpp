#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "regcut/eo.hpp"
#include "regcut/eval.hpp"
#include "regcut/gnn.hpp"
#include "regcut/graph.hpp"
#include "regcut/record.hpp"
#include "regcut/rng.hpp"
#include "regcut/sdp.hpp"

namespace regcut {

/// Seed space for training streams, disjoint from benchmark graph seeds
/// (benchmark graph i uses mix_seed(master, i) directly).
constexpr std::uint64_t kTrainSeedSalt = 0x747261696E736474ull;

/// One benchmark campaign: a method evaluated on graph_count random
/// (n, d)-regular graphs. GNN methods train one model on a stream of
/// train.training_graphs graphs before evaluating.
struct ExperimentConfig {
  std::string method;  // "eo" | "sdp" | "gnn-relax" | "gnn-pg"
  int n = 0;
  int d = 0;
  int graph_count = 1;
  std::uint64_t master_seed = 0;
  EoParams eo;
  SdpParams sdp;
  GnnConfig gnn;
  TrainConfig train;
  std::string model_path;  // optional pre-trained checkpoint for gnn methods
  std::string out;
};

inline bool is_gnn_method(const std::string& method) {
  return method == "gnn-relax" || method == "gnn-pg";
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.method = j.at("method").get<std::string>();
  if (cfg.method != "eo" && cfg.method != "sdp" && !is_gnn_method(cfg.method))
    throw std::invalid_argument("config: unknown method '" + cfg.method + "'");
  cfg.n = j.at("n").get<int>();
  cfg.d = j.at("d").get<int>();
  cfg.graph_count = j.value("graphCount", 1);
  cfg.master_seed = j.value("masterSeed", std::uint64_t{0});
  cfg.model_path = j.value("modelPath", std::string{});
  cfg.out = j.value("out", std::string{});
  if (cfg.n <= 0 || cfg.d <= 0 || cfg.graph_count <= 0)
    throw std::invalid_argument("config: n, d, graphCount must be positive");

  if (j.contains("eo")) {
    const auto& e = j.at("eo");
    cfg.eo.tau = e.value("tau", cfg.eo.tau);
    cfg.eo.t_max = e.value("tMax", cfg.eo.t_max);
    cfg.eo.restarts = e.value("restarts", cfg.eo.restarts);
    cfg.eo.gated = e.value("gated", cfg.eo.gated);
  }
  if (j.contains("sdp")) {
    const auto& s = j.at("sdp");
    cfg.sdp.rank = s.value("rank", cfg.sdp.rank);
    cfg.sdp.max_sweeps = s.value("maxSweeps", cfg.sdp.max_sweeps);
    cfg.sdp.tol_obj = s.value("tolObj", cfg.sdp.tol_obj);
    cfg.sdp.rounding_trials = s.value("roundingTrials", cfg.sdp.rounding_trials);
  }
  if (j.contains("gnn")) {
    const auto& g = j.at("gnn");
    cfg.gnn.layers = g.value("layers", cfg.gnn.layers);
    cfg.gnn.hops = g.value("hops", cfg.gnn.hops);
    cfg.gnn.width = g.value("width", cfg.gnn.width);
    cfg.gnn.degree_term = g.value("degreeTerm", cfg.gnn.degree_term);
    cfg.gnn.feature_norm = g.value("featureNorm", cfg.gnn.feature_norm);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    cfg.train.training_graphs = t.value("trainingGraphs", cfg.train.training_graphs);
    cfg.train.sample_count = t.value("sampleCount", cfg.train.sample_count);
    cfg.train.learning_rate = t.value("learningRate", cfg.train.learning_rate);
    cfg.train.batch_size = t.value("batchSize", cfg.train.batch_size);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.pg_baseline = t.value("pgBaseline", cfg.train.pg_baseline);
  }
  cfg.gnn.loss =
      cfg.method == "gnn-pg" ? LossKind::kPolicyGradient : LossKind::kRelaxation;
  return cfg;
}

/// Worker budget: REGCUT_THREADS when set (clamped to >= 1), otherwise the
/// hardware concurrency.
inline int thread_budget() {
  if (const char* env = std::getenv("REGCUT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, count) on a pool bounded by thread_budget().
/// Work items must be independent; results keyed by i stay deterministic
/// regardless of scheduling.
template <typename F>
inline void parallel_for(int count, F&& body) {
  const int workers = std::min(thread_budget(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Trains the model an experiment needs (or loads it from model_path).
inline GnnModel prepare_gnn_model(const ExperimentConfig& cfg) {
  GnnConfig gc = cfg.gnn;
  gc.loss = cfg.method == "gnn-pg" ? LossKind::kPolicyGradient : LossKind::kRelaxation;
  if (!cfg.model_path.empty()) {
    GnnModel m = load_gnn(cfg.model_path);
    if (m.cfg.loss != gc.loss)
      throw std::invalid_argument("experiment: checkpoint loss kind does not match method");
    return m;
  }
  GnnModel model = init_gnn(gc, mix_seed(cfg.master_seed ^ kTrainSeedSalt, 0));
  TrainConfig tc = cfg.train;
  tc.seed = mix_seed(cfg.master_seed ^ kTrainSeedSalt, 1);
  const int n = cfg.n, d = cfg.d;
  const std::uint64_t salt = cfg.master_seed ^ kTrainSeedSalt;
  train(model, tc, [n, d, salt](int i) {
    return generate_regular(n, d, mix_seed(salt, 2 + i));
  });
  return model;
}

/// Runs the campaign. Benchmark graph i uses seed mix_seed(master_seed, i)
/// and trial seed mix_seed(graph_seed, 1). Trials run on the worker pool;
/// records come back ordered by graph index, so the output is independent
/// of the thread count. A failed trial is recorded with its error and the
/// run continues.
inline std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
  std::unique_ptr<GnnModel> model;
  if (is_gnn_method(cfg.method)) model = std::make_unique<GnnModel>(prepare_gnn_model(cfg));

  std::vector<TrialRecord> records(cfg.graph_count);
  parallel_for(cfg.graph_count, [&](int i) {
    TrialRecord rec;
    rec.method = cfg.method;
    rec.n = cfg.n;
    rec.d = cfg.d;
    rec.graph_seed = mix_seed(cfg.master_seed, i);
    rec.trial_seed = mix_seed(rec.graph_seed, 1);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Graph g = generate_regular(cfg.n, cfg.d, rec.graph_seed);
      std::int64_t cut = 0;
      if (cfg.method == "eo") {
        EoParams p = cfg.eo;
        p.seed = rec.trial_seed;
        cut = eo_run(g, p).best_cut;
      } else if (cfg.method == "sdp") {
        SdpParams p = cfg.sdp;
        p.seed = rec.trial_seed;
        cut = gw_solve(g, p).best_cut;
      } else {
        const Operators ops = build_line_graph_operators(g, model->cfg.hops);
        cut = cut_value(
            g, infer_cut(*model, g, ops, cfg.train.sample_count, rec.trial_seed));
      }
      rec.cut_value = cut;
      rec.p = p_score(cut, cfg.n, cfg.d).value;
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    records[i] = std::move(rec);
  });
  return records;
}

namespace detail {

inline std::string format_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string sanitize_csv(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace detail

/// Per-trial CSV. Deterministic for a fixed (config, seed): wall time is
/// only emitted when with_timings is set, since it can never be
/// byte-reproducible.
inline void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                              bool with_timings = false) {
  out << "method,n,d,graphSeed,trialSeed,cutValue,P,status";
  if (with_timings) out << ",wallTimeMs";
  out << '\n';
  for (const auto& r : records) {
    out << r.method << ',' << r.n << ',' << r.d << ',' << r.graph_seed << ','
        << r.trial_seed << ',';
    if (r.failed) {
      out << ",,error:" << detail::sanitize_csv(r.error);
    } else {
      out << r.cut_value << ',' << detail::format_double(r.p, 6) << ",ok";
    }
    if (with_timings) out << ',' << detail::format_double(r.wall_time_ms, 3);
    out << '\n';
  }
}

/// Summary CSV, one row per (method, n, d) cell, P statistics to 4 decimals.
inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,n,d,count,mean_P,std_P,min_P,max_P\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.n << ',' << r.d << ',' << r.count << ','
        << detail::format_double(r.mean_p, 4) << ',' << detail::format_double(r.std_p, 4)
        << ',' << detail::format_double(r.min_p, 4) << ','
        << detail::format_double(r.max_p, 4) << '\n';
  }
}

/// Text table of mean P: one row per (n, d), one column per method.
inline std::string render_table(const std::vector<SummaryRow>& rows) {
  static const std::vector<std::string> order = {"gnn-relax", "gnn-pg", "sdp", "eo"};
  std::vector<std::string> methods;
  for (const auto& name : order)
    for (const auto& r : rows)
      if (r.method == name && std::find(methods.begin(), methods.end(), name) == methods.end())
        methods.push_back(name);
  for (const auto& r : rows)
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);

  std::map<std::pair<int, int>, std::map<std::string, double>> cells;
  for (const auto& r : rows) cells[{r.n, r.d}][r.method] = r.mean_p;

  std::ostringstream out;
  out << "n      d    ";
  for (const auto& m : methods) {
    out << m;
    for (std::size_t pad = m.size(); pad < 12; ++pad) out << ' ';
  }
  out << '\n';
  for (const auto& [key, by_method] : cells) {
    char head[32];
    std::snprintf(head, sizeof head, "%-7d%-5d", key.first, key.second);
    out << head;
    for (const auto& m : methods) {
      const auto it = by_method.find(m);
      std::string cell = it == by_method.end() ? std::string("-")
                                               : detail::format_double(it->second, 4);
      out << cell;
      for (std::size_t pad = cell.size(); pad < 12; ++pad) out << ' ';
    }
    out << '\n';
  }
  return out.str();
}

/// Writes text to path atomically (temp file + rename).
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace regcut
