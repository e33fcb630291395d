#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "regcut/autodiff.hpp"
#include "regcut/eval.hpp"
#include "regcut/graph.hpp"
#include "regcut/operators.hpp"
#include "regcut/rng.hpp"

namespace regcut {

enum class LossKind { kRelaxation = 0, kPolicyGradient = 1 };

/// Architecture knobs. layers = K, hops = J, width = interior channel
/// count b_k (inputs are 1-channel degree features, output is 2 channels).
/// degree_term enables the optional D*u term in the node update.
/// feature_norm standardizes features after every interior layer, which is
/// what keeps a 30-layer stack trainable; turning it off gives the bare
/// update equations.
struct GnnConfig {
  int layers = 30;
  int hops = 3;
  int width = 10;
  LossKind loss = LossKind::kRelaxation;
  bool degree_term = false;
  bool feature_norm = true;
};

/// Parameter matrices of one layer, b_in = widths[k], b_out = widths[k+1]:
///   theta[0]      node self term,              b_in x b_out
///   theta[1]      node degree term (optional), b_in x b_out
///   theta[2+j]    node 2^j-hop terms, j < J,   b_in x b_out
///   theta[J+2]    incidence term on [Pm v, Pd v],        2 b_in x b_out
///   gamma[0]      line self term,              b_in x b_out
///   gamma[1]      line degree term,            b_in x b_out
///   gamma[2+j]    line 2^j-hop terms, j < J,   b_in x b_out
///   gamma[J+2]    incidence on [Pm^T u', Pd^T u'],       2 b_out x b_out
/// The final layer updates node features only (gamma is empty there).
struct GnnLayer {
  std::vector<ad::Mat> theta;
  std::vector<ad::Mat> gamma;
};

struct GnnModel {
  GnnConfig cfg;
  std::vector<int> widths;  // size layers + 1
  std::vector<GnnLayer> layers;
};

/// Row-stochastic class probabilities; column 0 is P(x_i = +1).
struct ProbMatrix {
  Eigen::MatrixXd pi;
};

/// Uniform [-s, s] entries with s = sqrt(6 / (rows + cols)), drawn in a
/// fixed matrix order so the same seed always gives the same model.
inline GnnModel init_gnn(const GnnConfig& cfg, std::uint64_t seed) {
  if (cfg.layers < 1) throw std::invalid_argument("gnn: layers must be >= 1");
  if (cfg.hops < 0) throw std::invalid_argument("gnn: hops must be >= 0");
  if (cfg.width < 1) throw std::invalid_argument("gnn: width must be >= 1");
  GnnModel m;
  m.cfg = cfg;
  m.widths.assign(cfg.layers + 1, cfg.width);
  m.widths.front() = 1;
  m.widths.back() = 2;

  Rng rng(seed);
  const auto draw = [&rng](int rows, int cols) {
    const double s = std::sqrt(6.0 / (rows + cols));
    ad::Mat w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * s;
    return w;
  };

  m.layers.resize(cfg.layers);
  for (int k = 0; k < cfg.layers; ++k) {
    const int b_in = m.widths[k];
    const int b_out = m.widths[k + 1];
    auto& layer = m.layers[k];
    for (int s = 0; s < cfg.hops + 2; ++s) layer.theta.push_back(draw(b_in, b_out));
    layer.theta.push_back(draw(2 * b_in, b_out));
    if (k + 1 < cfg.layers) {
      for (int s = 0; s < cfg.hops + 2; ++s) layer.gamma.push_back(draw(b_in, b_out));
      layer.gamma.push_back(draw(2 * b_out, b_out));
    }
  }
  return m;
}

namespace detail {

inline void check_gnn_ops(const GnnModel& m, const Graph& g, const Operators& ops) {
  if (static_cast<int>(ops.power_adj.size()) < m.cfg.hops ||
      static_cast<int>(ops.power_adj_line.size()) < m.cfg.hops)
    throw std::invalid_argument("gnn: operators built with fewer hops than the model");
  if (ops.laplacian.rows() != g.n)
    throw std::invalid_argument("gnn: operators do not match the graph");
}

struct ForwardTape {
  ad::Tape tape;
  int pi = -1;
  std::vector<std::vector<int>> theta_ids;
  std::vector<std::vector<int>> gamma_ids;
};

/// Records the full coupled node/line-graph stack on the tape.
/// Per layer: u' = act[u th0 (+ Du th1) + sum_j A_j u th_{2+j}
///                    + [Pm v, Pd v] th_inc],
///            v' = act[v ga0 + D_B v ga1 + sum_j B_j v ga_{2+j}
///                    + [Pm^T u', Pd^T u'] ga_inc],
/// where act applies ReLU to the first b_out/2 channels (plus optional
/// standardization) on interior layers; the final layer is linear in u and
/// skips the v update. Output is the row-softmax of the final 2-channel u.
inline ForwardTape build_forward(const GnnModel& m, const Graph& g, const Operators& ops) {
  check_gnn_ops(m, g, ops);
  ForwardTape ft;
  auto& T = ft.tape;
  const int K = m.cfg.layers;
  const int J = m.cfg.hops;

  ad::Mat u0(g.n, 1), v0(ops.dir.count(), 1);
  u0.col(0) = ops.deg_node;
  v0.col(0) = ops.deg_line;
  int u = T.leaf(std::move(u0));
  int v = T.leaf(std::move(v0));

  ft.theta_ids.resize(K);
  ft.gamma_ids.resize(K);
  for (int k = 0; k < K; ++k) {
    const auto& layer = m.layers[k];
    const int b_out = m.widths[k + 1];
    auto& th = ft.theta_ids[k];
    auto& ga = ft.gamma_ids[k];
    for (const auto& w : layer.theta) th.push_back(T.leaf(w));
    for (const auto& w : layer.gamma) ga.push_back(T.leaf(w));

    std::vector<int> terms;
    terms.push_back(T.matmul(u, th[0]));
    if (m.cfg.degree_term)
      terms.push_back(T.matmul(T.row_scale(u, &ops.deg_node), th[1]));
    for (int j = 0; j < J; ++j)
      terms.push_back(T.matmul(T.spmm(&ops.power_adj[j], u), th[2 + j]));
    terms.push_back(T.matmul(
        T.hcat(T.spmm(&ops.incid_sum, v), T.spmm(&ops.incid_diff, v)), th[J + 2]));
    const int z = T.add(terms);

    int u_next = z;
    if (k + 1 < K) {
      u_next = T.relu_cols(z, b_out / 2);
      if (m.cfg.feature_norm) u_next = T.standardize_cols(u_next);

      std::vector<int> vterms;
      vterms.push_back(T.matmul(v, ga[0]));
      vterms.push_back(T.matmul(T.row_scale(v, &ops.deg_line), ga[1]));
      for (int j = 0; j < J; ++j)
        vterms.push_back(T.matmul(T.spmm(&ops.power_adj_line[j], v), ga[2 + j]));
      vterms.push_back(T.matmul(T.hcat(T.spmm(&ops.incid_sum, u_next, true),
                                       T.spmm(&ops.incid_diff, u_next, true)),
                                ga[J + 2]));
      int v_next = T.relu_cols(T.add(vterms), b_out / 2);
      if (m.cfg.feature_norm) v_next = T.standardize_cols(v_next);
      v = v_next;
    }
    u = u_next;
  }
  ft.pi = T.row_softmax(u);
  return ft;
}

}  // namespace detail

inline ProbMatrix forward(const GnnModel& m, const Graph& g, const Operators& ops) {
  auto ft = detail::build_forward(m, g, ops);
  return {ft.tape.value(ft.pi)};
}

/// Relaxed cut objective (1/4) (2p-1)^T L (2p-1) with p = P(x = +1).
/// Equals the true cut when p is 0/1-valued; maximized during training.
inline double loss_relaxation(const ProbMatrix& pm, const Graph& g) {
  if (pm.pi.rows() != g.n) throw std::invalid_argument("loss_relaxation: size mismatch");
  double total = 0.0;
  for (const auto& [i, j] : g.edges) {
    const double vi = 2.0 * pm.pi(i, 0) - 1.0;
    const double vj = 2.0 * pm.pi(j, 0) - 1.0;
    total += (vi - vj) * (vi - vj);
  }
  return 0.25 * total;
}

/// Independent Bernoulli samples: vertex i gets +1 with probability
/// pi(i, 0). Deterministic given the seed.
inline std::vector<SpinConfig> sample_configs(const ProbMatrix& pm, int count,
                                              std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("sample_configs: negative count");
  Rng rng(seed);
  std::vector<SpinConfig> out(count);
  for (auto& x : out) {
    x.resize(pm.pi.rows());
    for (int i = 0; i < pm.pi.rows(); ++i)
      x[i] = static_cast<std::int8_t>(rng.uniform() < pm.pi(i, 0) ? 1 : -1);
  }
  return out;
}

constexpr double kLogProbClamp = 1e-12;

/// Policy-gradient surrogate (1/K) sum_k f(x_k) log pi(x_k), with f the cut
/// value treated as a constant and log probabilities clamped at 1e-12.
/// Its parameter gradient is the REINFORCE estimator of grad E[f].
inline double loss_policy_gradient(const ProbMatrix& pm,
                                   const std::vector<SpinConfig>& samples,
                                   const Graph& g) {
  if (samples.empty()) throw std::invalid_argument("loss_policy_gradient: no samples");
  double total = 0.0;
  for (const auto& x : samples) {
    const double f = static_cast<double>(cut_value(g, x));
    double lp = 0.0;
    for (int i = 0; i < g.n; ++i) {
      const int c = x[i] == 1 ? 0 : 1;
      lp += std::log(std::max(pm.pi(i, c), kLogProbClamp));
    }
    total += f * lp;
  }
  return total / static_cast<double>(samples.size());
}

/// Loss, probabilities, and parameter gradients for one graph.
struct GnnStep {
  std::vector<GnnLayer> grads;  // same shapes as the model parameters
  double loss = 0.0;
  double objective = 0.0;       // relax loss, or mean sampled cut for pg
  ProbMatrix pi;
  int clamped = 0;
};

/// Runs forward + backward for the model's loss on one graph. For the
/// policy-gradient loss, sample_count configurations are drawn from the
/// forward probabilities with sample_seed; subtract_baseline centers the
/// cut values at their sample mean.
inline GnnStep compute_gradients(const GnnModel& m, const Graph& g, const Operators& ops,
                                 int sample_count = 30, std::uint64_t sample_seed = 0,
                                 bool subtract_baseline = false) {
  auto ft = detail::build_forward(m, g, ops);
  auto& T = ft.tape;
  GnnStep step;
  step.pi.pi = T.value(ft.pi);

  int loss_node = -1;
  std::vector<SpinConfig> samples;
  std::vector<double> weights;
  if (m.cfg.loss == LossKind::kRelaxation) {
    const int p = T.col(ft.pi, 0);
    const int vv = T.scale_shift(p, 2.0, -1.0);
    loss_node = T.quad_form(&ops.laplacian, vv, 0.25);
    step.objective = T.value(loss_node)(0, 0);
  } else {
    if (sample_count < 1)
      throw std::invalid_argument("compute_gradients: policy gradient needs samples");
    samples = sample_configs(step.pi, sample_count, sample_seed);
    weights.resize(samples.size());
    double mean_f = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      weights[k] = static_cast<double>(cut_value(g, samples[k]));
      mean_f += weights[k];
    }
    mean_f /= static_cast<double>(samples.size());
    step.objective = mean_f;
    for (double& w : weights) {
      if (subtract_baseline) w -= mean_f;
      w /= static_cast<double>(samples.size());
    }
    loss_node = T.weighted_log_prob(ft.pi, &samples, &weights, kLogProbClamp,
                                    &step.clamped);
  }
  step.loss = T.value(loss_node)(0, 0);
  T.backward(loss_node);

  step.grads.resize(m.layers.size());
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    for (const int id : ft.theta_ids[k]) step.grads[k].theta.push_back(T.grad(id));
    for (const int id : ft.gamma_ids[k]) step.grads[k].gamma.push_back(T.grad(id));
  }
  return step;
}

/// Threshold decode p_i >= 0.5 -> +1. Policy-gradient models additionally
/// draw sample_count configurations and return the best cut among the
/// decode and the samples (earliest winner on ties).
inline SpinConfig infer_cut(const GnnModel& m, const Graph& g, const Operators& ops,
                            int sample_count = 30, std::uint64_t seed = 0) {
  const ProbMatrix pm = forward(m, g, ops);
  SpinConfig x(g.n);
  for (int i = 0; i < g.n; ++i)
    x[i] = static_cast<std::int8_t>(pm.pi(i, 0) >= 0.5 ? 1 : -1);
  if (m.cfg.loss == LossKind::kPolicyGradient && sample_count > 0) {
    std::int64_t best = cut_value(g, x);
    for (const auto& s : sample_configs(pm, sample_count, seed)) {
      const std::int64_t c = cut_value(g, s);
      if (c > best) {
        best = c;
        x = s;
      }
    }
  }
  return x;
}

struct TrainConfig {
  int training_graphs = 5000;
  int sample_count = 30;  // policy-gradient sample count K
  double learning_rate = 1e-3;
  int batch_size = 1;
  int epochs = 1;
  bool pg_baseline = false;
  std::uint64_t seed = 0;
};

struct EpochStats {
  double mean_objective = 0.0;
  double mean_decoded_p = 0.0;
  int clamped = 0;
};

struct TrainResult {
  std::vector<EpochStats> curve;
};

namespace detail {

/// Adam state, one moment pair per parameter matrix. Ascent updates.
struct Adam {
  double lr;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<GnnLayer> m1, m2;
  std::int64_t t = 0;

  explicit Adam(const GnnModel& model, double lr_in) : lr(lr_in) {
    const auto zeros_like = [](const std::vector<ad::Mat>& src) {
      std::vector<ad::Mat> out;
      out.reserve(src.size());
      for (const auto& w : src) out.push_back(ad::Mat::Zero(w.rows(), w.cols()));
      return out;
    };
    for (const auto& layer : model.layers) {
      m1.push_back({zeros_like(layer.theta), zeros_like(layer.gamma)});
      m2.push_back({zeros_like(layer.theta), zeros_like(layer.gamma)});
    }
  }

  void ascend(GnnModel& model, const std::vector<GnnLayer>& grads) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    const auto upd = [&](ad::Mat& w, const ad::Mat& g, ad::Mat& m, ad::Mat& v) {
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
      w.array() +=
          lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
      for (std::size_t s = 0; s < model.layers[k].theta.size(); ++s)
        upd(model.layers[k].theta[s], grads[k].theta[s], m1[k].theta[s], m2[k].theta[s]);
      for (std::size_t s = 0; s < model.layers[k].gamma.size(); ++s)
        upd(model.layers[k].gamma[s], grads[k].gamma[s], m1[k].gamma[s], m2[k].gamma[s]);
    }
  }
};

inline void accumulate(std::vector<GnnLayer>& into, const std::vector<GnnLayer>& from) {
  if (into.empty()) {
    into = from;
    return;
  }
  for (std::size_t k = 0; k < into.size(); ++k) {
    for (std::size_t s = 0; s < into[k].theta.size(); ++s)
      into[k].theta[s] += from[k].theta[s];
    for (std::size_t s = 0; s < into[k].gamma.size(); ++s)
      into[k].gamma[s] += from[k].gamma[s];
  }
}

}  // namespace detail

/// Streaming gradient-ascent training. graph_at(i) must return the i-th
/// training graph (same (n, d) across the stream); each epoch walks the
/// stream once in order, stepping Adam every batch_size graphs. Sequential
/// and deterministic given (initial model, config, stream).
/// Throws on a non-finite loss with a diagnostic snapshot.
inline TrainResult train(GnnModel& model, const TrainConfig& cfg,
                         const std::function<Graph(int)>& graph_at) {
  if (cfg.training_graphs < 1) throw std::invalid_argument("train: empty stream");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");

  detail::Adam adam(model, cfg.learning_rate);
  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochStats stats;
    std::vector<GnnLayer> batch_grads;
    int in_batch = 0;
    for (int idx = 0; idx < cfg.training_graphs; ++idx) {
      const Graph g = graph_at(idx);
      const Operators ops = build_line_graph_operators(g, model.cfg.hops);
      const std::uint64_t sample_seed =
          mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch) * cfg.training_graphs + idx);
      GnnStep step = compute_gradients(model, g, ops, cfg.sample_count, sample_seed,
                                       cfg.pg_baseline);
      if (!std::isfinite(step.loss)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", graph " << idx
            << " (objective=" << step.objective << ")";
        throw std::runtime_error(msg.str());
      }
      stats.mean_objective += step.objective;
      stats.clamped += step.clamped;
      std::int64_t decoded = 0;
      {
        SpinConfig x(g.n);
        for (int i = 0; i < g.n; ++i)
          x[i] = static_cast<std::int8_t>(step.pi.pi(i, 0) >= 0.5 ? 1 : -1);
        decoded = cut_value(g, x);
      }
      stats.mean_decoded_p += p_score(decoded, g.n, g.d).value;

      detail::accumulate(batch_grads, step.grads);
      if (++in_batch == cfg.batch_size || idx + 1 == cfg.training_graphs) {
        adam.ascend(model, batch_grads);
        batch_grads.clear();
        in_batch = 0;
      }
    }
    stats.mean_objective /= cfg.training_graphs;
    stats.mean_decoded_p /= cfg.training_graphs;
    result.curve.push_back(stats);
  }
  return result;
}

// --- checkpoint container ----------------------------------------------

constexpr char kGnnMagic[8] = {'R', 'G', 'C', 'U', 'T', 'G', 'N', 'N'};
constexpr std::uint32_t kGnnVersion = 1;

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("gnn checkpoint: truncated");
  return v;
}

inline void write_mat(std::ostream& out, const ad::Mat& w) {
  write_u32(out, static_cast<std::uint32_t>(w.rows()));
  write_u32(out, static_cast<std::uint32_t>(w.cols()));
  for (int r = 0; r < w.rows(); ++r)
    for (int c = 0; c < w.cols(); ++c) {
      const double v = w(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

inline ad::Mat read_mat(std::istream& in) {
  const int rows = static_cast<int>(read_u32(in));
  const int cols = static_cast<int>(read_u32(in));
  if (rows < 0 || cols < 0 || static_cast<std::int64_t>(rows) * cols > (1 << 26))
    throw std::runtime_error("gnn checkpoint: bad matrix header");
  ad::Mat w(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      if (!in) throw std::runtime_error("gnn checkpoint: truncated");
      w(r, c) = v;
    }
  return w;
}

}  // namespace detail

/// Binary checkpoint: 8-byte magic "RGCUTGNN", version, architecture, then
/// every parameter matrix (row-major doubles, native little-endian layout).
inline void save_gnn(const GnnModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("gnn checkpoint: cannot open " + path);
  out.write(kGnnMagic, sizeof kGnnMagic);
  detail::write_u32(out, kGnnVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(m.cfg.layers));
  detail::write_u32(out, static_cast<std::uint32_t>(m.cfg.hops));
  detail::write_u32(out, static_cast<std::uint32_t>(m.cfg.width));
  detail::write_u32(out, static_cast<std::uint32_t>(m.cfg.loss));
  detail::write_u32(out, (m.cfg.degree_term ? 1u : 0u) | (m.cfg.feature_norm ? 2u : 0u));
  detail::write_u32(out, static_cast<std::uint32_t>(m.widths.size()));
  for (const int w : m.widths) detail::write_u32(out, static_cast<std::uint32_t>(w));
  for (const auto& layer : m.layers) {
    detail::write_u32(out, static_cast<std::uint32_t>(layer.theta.size()));
    for (const auto& w : layer.theta) detail::write_mat(out, w);
    detail::write_u32(out, static_cast<std::uint32_t>(layer.gamma.size()));
    for (const auto& w : layer.gamma) detail::write_mat(out, w);
  }
  if (!out) throw std::runtime_error("gnn checkpoint: write failed");
}

inline GnnModel load_gnn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("gnn checkpoint: cannot open " + path);
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kGnnMagic, sizeof magic) != 0)
    throw std::runtime_error("gnn checkpoint: bad magic");
  if (detail::read_u32(in) != kGnnVersion)
    throw std::runtime_error("gnn checkpoint: unsupported version");
  GnnModel m;
  m.cfg.layers = static_cast<int>(detail::read_u32(in));
  m.cfg.hops = static_cast<int>(detail::read_u32(in));
  m.cfg.width = static_cast<int>(detail::read_u32(in));
  m.cfg.loss = static_cast<LossKind>(detail::read_u32(in));
  const std::uint32_t flags = detail::read_u32(in);
  m.cfg.degree_term = (flags & 1u) != 0;
  m.cfg.feature_norm = (flags & 2u) != 0;
  const std::uint32_t width_count = detail::read_u32(in);
  if (width_count != static_cast<std::uint32_t>(m.cfg.layers + 1))
    throw std::runtime_error("gnn checkpoint: width count mismatch");
  m.widths.resize(width_count);
  for (auto& w : m.widths) w = static_cast<int>(detail::read_u32(in));
  m.layers.resize(m.cfg.layers);
  for (auto& layer : m.layers) {
    const std::uint32_t tc = detail::read_u32(in);
    for (std::uint32_t s = 0; s < tc; ++s) layer.theta.push_back(detail::read_mat(in));
    const std::uint32_t gc = detail::read_u32(in);
    for (std::uint32_t s = 0; s < gc; ++s) layer.gamma.push_back(detail::read_mat(in));
  }
  return m;
}

}  // namespace regcut
