#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace regcut::ad {

using Mat = Eigen::MatrixXd;
using Sparse = Eigen::SparseMatrix<double>;

/// Relative std threshold below which a feature column counts as constant.
constexpr double kConstColTol = 1e-12;

/// Reverse-mode tape over dense matrices. Values are computed eagerly as
/// nodes are created; backward() runs the recorded adjoint steps in reverse
/// creation order, which is a valid topological order for the DAG. Sparse
/// operands and vectors are referenced, not owned, and must outlive the
/// tape. Scalars are 1x1 matrices.
class Tape {
 public:
  int leaf(Mat value) { return push(std::move(value), {}); }

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }

  /// value = value(a) * value(b)
  int matmul(int a, int b) {
    Mat v = nodes_[a].value * nodes_[b].value;
    return push(std::move(v), [this, a, b](int out) {
      nodes_[a].grad.noalias() += nodes_[out].grad * nodes_[b].value.transpose();
      nodes_[b].grad.noalias() += nodes_[a].value.transpose() * nodes_[out].grad;
    });
  }

  /// value = S * value(b), or S^T * value(b) when transpose_s is set.
  int spmm(const Sparse* s, int b, bool transpose_s = false) {
    Mat v = transpose_s ? Mat(s->transpose() * nodes_[b].value)
                        : Mat(*s * nodes_[b].value);
    return push(std::move(v), [this, s, b, transpose_s](int out) {
      if (transpose_s)
        nodes_[b].grad.noalias() += *s * nodes_[out].grad;
      else
        nodes_[b].grad.noalias() += s->transpose() * nodes_[out].grad;
    });
  }

  /// Elementwise sum of equally shaped terms.
  int add(const std::vector<int>& terms) {
    if (terms.empty()) throw std::invalid_argument("ad::add: no terms");
    Mat v = nodes_[terms[0]].value;
    for (std::size_t i = 1; i < terms.size(); ++i) v += nodes_[terms[i]].value;
    return push(std::move(v), [this, terms](int out) {
      for (const int t : terms) nodes_[t].grad += nodes_[out].grad;
    });
  }

  /// Row i scaled by s(i); implements diagonal-operator application.
  int row_scale(int a, const Eigen::VectorXd* s) {
    Mat v = s->asDiagonal() * nodes_[a].value;
    return push(std::move(v), [this, a, s](int out) {
      nodes_[a].grad.noalias() += s->asDiagonal() * nodes_[out].grad;
    });
  }

  /// Elementwise mul * value(a) + shift.
  int scale_shift(int a, double mul, double shift) {
    Mat v = (nodes_[a].value.array() * mul + shift).matrix();
    return push(std::move(v), [this, a, mul](int out) {
      nodes_[a].grad.noalias() += mul * nodes_[out].grad;
    });
  }

  /// ReLU on the leading `cols` columns, identity on the rest: the
  /// half-nonlinear channel split.
  int relu_cols(int a, int cols) {
    Mat v = nodes_[a].value;
    v.leftCols(cols) = v.leftCols(cols).cwiseMax(0.0);
    return push(std::move(v), [this, a, cols](int out) {
      const Mat& g = nodes_[out].grad;
      Mat gin = g;
      gin.leftCols(cols) =
          (nodes_[a].value.leftCols(cols).array() > 0.0)
              .select(g.leftCols(cols).array(), 0.0)
              .matrix();
      nodes_[a].grad += gin;
    });
  }

  /// Horizontal concatenation [value(a), value(b)].
  int hcat(int a, int b) {
    const Mat& va = nodes_[a].value;
    const Mat& vb = nodes_[b].value;
    Mat v(va.rows(), va.cols() + vb.cols());
    v << va, vb;
    return push(std::move(v), [this, a, b](int out) {
      const Mat& g = nodes_[out].grad;
      const auto ca = nodes_[a].value.cols();
      nodes_[a].grad += g.leftCols(ca);
      nodes_[b].grad += g.rightCols(g.cols() - ca);
    });
  }

  /// Per-column standardization across rows: y = (x - mean) / (std + eps)
  /// with population std. Keeps deep stacks of layers in a trainable range.
  /// Columns whose std is negligible against their mean are constant up to
  /// rounding noise; they map to zero and stay flat in the backward pass,
  /// which keeps both directions finite instead of amplifying the noise.
  int standardize_cols(int a, double eps = 1e-8) {
    const Mat& x = nodes_[a].value;
    const double n = static_cast<double>(x.rows());
    Mat v(x.rows(), x.cols());
    for (int c = 0; c < x.cols(); ++c) {
      const double mu = x.col(c).mean();
      const double var = (x.col(c).array() - mu).square().sum() / n;
      const double sigma = std::sqrt(var);
      if (sigma <= kConstColTol * std::max(1.0, std::abs(mu))) {
        v.col(c).setZero();
        continue;
      }
      v.col(c) = (x.col(c).array() - mu) / (sigma + eps);
    }
    return push(std::move(v), [this, a, eps](int out) {
      const Mat& x = nodes_[a].value;
      const Mat& g = nodes_[out].grad;
      const double n = static_cast<double>(x.rows());
      for (int c = 0; c < x.cols(); ++c) {
        const double mu = x.col(c).mean();
        Eigen::VectorXd cen = x.col(c).array() - mu;
        const double var = cen.squaredNorm() / n;
        const double sigma = std::sqrt(var);
        if (sigma <= kConstColTol * std::max(1.0, std::abs(mu))) continue;
        const double s = sigma + eps;
        const double gmean = g.col(c).mean();
        Eigen::VectorXd gx = (g.col(c).array() - gmean) / s;
        const double proj = cen.dot(g.col(c)) / (n * sigma * s * s);
        gx -= proj * cen;
        nodes_[a].grad.col(c) += gx;
      }
    });
  }

  /// Row-wise softmax (numerically stabilized).
  int row_softmax(int a) {
    const Mat& x = nodes_[a].value;
    Mat v(x.rows(), x.cols());
    for (int r = 0; r < x.rows(); ++r) {
      const double mx = x.row(r).maxCoeff();
      Eigen::RowVectorXd e = (x.row(r).array() - mx).exp();
      v.row(r) = e / e.sum();
    }
    return push(std::move(v), [this, a](int out) {
      const Mat& p = nodes_[out].value;
      const Mat& g = nodes_[out].grad;
      for (int r = 0; r < p.rows(); ++r) {
        const double dot = g.row(r).dot(p.row(r));
        nodes_[a].grad.row(r) +=
            (p.row(r).array() * (g.row(r).array() - dot)).matrix();
      }
    });
  }

  /// Column j of value(a) as an n x 1 node.
  int col(int a, int j) {
    Mat v = nodes_[a].value.col(j);
    return push(std::move(v), [this, a, j](int out) {
      nodes_[a].grad.col(j) += nodes_[out].grad;
    });
  }

  /// Scalar coef * x^T S x for a symmetric sparse S and a column vector x.
  int quad_form(const Sparse* sym, int x, double coef) {
    const Mat& xv = nodes_[x].value;
    Mat v(1, 1);
    v(0, 0) = coef * (xv.transpose() * (*sym * xv))(0, 0);
    return push(std::move(v), [this, sym, x, coef](int out) {
      const double gout = nodes_[out].grad(0, 0);
      nodes_[x].grad.noalias() += (2.0 * coef * gout) * (*sym * nodes_[x].value);
    });
  }

  /// Scalar sum over samples k and rows i of
  ///   weights[k] * log(max(pi(i, col), clamp)),
  /// where col = 0 when sample k assigns +1 to vertex i, else 1.
  /// Clamped entries contribute a constant (zero derivative); their count is
  /// accumulated into *clamp_counter when provided.
  int weighted_log_prob(int pi, const std::vector<std::vector<std::int8_t>>* samples,
                        const std::vector<double>* weights, double clamp,
                        int* clamp_counter = nullptr) {
    const Mat& p = nodes_[pi].value;
    double total = 0.0;
    int clamped = 0;
    for (std::size_t k = 0; k < samples->size(); ++k) {
      const auto& x = (*samples)[k];
      double lp = 0.0;
      for (int i = 0; i < p.rows(); ++i) {
        const int c = x[i] == 1 ? 0 : 1;
        const double q = p(i, c);
        if (q < clamp) ++clamped;
        lp += std::log(std::max(q, clamp));
      }
      total += (*weights)[k] * lp;
    }
    if (clamp_counter) *clamp_counter += clamped;
    Mat v(1, 1);
    v(0, 0) = total;
    return push(std::move(v), [this, pi, samples, weights, clamp](int out) {
      const double gout = nodes_[out].grad(0, 0);
      const Mat& p = nodes_[pi].value;
      Mat& g = nodes_[pi].grad;
      for (std::size_t k = 0; k < samples->size(); ++k) {
        const auto& x = (*samples)[k];
        const double w = (*weights)[k] * gout;
        for (int i = 0; i < p.rows(); ++i) {
          const int c = x[i] == 1 ? 0 : 1;
          if (p(i, c) >= clamp) g(i, c) += w / p(i, c);
        }
      }
    });
  }

  /// Seeds d(root)/d(root) = 1 and propagates adjoints to every node.
  /// root must be scalar.
  void backward(int root) {
    if (nodes_[root].value.size() != 1)
      throw std::invalid_argument("ad::backward: root must be scalar");
    nodes_[root].grad(0, 0) = 1.0;
    for (int i = root; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(i);
  }

  void clear() { nodes_.clear(); }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(int)> back;
  };

  int push(Mat value, std::function<void(int)> back) {
    Node node;
    node.grad = Mat::Zero(value.rows(), value.cols());
    node.value = std::move(value);
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace regcut::ad
