#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "regcut/autodiff.hpp"
#include "regcut/operators.hpp"
#include "regcut/rng.hpp"
#include "support.hpp"

using regcut::ad::Mat;
using regcut::ad::Sparse;
using regcut::ad::Tape;

namespace {

Mat random_mat(int rows, int cols, regcut::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = lo + (hi - lo) * rng.uniform();
  return m;
}

/// Central-difference check of d(scalar)/d(leaf) for a scalar-valued graph
/// rebuilt from scratch at every probe point.
void check_leaf_gradient(const Mat& x0,
                         const std::function<int(Tape&, int)>& build,
                         double tol = 1e-6) {
  Tape tape;
  const int x = tape.leaf(x0);
  const int root = build(tape, x);
  REQUIRE(tape.value(root).size() == 1);
  tape.backward(root);
  const Mat analytic = tape.grad(x);

  const double h = 1e-5;
  const auto eval = [&](const Mat& probe) {
    Tape t;
    return t.value(build(t, t.leaf(probe)))(0, 0);
  };
  for (int r = 0; r < x0.rows(); ++r)
    for (int c = 0; c < x0.cols(); ++c) {
      Mat xp = x0, xm = x0;
      xp(r, c) += h;
      xm(r, c) -= h;
      const double fd = (eval(xp) - eval(xm)) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(fd), std::abs(analytic(r, c))});
      INFO("entry (" << r << "," << c << ") analytic=" << analytic(r, c)
                     << " fd=" << fd);
      REQUIRE(std::abs(analytic(r, c) - fd) <= tol * scale);
    }
}

/// Wraps a matrix-valued node into a generic scalar: wl * node * wr.
int scalarize(Tape& t, int node, const Mat& wl, const Mat& wr) {
  return t.matmul(t.matmul(t.leaf(wl), node), t.leaf(wr));
}

}  // namespace

TEST_CASE("matmul gradients for both operands", "[autodiff]") {
  regcut::Rng rng(1);
  const Mat a0 = random_mat(3, 4, rng);
  const Mat b0 = random_mat(4, 2, rng);
  const Mat wl = random_mat(1, 3, rng);
  const Mat wr = random_mat(2, 1, rng);

  check_leaf_gradient(a0, [&](Tape& t, int x) {
    return scalarize(t, t.matmul(x, t.leaf(b0)), wl, wr);
  });
  check_leaf_gradient(b0, [&](Tape& t, int x) {
    return scalarize(t, t.matmul(t.leaf(a0), x), wl, wr);
  });
}

TEST_CASE("sparse products and their transpose mode", "[autodiff]") {
  regcut::Rng rng(2);
  const regcut::Graph g = regcut::generate_regular(6, 3, 5);
  const regcut::Operators ops = regcut::build_line_graph_operators(g, 1);
  const Mat x0 = random_mat(6, 2, rng);
  const Mat wl = random_mat(1, 6, rng);
  const Mat wr = random_mat(2, 1, rng);

  check_leaf_gradient(x0, [&](Tape& t, int x) {
    return scalarize(t, t.spmm(&ops.laplacian, x), wl, wr);
  });

  // transpose mode: incid_sum is n x 2m, so Pm^T x maps n-rows to 2m-rows
  const Mat wl2 = random_mat(1, 2 * g.m(), rng);
  check_leaf_gradient(x0, [&](Tape& t, int x) {
    return scalarize(t, t.spmm(&ops.incid_sum, x, true), wl2, wr);
  });
}

TEST_CASE("add accumulates repeated operands", "[autodiff]") {
  regcut::Rng rng(3);
  const Mat x0 = random_mat(2, 3, rng);
  const Mat c0 = random_mat(2, 3, rng);
  const Mat wl = random_mat(1, 2, rng);
  const Mat wr = random_mat(3, 1, rng);
  check_leaf_gradient(x0, [&](Tape& t, int x) {
    return scalarize(t, t.add({x, x, t.leaf(c0)}), wl, wr);
  });
  Tape t;
  CHECK_THROWS_AS(t.add({}), std::invalid_argument);
}

TEST_CASE("row scaling and affine reshaping", "[autodiff]") {
  regcut::Rng rng(4);
  const Mat x0 = random_mat(4, 2, rng);
  Eigen::VectorXd s(4);
  s << 2.0, -1.0, 0.5, 3.0;
  const Mat wl = random_mat(1, 4, rng);
  const Mat wr = random_mat(2, 1, rng);
  check_leaf_gradient(x0, [&](Tape& t, int x) {
    return scalarize(t, t.row_scale(x, &s), wl, wr);
  });
  check_leaf_gradient(x0, [&](Tape& t, int x) {
    return scalarize(t, t.scale_shift(x, 2.0, -1.0), wl, wr);
  });

  Tape t;
  const int node = t.scale_shift(t.leaf(Mat::Zero(2, 2)), 2.0, -1.0);
  CHECK(t.value(node).isApproxToConstant(-1.0));
}

TEST_CASE("half-relu applies to leading columns only", "[autodiff]") {
  Mat x0(2, 4);
  x0 << -1.0, 2.0, -3.0, 4.0,
         5.0, -6.0, 7.0, -8.0;
  Tape t;
  const int y = t.relu_cols(t.leaf(x0), 2);
  Mat expect(2, 4);
  expect << 0.0, 2.0, -3.0, 4.0,
            5.0, 0.0, 7.0, -8.0;
  CHECK(t.value(y) == expect);

  // gradient check away from the kink
  regcut::Rng rng(5);
  Mat z0 = random_mat(3, 4, rng);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      if (std::abs(z0(r, c)) < 0.2) z0(r, c) = z0(r, c) < 0 ? -0.2 : 0.2;
  const Mat wl = random_mat(1, 3, rng);
  const Mat wr = random_mat(4, 1, rng);
  check_leaf_gradient(z0, [&](Tape& t2, int x) {
    return scalarize(t2, t2.relu_cols(x, 2), wl, wr);
  });
}

TEST_CASE("horizontal concatenation routes gradients to both blocks", "[autodiff]") {
  regcut::Rng rng(6);
  const Mat a0 = random_mat(3, 2, rng);
  const Mat b0 = random_mat(3, 3, rng);
  const Mat wl = random_mat(1, 3, rng);
  const Mat wr = random_mat(5, 1, rng);

  Tape t;
  const int h = t.hcat(t.leaf(a0), t.leaf(b0));
  CHECK(t.value(h).leftCols(2) == a0);
  CHECK(t.value(h).rightCols(3) == b0);

  check_leaf_gradient(a0, [&](Tape& t2, int x) {
    return scalarize(t2, t2.hcat(x, t2.leaf(b0)), wl, wr);
  });
  check_leaf_gradient(b0, [&](Tape& t2, int x) {
    return scalarize(t2, t2.hcat(t2.leaf(a0), x), wl, wr);
  });
}

TEST_CASE("column standardization normalizes and differentiates", "[autodiff]") {
  regcut::Rng rng(7);
  const Mat x0 = random_mat(5, 3, rng);
  Tape t;
  const int y = t.standardize_cols(t.leaf(x0));
  const Mat v = t.value(y);
  for (int c = 0; c < 3; ++c) {
    CHECK(v.col(c).mean() == Catch::Approx(0.0).margin(1e-12));
    const double var = v.col(c).squaredNorm() / 5.0;
    CHECK(std::sqrt(var) == Catch::Approx(1.0).margin(1e-6));
  }
  // constant columns collapse to zero instead of dividing by zero
  Tape t2;
  const int yc = t2.standardize_cols(t2.leaf(Mat::Constant(4, 2, 3.5)));
  CHECK(t2.value(yc).isZero(0.0));

  const Mat wl = random_mat(1, 5, rng);
  const Mat wr = random_mat(3, 1, rng);
  check_leaf_gradient(x0, [&](Tape& t3, int x) {
    return scalarize(t3, t3.standardize_cols(x), wl, wr);
  }, 1e-5);
}

TEST_CASE("row softmax normalizes and differentiates", "[autodiff]") {
  Tape t;
  const int p = t.row_softmax(t.leaf(Mat::Zero(3, 2)));
  CHECK(t.value(p).isApproxToConstant(0.5));

  regcut::Rng rng(8);
  const Mat x0 = random_mat(4, 3, rng, -2.0, 2.0);
  Tape t2;
  const int q = t2.row_softmax(t2.leaf(x0));
  for (int r = 0; r < 4; ++r)
    CHECK(t2.value(q).row(r).sum() == Catch::Approx(1.0).margin(1e-12));

  const Mat wl = random_mat(1, 4, rng);
  const Mat wr = random_mat(3, 1, rng);
  check_leaf_gradient(x0, [&](Tape& t3, int x) {
    return scalarize(t3, t3.row_softmax(x), wl, wr);
  });
}

TEST_CASE("column extraction and laplacian quadratic form", "[autodiff]") {
  regcut::Rng rng(9);
  const regcut::Graph tri = testsupport::triangle();
  const regcut::Operators ops = regcut::build_line_graph_operators(tri, 0);

  // value: quarter form counts the cut of (+,+,-)
  Tape t;
  Mat x(3, 1);
  x << 1.0, 1.0, -1.0;
  const int q = t.quad_form(&ops.laplacian, t.leaf(x), 0.25);
  CHECK(t.value(q)(0, 0) == Catch::Approx(2.0));

  const Mat x0 = random_mat(3, 1, rng);
  check_leaf_gradient(x0, [&](Tape& t2, int id) {
    return t2.quad_form(&ops.laplacian, id, 0.25);
  });

  // col() slices with gradient routing
  const Mat m0 = random_mat(3, 2, rng);
  const Mat wl = random_mat(1, 3, rng);
  check_leaf_gradient(m0, [&](Tape& t2, int id) {
    return t2.matmul(t2.leaf(wl), t2.col(id, 1));
  });
}

TEST_CASE("weighted log prob value, clamping, and gradient", "[autodiff]") {
  const std::vector<std::vector<std::int8_t>> samples = {{1, -1}};
  const std::vector<double> weights = {1.0};

  Tape t;
  Mat pi(2, 2);
  pi << 0.5, 0.5, 0.5, 0.5;
  const int node = t.weighted_log_prob(t.leaf(pi), &samples, &weights, 1e-12);
  CHECK(t.value(node)(0, 0) == Catch::Approx(2.0 * std::log(0.5)));

  // clamped entries count and contribute zero gradient
  Tape tc;
  Mat tiny(2, 2);
  tiny << 1e-15, 1.0, 1.0, 1e-15;  // sample (+1,-1) hits both tiny cells
  int clamped = 0;
  const int cn = tc.weighted_log_prob(tc.leaf(tiny), &samples, &weights, 1e-12, &clamped);
  CHECK(clamped == 2);
  CHECK(tc.value(cn)(0, 0) == Catch::Approx(2.0 * std::log(1e-12)));
  tc.backward(cn);
  CHECK(tc.grad(0).isZero(0.0));

  regcut::Rng rng(10);
  const std::vector<std::vector<std::int8_t>> many = {{1, -1, 1}, {-1, -1, 1}, {1, 1, 1}};
  const std::vector<double> w3 = {0.5, -1.5, 2.0};
  const Mat pi0 = random_mat(3, 2, rng, 0.1, 0.9);
  check_leaf_gradient(pi0, [&](Tape& t2, int x) {
    return t2.weighted_log_prob(x, &many, &w3, 1e-12);
  });
}

TEST_CASE("diamond-shaped reuse accumulates both paths", "[autodiff]") {
  regcut::Rng rng(11);
  const Mat x0 = random_mat(2, 2, rng);
  const Mat a0 = random_mat(2, 1, rng);
  const Mat b0 = random_mat(2, 1, rng);
  const Mat wl = random_mat(1, 2, rng);
  check_leaf_gradient(x0, [&](Tape& t, int x) {
    const int s1 = t.matmul(t.leaf(wl), t.matmul(x, t.leaf(a0)));
    const int s2 = t.matmul(t.leaf(wl), t.matmul(x, t.leaf(b0)));
    return t.add({s1, s2});
  });
}

TEST_CASE("backward demands a scalar root", "[autodiff]") {
  Tape t;
  const int m = t.leaf(Mat::Zero(2, 2));
  CHECK_THROWS_AS(t.backward(m), std::invalid_argument);
}
