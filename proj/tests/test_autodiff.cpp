#include "mcsql/autodiff.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "mcsql/params.hpp"

using namespace mcsql;
using ad::Graph;
using ad::Var;

namespace {

Mat random_mat(std::mt19937_64& gen, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng::next_uniform(gen, -1.0, 1.0);
  return m;
}

/// Central-difference check of a scalar graph function against backward().
/// `build` must construct the graph from leaves bound to `inputs`.
void check_gradients(std::vector<Mat> inputs,
                     const std::function<Var(Graph&, std::vector<Var>&)>& build,
                     double tol = 1e-7, double eps = 1e-6) {
  std::vector<Mat> grads;
  for (const Mat& m : inputs) grads.push_back(Mat::Zero(m.rows(), m.cols()));

  auto eval = [&](bool with_grad) {
    Graph g;
    std::vector<Var> vars;
    for (size_t i = 0; i < inputs.size(); ++i)
      vars.push_back(g.leaf(&inputs[i], with_grad ? &grads[i] : nullptr));
    Var out = build(g, vars);
    const double v = out.scalar();
    if (with_grad) g.backward(out);
    return v;
  };

  eval(true);
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (int r = 0; r < inputs[i].rows(); ++r) {
      for (int c = 0; c < inputs[i].cols(); ++c) {
        const double saved = inputs[i](r, c);
        inputs[i](r, c) = saved + eps;
        const double up = eval(false);
        inputs[i](r, c) = saved - eps;
        const double down = eval(false);
        inputs[i](r, c) = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = grads[i](r, c);
        const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
        ASSERT_NEAR(analytic / denom, numeric / denom, tol)
            << "input " << i << " at (" << r << "," << c << ")";
      }
    }
  }
}

}  // namespace

TEST(Autodiff, MatmulChain) {
  std::mt19937_64 gen(1);
  check_gradients({random_mat(gen, 3, 4), random_mat(gen, 4, 2), random_mat(gen, 3, 2)},
                  [](Graph& g, std::vector<Var>& v) {
                    Var y = g.tanh(g.matmul(v[0], v[1]));  // 3 x 2
                    Var z = g.hadamard(y, v[2]);           // 3 x 2
                    Var col = g.sum_cols(z);               // 3 x 1
                    return g.matmul_tn(col, col);          // 1 x 1
                  });
}

TEST(Autodiff, TransposedMatmuls) {
  std::mt19937_64 gen(2);
  check_gradients(
      {random_mat(gen, 3, 4), random_mat(gen, 5, 4), random_mat(gen, 3, 5)},
      [](Graph& g, std::vector<Var>& v) {
        Var nt = g.matmul_nt(v[0], v[1]);       // 3 x 5
        Var mixed = g.hadamard(nt, v[2]);       // 3 x 5
        Var tn = g.matmul_tn(mixed, mixed);     // 5 x 5
        Var row = g.sum_cols(tn);               // 5 x 1
        Var total = g.matmul_tn(row, row);      // 1 x 1
        return total;
      });
}

TEST(Autodiff, SoftmaxVecAndCrossEntropy) {
  std::mt19937_64 gen(3);
  check_gradients({random_mat(gen, 5, 1), random_mat(gen, 1, 6)},
                  [](Graph& g, std::vector<Var>& v) {
                    Var sm = g.softmax_vec(v[0]);          // 5 x 1
                    Var pick = g.slice_rows(sm, 2, 1);     // 1 x 1
                    Var ce = g.ce_loss(v[1], 3);
                    std::vector<Var> parts{pick, ce};
                    return g.sum_scalars(parts);
                  });
}

TEST(Autodiff, SoftmaxRowsAndScale) {
  std::mt19937_64 gen(4);
  check_gradients({random_mat(gen, 3, 4)}, [](Graph& g, std::vector<Var>& v) {
    Var sm = g.softmax_rows(g.scale(v[0], 1.7));
    Var picked = g.hadamard(sm, sm);
    Var col = g.sum_cols(picked);
    return g.matmul_tn(col, col);
  });
}

TEST(Autodiff, MaxPoolReluConcat) {
  std::mt19937_64 gen(5);
  check_gradients(
      {random_mat(gen, 4, 3), random_mat(gen, 4, 2)},
      [](Graph& g, std::vector<Var>& v) {
        Var pooled = g.max_over_rows(g.relu(v[0]));  // 1 x 3
        Var pooled2 = g.max_over_rows(v[1]);         // 1 x 2
        std::vector<Var> parts{pooled, pooled2};
        Var cat = g.concat_cols(parts);              // 1 x 5
        return g.matmul_nt(cat, cat);                // 1 x 1
      });
}

TEST(Autodiff, ConcatRowsSliceReverseRepeat) {
  std::mt19937_64 gen(6);
  check_gradients(
      {random_mat(gen, 2, 3), random_mat(gen, 3, 3), random_mat(gen, 1, 3)},
      [](Graph& g, std::vector<Var>& v) {
        std::vector<Var> parts{v[0], v[1], g.repeat_rows(v[2], 2)};
        Var cat = g.concat_rows(parts);           // 7 x 3
        Var rev = g.reverse_rows(cat);
        Var sl = g.slice_rows(rev, 1, 5);         // 5 x 3
        Var t = g.transpose(g.sum_cols(sl));      // 1 x 5
        return g.matmul_nt(t, t);
      });
}

TEST(Autodiff, AddSubRowvecSigmoid) {
  std::mt19937_64 gen(7);
  check_gradients(
      {random_mat(gen, 3, 4), random_mat(gen, 3, 4), random_mat(gen, 1, 4)},
      [](Graph& g, std::vector<Var>& v) {
        Var x = g.add_rowvec(g.sub(v[0], v[1]), v[2]);
        Var s = g.sigmoid(x);
        Var col = g.sum_cols(s);
        return g.matmul_tn(col, col);
      });
}

TEST(Autodiff, BceLoss) {
  std::mt19937_64 gen(8);
  check_gradients({random_mat(gen, 1, 1)}, [](Graph& g, std::vector<Var>& v) {
    std::vector<Var> parts{g.bce_loss(v[0], 1.0), g.bce_loss(g.scale(v[0], -0.5), 0.0)};
    return g.sum_scalars(parts);
  });
}

TEST(Autodiff, LayerNorm) {
  std::mt19937_64 gen(9);
  check_gradients(
      {random_mat(gen, 4, 6), random_mat(gen, 1, 6), random_mat(gen, 1, 6)},
      [](Graph& g, std::vector<Var>& v) {
        Var ln = g.layer_norm(v[0], v[1], v[2]);
        Var sq = g.hadamard(ln, ln);
        Var col = g.sum_cols(sq);
        return g.matmul_tn(col, col);
      },
      1e-6);
}

TEST(Autodiff, LstmSequence) {
  std::mt19937_64 gen(10);
  const int T = 5, in = 3, h = 2;
  check_gradients(
      {random_mat(gen, T, in), random_mat(gen, in, 4 * h, 0.5),
       random_mat(gen, h, 4 * h, 0.5), random_mat(gen, 1, 4 * h, 0.1),
       random_mat(gen, 1, h, 0.3), random_mat(gen, 1, h, 0.3)},
      [](Graph& g, std::vector<Var>& v) {
        Var out = g.lstm_seq(v[0], v[1], v[2], v[3], v[4], v[5]);  // T x h
        Var pooled = g.max_over_rows(out);
        Var col = g.sum_cols(g.hadamard(out, out));
        std::vector<Var> parts{g.matmul_nt(pooled, pooled), g.matmul_tn(col, col)};
        return g.sum_scalars(parts);
      },
      1e-6);
}

TEST(Autodiff, GatherRowsAccumulatesSparseGradients) {
  std::mt19937_64 gen(11);
  Mat table = random_mat(gen, 6, 3);
  Mat grad = Mat::Zero(6, 3);
  Graph g;
  Var rows = g.gather_rows(&table, &grad, {1, 4, 1});
  Var pooled = g.sum_cols(rows);              // 3 x 1
  Var out = g.matmul_tn(pooled, pooled);      // 1 x 1
  g.backward(out);
  // Row 1 appears twice, row 4 once, everything else untouched.
  EXPECT_NE(grad.row(1).cwiseAbs().sum(), 0.0);
  EXPECT_NE(grad.row(4).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(grad.row(0).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(grad.row(5).cwiseAbs().sum(), 0.0);
  EXPECT_NEAR(grad.row(1).sum(), 2.0 * 2.0 * pooled.value().sum(), 1e-12);
}

TEST(Autodiff, UniformLogitsGiveLnKLoss) {
  Graph g;
  Mat logits = Mat::Zero(1, 5);
  Var ce = g.ce_loss(g.constant(logits), 2);
  EXPECT_NEAR(ce.scalar(), std::log(5.0), 1e-12);

  Mat logit = Mat::Zero(1, 1);
  Var bce = g.bce_loss(g.constant(logit), 1.0);
  EXPECT_NEAR(bce.scalar(), std::log(2.0), 1e-12);
}

TEST(Autodiff, DeterministicForward) {
  std::mt19937_64 gen(12);
  Mat x = random_mat(gen, 4, 4);
  auto run = [&]() {
    Graph g;
    Var v = g.constant(x);
    Var out = g.softmax_rows(g.tanh(g.matmul(v, v)));
    return Mat(out.value());
  };
  const Mat a = run(), b = run();
  EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
}
