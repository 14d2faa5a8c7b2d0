#include <gtest/gtest.h>

#include "mcsql/params.hpp"

using namespace mcsql;

// Reference Adam trace on a scalar parameter, computed by hand:
//   w0 = 1.0, lr = 0.1, betas (0.9, 0.999), eps 1e-8, grads 0.5, -0.25, 0.1.
TEST(Adam, MatchesHandComputedScalarTrace) {
  ParamStore store;
  auto& t = store.create("w", 1, 1, ParamGroup::Sub, InitKind::Zeros, 0);
  t.value(0, 0) = 1.0;
  AdamOptimizer opt(0.1, 0.1);

  const double grads[3] = {0.5, -0.25, 0.1};
  const double expected[3] = {0.900000002, 0.8733662987078463, 0.8418419430257161};
  for (int step = 0; step < 3; ++step) {
    t.grad(0, 0) = grads[step];
    opt.step(store);
    ASSERT_NEAR(t.value(0, 0), expected[step], 1e-12) << "step " << step + 1;
  }
}

TEST(Adam, PerGroupLearningRates) {
  ParamStore store;
  auto& enc = store.create("e", 1, 1, ParamGroup::Encoder, InitKind::Zeros, 0);
  auto& sub = store.create("s", 1, 1, ParamGroup::Sub, InitKind::Zeros, 0);
  enc.value(0, 0) = 1.0;
  sub.value(0, 0) = 1.0;
  AdamOptimizer opt(1e-3, 1e-1);
  enc.grad(0, 0) = 1.0;
  sub.grad(0, 0) = 1.0;
  opt.step(store);
  // First step moves each parameter by ~lr (bias-corrected moments cancel).
  EXPECT_NEAR(enc.value(0, 0), 1.0 - 1e-3, 1e-9);
  EXPECT_NEAR(sub.value(0, 0), 1.0 - 1e-1, 1e-7);
}

TEST(Adam, ZeroLearningRateNeverMutates) {
  ParamStore store;
  auto& t = store.create("w", 2, 2, ParamGroup::Sub, InitKind::UniformRecurrent, 3);
  const Mat before = t.value;
  AdamOptimizer opt(0.0, 0.0);
  t.grad.setConstant(0.7);
  for (int i = 0; i < 3; ++i) opt.step(store);
  EXPECT_EQ((t.value - before).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParamStore, NameSeededInitIsOrderIndependent) {
  ParamStore a, b;
  a.create("x", 3, 3, ParamGroup::Sub, InitKind::UniformRecurrent, 42);
  a.create("y", 3, 3, ParamGroup::Sub, InitKind::UniformRecurrent, 42);
  b.create("y", 3, 3, ParamGroup::Sub, InitKind::UniformRecurrent, 42);
  b.create("x", 3, 3, ParamGroup::Sub, InitKind::UniformRecurrent, 42);
  EXPECT_EQ((a.at("x").value - b.at("x").value).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.at("y").value - b.at("y").value).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NE((a.at("x").value - a.at("y").value).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParamStore, FlattenLoadRoundTrip) {
  ParamStore store;
  store.create("a", 2, 3, ParamGroup::Sub, InitKind::ScaledNormal, 1);
  store.create("b", 1, 4, ParamGroup::Encoder, InitKind::UniformRecurrent, 1);
  const std::vector<double> flat = store.flatten_values();
  EXPECT_EQ(flat.size(), 10u);
  ParamStore other;
  other.create("a", 2, 3, ParamGroup::Sub, InitKind::Zeros, 9);
  other.create("b", 1, 4, ParamGroup::Encoder, InitKind::Zeros, 9);
  other.load_values(flat);
  EXPECT_EQ(other.flatten_values(), flat);
  EXPECT_THROW(other.load_values(std::vector<double>(9, 0.0)), std::invalid_argument);
}
