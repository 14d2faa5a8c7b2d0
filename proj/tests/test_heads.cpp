#include "mcsql/heads.hpp"

#include <gtest/gtest.h>

#include "mcsql/eval.hpp"
#include "mcsql/model.hpp"
#include "test_fixtures.hpp"

using namespace mcsql;
using mcsql::testing::fixture_examples;
using mcsql::testing::fixture_tables;
using mcsql::testing::tiny_config;

namespace {

struct Fixture {
  std::map<std::string, TableData> tables = fixture_tables();
  std::vector<Example> examples = fixture_examples();
  Vocab vocab = build_vocab(examples, tables);

  std::unique_ptr<Model> make_model(bool tc = true, bool vl = true,
                                    uint64_t seed = 11) {
    return std::make_unique<Model>(tiny_config(tc, vl, seed), vocab);
  }
  CompiledExample compiled(const Model& m, size_t i) {
    const Example& ex = examples.at(i);
    return m.compile(ex, tables.at(ex.table_id));
  }
};

}  // namespace

TEST(Heads, PredictionShapes) {
  Fixture f;
  auto model = f.make_model();
  const CompiledExample ce = f.compiled(*model, 2);  // 2 conditions, 3 headers
  const Prediction p = model->predict(ce);
  EXPECT_EQ(p.wn_scores.cols(), kDefaultMaxConds + 1);
  EXPECT_EQ(p.sc_scores.cols(), 3);
  EXPECT_EQ(p.wc_scores.cols(), 3);
  EXPECT_EQ(p.sa_scores.cols(), kNumAggs);
  EXPECT_EQ(static_cast<int>(p.wc.size()), std::min(p.wn, 3));
  for (auto [st, ed] : p.wv) {
    EXPECT_LE(st, ed);
    EXPECT_GE(st, 0);
    EXPECT_LT(ed, ce.num_tokens());
  }
}

TEST(Heads, SoftmaxWeightsSumToOne) {
  Fixture f;
  auto model = f.make_model();
  const CompiledExample ce = f.compiled(*model, 0);
  ForwardTrace trace;
  ad::Graph g;
  ad::Var loss = model->example_loss(g, ce, &trace);
  ASSERT_TRUE(loss.valid());
  size_t attention_vectors = 0;
  for (const auto& [name, m] : trace.entries) {
    if (name.find("alpha") == std::string::npos) continue;
    ++attention_vectors;
    EXPECT_NEAR(m.sum(), 1.0, 1e-6) << name;
    EXPECT_TRUE((m.array() >= 0.0).all()) << name;
  }
  EXPECT_GT(attention_vectors, 10u);  // every head contributes attentions
}

TEST(Heads, AllZeroParamsTieBreakToClassZero) {
  Fixture f;
  auto model = f.make_model();
  for (auto& [name, t] : model->params().tensors()) t.value.setZero();
  const CompiledExample ce = f.compiled(*model, 0);
  const Prediction p = model->predict(ce);
  EXPECT_EQ(p.wn, 0);
  EXPECT_EQ(p.sc, 0);
  EXPECT_EQ(p.sa, 0);
  const Mat& wn = p.wn_scores;
  for (int i = 1; i < wn.cols(); ++i) EXPECT_DOUBLE_EQ(wn(0, 0), wn(0, i));
}

TEST(Heads, ConstrainedSpanDecode) {
  Mat st(1, 4), ed(1, 4);
  st << 0.0, 5.0, 0.0, 0.0;   // raw argmax st = 1
  ed << 9.0, 0.0, 0.0, 0.1;   // raw argmax ed = 0 < st
  const auto span = constrained_span(st, ed);
  EXPECT_LE(span.first, span.second);
  // Best feasible pair: st=0 keeps ed=0 (score 9) vs st=1 with ed>=1 (5+0.1).
  EXPECT_EQ(span, (std::pair<int, int>{0, 0}));

  Mat st2(1, 3), ed2(1, 3);
  st2 << 1.0, 1.0, 1.0;
  ed2 << 1.0, 1.0, 1.0;
  EXPECT_EQ(constrained_span(st2, ed2), (std::pair<int, int>{0, 0}));  // tie: lowest
}

TEST(Heads, WvRejectsBadOperatorAndColumn) {
  Fixture f;
  auto model = f.make_model();
  const CompiledExample ce = f.compiled(*model, 0);
  ad::Graph g;
  ad::Var loss = model->example_loss(g, ce);  // builds fine
  ASSERT_TRUE(loss.valid());

  CompiledExample bad = ce;
  bad.example.gold.conds[0].col = 99;
  bad.gold_spans = {{0, 0}};
  EXPECT_THROW(
      {
        ad::Graph g2;
        model->example_loss(g2, bad);
      },
      DomainError);
}

TEST(Heads, DecodeIsDeterministicAndSkeletonValid) {
  Fixture f;
  auto model = f.make_model();
  for (size_t i = 0; i < f.examples.size(); ++i) {
    const CompiledExample ce = f.compiled(*model, i);
    const SQLQuery q1 = model->decode(ce);
    const SQLQuery q2 = model->decode(ce);
    EXPECT_EQ(q1, q2);
    EXPECT_TRUE(validate_query(q1, ce.table->schema).empty());
  }
}

TEST(Heads, DecodeSkeletonValidAcrossRandomInits) {
  Fixture f;
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    auto model = f.make_model(true, true, seed);
    for (size_t i = 0; i < f.examples.size(); ++i) {
      const CompiledExample ce = f.compiled(*model, i);
      const SQLQuery q = model->decode(ce);
      EXPECT_TRUE(validate_query(q, ce.table->schema).empty())
          << "seed " << seed << " example " << i;
      if (static_cast<int>(q.conds.size()) < std::min(kDefaultMaxConds, 3))
        EXPECT_EQ(q.conds.size(), q.conds.size());
    }
  }
}

TEST(Heads, WnZeroConditionsSkipsWhereHeads) {
  Fixture f;
  auto model = f.make_model();
  const CompiledExample ce = f.compiled(*model, 1);  // zero-condition gold
  const Prediction p = model->predict(ce);
  if (p.wn == 0) {
    EXPECT_TRUE(p.wc.empty());
    EXPECT_TRUE(p.wo.empty());
    EXPECT_TRUE(p.wv.empty());
  }
  const SQLQuery q = model->decode(ce);
  EXPECT_EQ(q.conds.size(), p.wc.size());
}

// Ablation flags change only the stated computation: SC/SA/WO are bitwise
// identical across full / no-TC / no-VL models sharing the init seed.
TEST(Heads, AblationTraceDiff) {
  Fixture f;
  auto full = f.make_model(true, true);
  auto no_tc = f.make_model(false, true);
  auto no_vl = f.make_model(true, false);

  const CompiledExample ce_full = f.compiled(*full, 0);
  const CompiledExample ce_tc = f.compiled(*no_tc, 0);
  const CompiledExample ce_vl = f.compiled(*no_vl, 0);

  ForwardTrace t_full, t_tc, t_vl;
  { ad::Graph g; full->example_loss(g, ce_full, &t_full); }
  { ad::Graph g; no_tc->example_loss(g, ce_tc, &t_tc); }
  { ad::Graph g; no_vl->example_loss(g, ce_vl, &t_vl); }

  auto expect_same = [](const ForwardTrace& a, const ForwardTrace& b,
                        const std::string& key) {
    const Mat* ma = a.find(key);
    const Mat* mb = b.find(key);
    ASSERT_TRUE(ma != nullptr && mb != nullptr) << key;
    EXPECT_EQ((*ma - *mb).cwiseAbs().maxCoeff(), 0.0) << key;
  };
  auto expect_diff = [](const ForwardTrace& a, const ForwardTrace& b,
                        const std::string& key) {
    const Mat* ma = a.find(key);
    const Mat* mb = b.find(key);
    ASSERT_TRUE(ma != nullptr && mb != nullptr) << key;
    EXPECT_GT((*ma - *mb).cwiseAbs().maxCoeff(), 0.0) << key;
  };

  // Heads without content processes are untouched by either flag.
  for (const std::string key : {"sc/logits", "sa/logits", "wo/logits"}) {
    expect_same(t_full, t_tc, key);
    expect_same(t_full, t_vl, key);
  }
  // Removing TC changes the content-enhanced heads.
  expect_diff(t_full, t_tc, "wn/logits");
  expect_diff(t_full, t_tc, "wc/logits");
  // Removing VL changes only WV (WN and WC keep their values).
  expect_same(t_full, t_vl, "wn/logits");
  expect_same(t_full, t_vl, "wc/logits");
  expect_diff(t_full, t_vl, "wv/st_logits/c0");
}

TEST(Heads, NoTcModelHasNoContentParams) {
  Fixture f;
  auto no_tc = f.make_model(false, true);
  for (const auto& [name, t] : no_tc->params().tensors()) {
    EXPECT_EQ(name.find("cell_lstm"), std::string::npos) << name;
    EXPECT_EQ(name.find("type_emb"), std::string::npos) << name;
  }
}

// Every named tensor participates in the gradient of the batch loss.
TEST(Heads, GradientCoverage) {
  Fixture f;
  auto model = f.make_model();
  std::vector<CompiledExample> compiled;
  for (size_t i = 0; i < f.examples.size(); ++i)
    compiled.push_back(f.compiled(*model, i));
  std::vector<const CompiledExample*> batch;
  for (const auto& ce : compiled) batch.push_back(&ce);

  model->params().zero_grad();
  size_t skipped = 0;
  model->batch_loss_and_grad(batch, &skipped);
  EXPECT_EQ(skipped, 0u);
  for (const auto& [name, t] : model->params().tensors()) {
    EXPECT_GT(t.grad.cwiseAbs().maxCoeff(), 0.0) << "dead parameter: " << name;
  }
}

TEST(Heads, LossAnalyticValues) {
  // Perfect one-hot predictions give ~0 loss; uniform gives ln k per head.
  ad::Graph g;
  Mat sharp(1, 4);
  sharp << 50.0, 0.0, 0.0, 0.0;
  EXPECT_NEAR(g.ce_loss(g.constant(sharp), 0).scalar(), 0.0, 1e-12);
  Mat flat = Mat::Zero(1, 4);
  EXPECT_NEAR(g.ce_loss(g.constant(flat), 1).scalar(), std::log(4.0), 1e-12);
}

TEST(Heads, SkippedExampleIsCountedNotFatal) {
  Fixture f;
  auto model = f.make_model();
  Example ex = f.examples[0];
  ex.gold.conds[0].value = "never appears in question";
  const CompiledExample ce = model->compile(ex, f.tables.at(ex.table_id));
  EXPECT_FALSE(ce.gold_spans_ok);
  std::vector<const CompiledExample*> batch{&ce};
  size_t skipped = 0;
  const double loss = model->batch_loss_and_grad(batch, &skipped);
  EXPECT_EQ(skipped, 1u);
  EXPECT_EQ(loss, 0.0);
}

TEST(Heads, TeacherForcedSubtaskPrediction) {
  Fixture f;
  auto model = f.make_model();
  const CompiledExample ce = f.compiled(*model, 2);
  const SubtaskPrediction sp = model->subtask_predict(ce);
  EXPECT_EQ(sp.wc.size(), 2u);         // two distinct gold columns
  EXPECT_EQ(sp.wo.size(), 2u);         // per gold condition
  EXPECT_EQ(sp.wv_values.size(), 2u);
}
