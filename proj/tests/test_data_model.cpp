#include <gtest/gtest.h>

#include <random>

#include "mcsql/dataset.hpp"
#include "mcsql/params.hpp"
#include "mcsql/types.hpp"

using namespace mcsql;

namespace {

TableSchema schema3() {
  return {"t1", {"name", "age", "city"}, {ColType::Text, ColType::Real, ColType::Text}};
}

}  // namespace

TEST(ValidateQuery, AcceptsMinimalQuery) {
  SQLQuery q{0, Agg::None, {}};
  EXPECT_TRUE(validate_query(q, schema3()).empty());
}

TEST(ValidateQuery, SelOutOfRange) {
  SQLQuery q{5, Agg::None, {}};
  const auto v = validate_query(q, schema3());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "sel out of range");
}

TEST(ValidateQuery, TooManyConditions) {
  SQLQuery q{0, Agg::None, {}};
  for (int i = 0; i < 5; ++i) q.conds.push_back({0, CondOp::Eq, "x"});
  const auto v = validate_query(q, schema3(), 4);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0], "too many conditions");
}

TEST(ValidateQuery, ReportsEveryViolation) {
  SQLQuery q{7, Agg::None, {{9, CondOp::Eq, "x"}}};
  const auto v = validate_query(q, schema3());
  EXPECT_EQ(v.size(), 2u);
}

// Property: validate_query is ok exactly when the type invariants hold,
// and serialize -> parse of any valid query is identity.
TEST(DataModel, RandomQueryValidationAndRoundTrip) {
  std::mt19937_64 gen(20240817);
  const TableSchema s = schema3();
  int valid_seen = 0, invalid_seen = 0;
  for (int iter = 0; iter < 2000; ++iter) {
    SQLQuery q;
    q.sel = rng::next_index(gen, 5) - 1;  // may be out of range
    q.agg = static_cast<Agg>(rng::next_index(gen, 6));
    const int n = rng::next_index(gen, 6);
    for (int i = 0; i < n; ++i) {
      Condition c;
      c.col = rng::next_index(gen, 5) - 1;
      c.op = static_cast<CondOp>(rng::next_index(gen, 3));
      c.value = "v" + std::to_string(rng::next_index(gen, 10));
      q.conds.push_back(std::move(c));
    }
    bool expect_ok = q.sel >= 0 && q.sel < s.num_cols() &&
                     static_cast<int>(q.conds.size()) <= kDefaultMaxConds;
    for (const Condition& c : q.conds)
      if (c.col < 0 || c.col >= s.num_cols()) expect_ok = false;
    EXPECT_EQ(validate_query(q, s).empty(), expect_ok);
    (expect_ok ? valid_seen : invalid_seen)++;

    if (expect_ok) {
      Example ex;
      ex.question = "round trip probe ?";
      ex.table_id = s.table_id;
      ex.gold = q;
      const Example back = example_from_json(example_to_json(ex));
      EXPECT_EQ(back.gold, q);
      EXPECT_EQ(back.table_id, ex.table_id);
      EXPECT_EQ(back.question, ex.question);
    }
  }
  EXPECT_GT(valid_seen, 100);
  EXPECT_GT(invalid_seen, 100);
}

TEST(RenderSql, SkeletonShape) {
  SQLQuery q{1, Agg::Count, {{2, CondOp::Eq, "Boston"}, {1, CondOp::Gt, "30"}}};
  EXPECT_EQ(render_sql(q, schema3()),
            "SELECT COUNT(age) FROM t1 WHERE city = 'Boston' AND age > '30'");
}
