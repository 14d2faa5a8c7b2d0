#pragma once

#include <map>
#include <string>
#include <vector>

#include "mcsql/model.hpp"
#include "mcsql/tokenize.hpp"

namespace mcsql::testing {

/// One three-column table plus a handful of examples exercising every head:
/// conditions present/absent, Match and NotMatch tokens, numeric and text
/// columns, an unknown word and an unknown character.
inline TableData fixture_table() {
  TableData t;
  t.schema.table_id = "fix_1";
  t.schema.headers = {"relationship", "name", "age"};
  t.schema.col_types = {ColType::Text, ColType::Text, ColType::Real};
  t.rows = {{"son", "edward", "41"},
            {"daughter", "mary", "39"},
            {"cousin", "henry", "12"}};
  return t;
}

inline TableData fixture_table2() {
  TableData t;
  t.schema.table_id = "fix_2";
  t.schema.headers = {"city", "price"};
  t.schema.col_types = {ColType::Text, ColType::Real};
  t.rows = {{"perth", "3.5"}, {"verona", "41"}, {"selby", "9"}};
  return t;
}

inline Example make_example(const std::string& question, const std::string& table_id,
                            SQLQuery gold) {
  Example ex;
  ex.question = question;
  ex.question_tokens = tokenize(question);
  ex.table_id = table_id;
  ex.gold = std::move(gold);
  return ex;
}

inline std::vector<Example> fixture_examples() {
  std::vector<Example> out;
  out.push_back(make_example("who is the name when relationship is son ?", "fix_1",
                             {1, Agg::None, {{0, CondOp::Eq, "son"}}}));
  out.push_back(make_example("what is the highest age ?", "fix_1", {2, Agg::Max, {}}));
  out.push_back(make_example(
      "how many name entries when age is above 20 and relationship is daughter ?",
      "fix_1", {1, Agg::Count, {{2, CondOp::Gt, "20"}, {0, CondOp::Eq, "daughter"}}}));
  out.push_back(make_example("what is the price for perth ?", "fix_2",
                             {1, Agg::None, {{0, CondOp::Eq, "perth"}}}));
  out.push_back(make_example("what is the total price when price is below 10 ?",
                             "fix_2", {1, Agg::Sum, {{1, CondOp::Lt, "10"}}}));
  return out;
}

inline std::map<std::string, TableData> fixture_tables() {
  std::map<std::string, TableData> m;
  TableData a = fixture_table(), b = fixture_table2();
  m.emplace(a.schema.table_id, std::move(a));
  m.emplace(b.schema.table_id, std::move(b));
  return m;
}

inline ModelConfig tiny_config(bool use_tc = true, bool use_vl = true,
                               uint64_t seed = 11) {
  ModelConfig cfg;
  cfg.encoder.d = 4;
  cfg.encoder.d_e = 8;
  cfg.encoder.d_t = 4;
  cfg.encoder.bilstm_layers = 2;
  cfg.encoder.transformer_layers = 1;
  cfg.encoder.transformer_heads = 2;
  cfg.encoder.transformer_ffn = 8;
  cfg.encoder.max_positions = 64;
  cfg.ablation.use_tc = use_tc;
  cfg.ablation.use_vl = use_vl;
  cfg.init_seed = seed;
  return cfg;
}

}  // namespace mcsql::testing
