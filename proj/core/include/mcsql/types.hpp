#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcsql {

inline constexpr int kDefaultMaxConds = 4;

/// Placeholder cell used when no cell in a column clears the similarity
/// threshold.
inline constexpr const char* kNoneSentinel = "#None#";

enum class ColType : uint8_t { Text = 0, Real = 1 };

enum class Agg : uint8_t { None = 0, Max = 1, Min = 2, Count = 3, Sum = 4, Avg = 5 };
inline constexpr int kNumAggs = 6;

enum class CondOp : uint8_t { Eq = 0, Gt = 1, Lt = 2 };
inline constexpr int kNumOps = 3;

const char* to_string(Agg a);
const char* to_string(CondOp op);
const char* to_string(ColType t);

struct TableSchema {
  std::string table_id;
  std::vector<std::string> headers;
  std::vector<ColType> col_types;

  int num_cols() const { return static_cast<int>(headers.size()); }
};

struct TableData {
  TableSchema schema;
  std::vector<std::vector<std::string>> rows;  // each row has headers.size() cells
};

struct Condition {
  int col = 0;
  CondOp op = CondOp::Eq;
  std::string value;  // raw string; numeric interpretation happens at execution

  bool operator==(const Condition&) const = default;
};

/// One query in the fixed single-table skeleton: SELECT agg(col) with
/// zero or more conjunctive =/>/< conditions. No other clauses exist.
struct SQLQuery {
  int sel = 0;
  Agg agg = Agg::None;
  std::vector<Condition> conds;

  bool operator==(const SQLQuery&) const = default;
};

/// A word token with its character span in the original question string
/// ([begin, end)). `text` is the lowercased normalized form.
struct Token {
  std::string text;
  int begin = 0;
  int end = 0;

  bool operator==(const Token&) const = default;
};

struct Example {
  std::string question;
  std::vector<Token> question_tokens;
  std::string table_id;
  SQLQuery gold;
};

/// Checks the SQLQuery invariants against a schema. Violations are data,
/// not exceptions; an empty result means the query is valid.
std::vector<std::string> validate_query(const SQLQuery& q, const TableSchema& t,
                                        int max_conds = kDefaultMaxConds);

std::string render_sql(const SQLQuery& q, const TableSchema& t);

}  // namespace mcsql
