#pragma once

#include <string>
#include <variant>
#include <vector>

#include "mcsql/types.hpp"

namespace mcsql {

enum class ExecErrorKind : uint8_t {
  AggOverText,         // SUM/AVG on a text column
  NonNumericValue,     // GT/LT condition value that does not parse on a real column
  NonNumericCell,      // real-column cell that does not parse inside a numeric aggregate
  InvalidQuery,
};

/// A projected value: numbers for real columns, normalized strings for text.
struct ExecValue {
  bool is_number = false;
  double num = 0.0;
  std::string text;

  static ExecValue number(double v) { return {true, v, {}}; }
  static ExecValue str(std::string s) { return {false, 0.0, std::move(s)}; }
};

/// Execution outcome: an error, a value list (agg NONE), a scalar aggregate,
/// or the distinguished NULL of an empty aggregate.
struct ExecResult {
  enum class Kind : uint8_t { Error, ValueList, Scalar, Null } kind = Kind::Null;
  ExecErrorKind error = ExecErrorKind::InvalidQuery;
  std::vector<ExecValue> values;
  ExecValue scalar;

  static ExecResult make_error(ExecErrorKind e);
  static ExecResult make_null();
  static ExecResult make_scalar(ExecValue v);
  static ExecResult make_list(std::vector<ExecValue> v);
};

/// Runs a skeleton query against a table. Matching semantics: EQ compares
/// normalized strings on text columns and parsed numbers on real columns
/// (an unparseable side matches nothing); GT/LT compare numerically on real
/// columns and lexicographically (normalized) on text columns.
ExecResult execute(const SQLQuery& query, const TableData& table);

/// True iff numbers agree within 1e-9 relative tolerance or texts are equal.
bool exec_value_equal(const ExecValue& a, const ExecValue& b);

/// Result equality: lists as multisets, numbers with tolerance, errors by
/// class, NULL equals only NULL.
bool exec_result_equal(const ExecResult& a, const ExecResult& b);

std::string render_result(const ExecResult& r);

}  // namespace mcsql
