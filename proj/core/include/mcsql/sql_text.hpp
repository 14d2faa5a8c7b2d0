#pragma once

#include <stdexcept>
#include <string>

#include "mcsql/types.hpp"

namespace mcsql {

struct SqlParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses the skeleton-conformant textual form
///   SELECT [AGG(]column[)] [FROM table] [WHERE column OP value [AND ...]]
/// where AGG is MAX|MIN|COUNT|SUM|AVG, OP is = | > | <, a column is a
/// header name (case-insensitive) or #i (0-based index), and a value is a
/// single-quoted string or a bare token. Throws SqlParseError with a
/// position hint on malformed input.
SQLQuery parse_sql_text(const std::string& text, const TableSchema& schema);

}  // namespace mcsql
