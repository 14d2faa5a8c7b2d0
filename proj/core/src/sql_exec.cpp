#include "mcsql/sql_exec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcsql/text.hpp"

namespace mcsql {

ExecResult ExecResult::make_error(ExecErrorKind e) {
  ExecResult r;
  r.kind = Kind::Error;
  r.error = e;
  return r;
}

ExecResult ExecResult::make_null() {
  ExecResult r;
  r.kind = Kind::Null;
  return r;
}

ExecResult ExecResult::make_scalar(ExecValue v) {
  ExecResult r;
  r.kind = Kind::Scalar;
  r.scalar = std::move(v);
  return r;
}

ExecResult ExecResult::make_list(std::vector<ExecValue> v) {
  ExecResult r;
  r.kind = Kind::ValueList;
  r.values = std::move(v);
  return r;
}

namespace {

bool row_matches(const TableData& table, const std::vector<std::string>& row,
                 const Condition& c) {
  const bool numeric = table.schema.col_types[static_cast<size_t>(c.col)] == ColType::Real;
  const std::string& cell = row[static_cast<size_t>(c.col)];
  if (numeric) {
    const auto cell_num = parse_number(cell);
    const auto val_num = parse_number(c.value);
    if (!cell_num || !val_num) return false;  // unparseable side matches nothing
    switch (c.op) {
      case CondOp::Eq: return *cell_num == *val_num;
      case CondOp::Gt: return *cell_num > *val_num;
      case CondOp::Lt: return *cell_num < *val_num;
    }
    return false;
  }
  const std::string cell_norm = normalize_text(cell);
  const std::string val_norm = normalize_text(c.value);
  switch (c.op) {
    case CondOp::Eq: return cell_norm == val_norm;
    case CondOp::Gt: return cell_norm > val_norm;
    case CondOp::Lt: return cell_norm < val_norm;
  }
  return false;
}

}  // namespace

ExecResult execute(const SQLQuery& query, const TableData& table) {
  const int ncols = table.schema.num_cols();
  if (query.sel < 0 || query.sel >= ncols ||
      static_cast<int>(query.agg) >= kNumAggs)
    return ExecResult::make_error(ExecErrorKind::InvalidQuery);
  for (const Condition& c : query.conds) {
    if (c.col < 0 || c.col >= ncols || static_cast<int>(c.op) >= kNumOps)
      return ExecResult::make_error(ExecErrorKind::InvalidQuery);
    // A GT/LT value that does not parse on a real column fails the whole
    // query, independent of the rows.
    if (c.op != CondOp::Eq &&
        table.schema.col_types[static_cast<size_t>(c.col)] == ColType::Real &&
        !parse_number(c.value))
      return ExecResult::make_error(ExecErrorKind::NonNumericValue);
  }

  const bool sel_numeric =
      table.schema.col_types[static_cast<size_t>(query.sel)] == ColType::Real;

  std::vector<const std::vector<std::string>*> rows;
  for (const auto& row : table.rows) {
    bool ok = true;
    for (const Condition& c : query.conds) {
      if (!row_matches(table, row, c)) {
        ok = false;
        break;
      }
    }
    if (ok) rows.push_back(&row);
  }

  if (query.agg == Agg::Count)
    return ExecResult::make_scalar(ExecValue::number(static_cast<double>(rows.size())));

  if (query.agg == Agg::None) {
    std::vector<ExecValue> values;
    values.reserve(rows.size());
    for (const auto* row : rows) {
      const std::string& cell = (*row)[static_cast<size_t>(query.sel)];
      if (sel_numeric) {
        if (auto num = parse_number(cell)) {
          values.push_back(ExecValue::number(*num));
          continue;
        }
      }
      values.push_back(ExecValue::str(normalize_text(cell)));
    }
    return ExecResult::make_list(std::move(values));
  }

  // MAX/MIN/SUM/AVG
  if ((query.agg == Agg::Sum || query.agg == Agg::Avg) && !sel_numeric)
    return ExecResult::make_error(ExecErrorKind::AggOverText);
  if (rows.empty()) return ExecResult::make_null();

  if (!sel_numeric) {
    // MAX/MIN on a text column: lexicographic over normalized strings.
    std::string best = normalize_text((*rows[0])[static_cast<size_t>(query.sel)]);
    for (size_t i = 1; i < rows.size(); ++i) {
      std::string s = normalize_text((*rows[i])[static_cast<size_t>(query.sel)]);
      if (query.agg == Agg::Max ? s > best : s < best) best = std::move(s);
    }
    return ExecResult::make_scalar(ExecValue::str(std::move(best)));
  }

  std::vector<double> nums;
  nums.reserve(rows.size());
  for (const auto* row : rows) {
    auto num = parse_number((*row)[static_cast<size_t>(query.sel)]);
    if (!num) return ExecResult::make_error(ExecErrorKind::NonNumericCell);
    nums.push_back(*num);
  }
  double out = 0.0;
  switch (query.agg) {
    case Agg::Max: out = *std::max_element(nums.begin(), nums.end()); break;
    case Agg::Min: out = *std::min_element(nums.begin(), nums.end()); break;
    case Agg::Sum:
      for (double v : nums) out += v;
      break;
    case Agg::Avg: {
      for (double v : nums) out += v;
      out /= static_cast<double>(nums.size());
      break;
    }
    default: break;
  }
  return ExecResult::make_scalar(ExecValue::number(out));
}

bool exec_value_equal(const ExecValue& a, const ExecValue& b) {
  if (a.is_number != b.is_number) return false;
  if (!a.is_number) return a.text == b.text;
  if (a.num == b.num) return true;
  const double tol = 1e-9 * std::max(std::abs(a.num), std::abs(b.num));
  return std::abs(a.num - b.num) <= tol;
}

namespace {

bool exec_value_less(const ExecValue& a, const ExecValue& b) {
  if (a.is_number != b.is_number) return a.is_number;
  if (a.is_number) return a.num < b.num;
  return a.text < b.text;
}

}  // namespace

bool exec_result_equal(const ExecResult& a, const ExecResult& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExecResult::Kind::Error: return a.error == b.error;
    case ExecResult::Kind::Null: return true;
    case ExecResult::Kind::Scalar: return exec_value_equal(a.scalar, b.scalar);
    case ExecResult::Kind::ValueList: {
      if (a.values.size() != b.values.size()) return false;
      std::vector<ExecValue> av = a.values, bv = b.values;
      std::sort(av.begin(), av.end(), exec_value_less);
      std::sort(bv.begin(), bv.end(), exec_value_less);
      for (size_t i = 0; i < av.size(); ++i)
        if (!exec_value_equal(av[i], bv[i])) return false;
      return true;
    }
  }
  return false;
}

std::string render_result(const ExecResult& r) {
  std::ostringstream os;
  switch (r.kind) {
    case ExecResult::Kind::Error:
      os << "error(";
      switch (r.error) {
        case ExecErrorKind::AggOverText: os << "aggregate over text column"; break;
        case ExecErrorKind::NonNumericValue: os << "non-numeric comparison value"; break;
        case ExecErrorKind::NonNumericCell: os << "non-numeric cell in aggregate"; break;
        case ExecErrorKind::InvalidQuery: os << "invalid query"; break;
      }
      os << ")";
      break;
    case ExecResult::Kind::Null: os << "NULL"; break;
    case ExecResult::Kind::Scalar:
      os << (r.scalar.is_number ? canonical_number(r.scalar.num) : r.scalar.text);
      break;
    case ExecResult::Kind::ValueList: {
      os << "[";
      for (size_t i = 0; i < r.values.size(); ++i) {
        if (i) os << ", ";
        os << (r.values[i].is_number ? canonical_number(r.values[i].num)
                                     : r.values[i].text);
      }
      os << "]";
      break;
    }
  }
  return os.str();
}

}  // namespace mcsql
