#include "mcsql/types.hpp"

#include <sstream>

namespace mcsql {

const char* to_string(Agg a) {
  switch (a) {
    case Agg::None: return "NONE";
    case Agg::Max: return "MAX";
    case Agg::Min: return "MIN";
    case Agg::Count: return "COUNT";
    case Agg::Sum: return "SUM";
    case Agg::Avg: return "AVG";
  }
  return "?";
}

const char* to_string(CondOp op) {
  switch (op) {
    case CondOp::Eq: return "=";
    case CondOp::Gt: return ">";
    case CondOp::Lt: return "<";
  }
  return "?";
}

const char* to_string(ColType t) { return t == ColType::Real ? "real" : "text"; }

std::vector<std::string> validate_query(const SQLQuery& q, const TableSchema& t,
                                        int max_conds) {
  std::vector<std::string> violations;
  const int ncols = t.num_cols();
  if (q.sel < 0 || q.sel >= ncols) violations.push_back("sel out of range");
  if (static_cast<int>(q.agg) < 0 || static_cast<int>(q.agg) >= kNumAggs)
    violations.push_back("agg out of range");
  if (static_cast<int>(q.conds.size()) > max_conds)
    violations.push_back("too many conditions");
  for (size_t i = 0; i < q.conds.size(); ++i) {
    const Condition& c = q.conds[i];
    if (c.col < 0 || c.col >= ncols)
      violations.push_back("cond " + std::to_string(i) + " col out of range");
    if (static_cast<int>(c.op) < 0 || static_cast<int>(c.op) >= kNumOps)
      violations.push_back("cond " + std::to_string(i) + " op out of range");
  }
  return violations;
}

std::string render_sql(const SQLQuery& q, const TableSchema& t) {
  std::ostringstream os;
  auto col_name = [&](int c) -> std::string {
    if (c >= 0 && c < t.num_cols()) return t.headers[c];
    return "col" + std::to_string(c);
  };
  os << "SELECT ";
  if (q.agg == Agg::None) {
    os << col_name(q.sel);
  } else {
    os << to_string(q.agg) << "(" << col_name(q.sel) << ")";
  }
  os << " FROM " << (t.table_id.empty() ? "t" : t.table_id);
  for (size_t i = 0; i < q.conds.size(); ++i) {
    os << (i == 0 ? " WHERE " : " AND ");
    os << col_name(q.conds[i].col) << " " << to_string(q.conds[i].op) << " '"
       << q.conds[i].value << "'";
  }
  return os.str();
}

}  // namespace mcsql
