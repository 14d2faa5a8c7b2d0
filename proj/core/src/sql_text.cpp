#include "mcsql/sql_text.hpp"

#include <cctype>
#include <optional>
#include <vector>

#include "mcsql/text.hpp"

namespace mcsql {

namespace {

struct Lexer {
  const std::string& src;
  size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= src.size();
  }
  [[noreturn]] void fail(const std::string& what) {
    throw SqlParseError(what + " at position " + std::to_string(pos) + " in: " + src);
  }
  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }
  /// A word, a quoted string, or a single symbol character.
  std::string next() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end of input");
    const char c = src[pos];
    if (c == '\'') {
      ++pos;
      std::string out;
      while (pos < src.size() && src[pos] != '\'') out.push_back(src[pos++]);
      if (pos >= src.size()) fail("unterminated quoted value");
      ++pos;
      return "'" + out;  // the quote marks a literal token
    }
    if (c == '(' || c == ')' || c == '=' || c == '<' || c == '>' || c == '#') {
      ++pos;
      return std::string(1, c);
    }
    std::string out;
    while (pos < src.size() && !std::isspace(static_cast<unsigned char>(src[pos])) &&
           src[pos] != '(' && src[pos] != ')' && src[pos] != '=' && src[pos] != '<' &&
           src[pos] != '>' && src[pos] != '\'')
      out.push_back(src[pos++]);
    return out;
  }
  std::string peek_word() {
    const size_t save = pos;
    std::string w = done() ? "" : next();
    pos = save;
    return w;
  }
};

bool iequal(const std::string& a, const char* b) {
  return normalize_text(a) == normalize_text(b);
}

std::optional<Agg> agg_keyword(const std::string& w) {
  if (iequal(w, "max")) return Agg::Max;
  if (iequal(w, "min")) return Agg::Min;
  if (iequal(w, "count")) return Agg::Count;
  if (iequal(w, "sum")) return Agg::Sum;
  if (iequal(w, "avg")) return Agg::Avg;
  return std::nullopt;
}

int resolve_column(Lexer& lex, const std::string& first, const TableSchema& schema,
                   const std::vector<std::string>& stop_words) {
  if (first == "#") {
    const std::string num = lex.next();
    try {
      const int idx = std::stoi(num);
      if (idx < 0 || idx >= schema.num_cols()) lex.fail("column index out of range");
      return idx;
    } catch (const std::exception&) {
      lex.fail("bad column index");
    }
  }
  // Greedily extend a header name over multiple words until a match is
  // possible and the next token is a stop word or symbol.
  std::string name = first;
  for (;;) {
    const std::string norm = normalize_text(name);
    for (int i = 0; i < schema.num_cols(); ++i)
      if (normalize_text(schema.headers[static_cast<size_t>(i)]) == norm) {
        return i;
      }
    const std::string w = lex.peek_word();
    bool stop = w.empty() || w.size() == 1;
    for (const std::string& s : stop_words)
      if (iequal(w, s.c_str())) stop = true;
    if (stop) lex.fail("unknown column '" + name + "'");
    name += " " + lex.next();
  }
}

}  // namespace

SQLQuery parse_sql_text(const std::string& text, const TableSchema& schema) {
  Lexer lex{text};
  SQLQuery q;
  if (!iequal(lex.next(), "select")) lex.fail("expected SELECT");

  std::string w = lex.next();
  if (auto agg = agg_keyword(w); agg && lex.peek() == '(') {
    q.agg = *agg;
    lex.next();  // (
    q.sel = resolve_column(lex, lex.next(), schema, {")"});
    if (lex.next() != ")") lex.fail("expected ')'");
  } else {
    q.agg = Agg::None;
    q.sel = resolve_column(lex, w, schema, {"from", "where"});
  }

  if (!lex.done() && iequal(lex.peek_word(), "from")) {
    lex.next();
    lex.next();  // table name, informational only
  }

  if (!lex.done()) {
    if (!iequal(lex.next(), "where")) lex.fail("expected WHERE");
    for (;;) {
      Condition c;
      c.col = resolve_column(lex, lex.next(), schema, {"=", "<", ">"});
      const std::string op = lex.next();
      if (op == "=") c.op = CondOp::Eq;
      else if (op == ">") c.op = CondOp::Gt;
      else if (op == "<") c.op = CondOp::Lt;
      else lex.fail("expected one of = > <");
      std::string val = lex.next();
      if (!val.empty() && val[0] == '\'') {
        c.value = val.substr(1);
      } else {
        // Bare value: extend until AND or end of input.
        c.value = val;
        while (!lex.done() && !iequal(lex.peek_word(), "and"))
          c.value += " " + lex.next();
      }
      q.conds.push_back(std::move(c));
      if (lex.done()) break;
      if (!iequal(lex.next(), "and")) lex.fail("expected AND");
    }
  }
  return q;
}

}  // namespace mcsql
