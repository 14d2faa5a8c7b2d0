#include "mcsql/tokenize.hpp"

#include <cctype>

namespace mcsql {

namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<Token> tokenize(std::string_view question) {
  std::vector<Token> tokens;
  const int n = static_cast<int>(question.size());
  int i = 0;
  while (i < n) {
    if (std::isspace(static_cast<unsigned char>(question[i]))) {
      ++i;
      continue;
    }
    int chunk_begin = i;
    while (i < n && !std::isspace(static_cast<unsigned char>(question[i]))) ++i;
    int chunk_end = i;

    // Peel leading punctuation characters as single-char tokens.
    int b = chunk_begin;
    while (b < chunk_end && is_punct(question[b])) {
      tokens.push_back({lower(question.substr(b, 1)), b, b + 1});
      ++b;
    }
    // Find trailing punctuation, but keep a decimal point that sits between
    // digits inside the token (numbers stay whole).
    int e = chunk_end;
    while (e > b && is_punct(question[e - 1])) --e;
    if (b < e) tokens.push_back({lower(question.substr(b, e - b)), b, e});
    for (int p = e; p < chunk_end; ++p)
      tokens.push_back({lower(question.substr(p, 1)), p, p + 1});
  }
  if (tokens.empty()) throw DomainError("tokenize: empty or whitespace-only question");
  return tokens;
}

}  // namespace mcsql
