#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcsql/types.hpp"

namespace mcsql {

inline constexpr double kDefaultSigma = 0.9;
inline constexpr int kDefaultNgramMax = 6;

/// A contiguous word-token span of the question. `surface` is the
/// normalized tokens joined by single spaces.
struct NGram {
  int start = 0;
  int len = 0;
  std::string surface;
};

enum class TokenTag : uint8_t { NotMatch = 0, Match = 1 };

/// Per-header best-matching cell after threshold filtering, plus the
/// Match/NotMatch tag of every question token.
struct ContentLink {
  struct Entry {
    std::string cell = kNoneSentinel;  // kNoneSentinel when below threshold
    double score = 0.0;
    std::optional<NGram> ngram;        // absent for the sentinel
  };
  std::vector<Entry> per_header;       // one entry per header, header order
  std::vector<TokenTag> token_tags;    // one tag per question token
};

/// Length of the longest common substring of `a` and `b`, both normalized
/// (lowercase, whitespace runs collapsed) before comparison.
int lcs_len(std::string_view a, std::string_view b);

/// Literal similarity of a cell string to the question:
///   max over n-grams g (1 <= n <= n_max) of
///   lcs(g, cell) / (2 |g|) + lcs(g, cell) / (2 |cell|)
/// over normalized string lengths. Ties prefer the shorter n-gram, then the
/// smaller start index. Returns score 0 and no n-gram for an empty token
/// list. Throws DomainError on an empty cell.
std::pair<double, std::optional<NGram>> literal_similarity(
    std::string_view cell, const std::vector<Token>& question_tokens,
    int n_max = kDefaultNgramMax);

/// For each header, scores the column's distinct cells and keeps the best
/// one; cells scoring below `sigma` become the sentinel. Token tags are the
/// union of the retained cells' matching n-gram spans.
ContentLink select_cells(const TableData& table,
                         const std::vector<Token>& question_tokens,
                         double sigma = kDefaultSigma, int n_max = kDefaultNgramMax);

/// Match -> 1, NotMatch -> 0, consumed by the WV type-embedding table.
std::vector<int> token_type_ids(const ContentLink& link);

}  // namespace mcsql
