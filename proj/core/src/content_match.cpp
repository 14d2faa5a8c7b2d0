#include "mcsql/content_match.hpp"

#include <algorithm>
#include <unordered_set>

#include "mcsql/text.hpp"
#include "mcsql/tokenize.hpp"

namespace mcsql {

int lcs_len(std::string_view a_raw, std::string_view b_raw) {
  const std::string a = normalize_text(a_raw);
  const std::string b = normalize_text(b_raw);
  const size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) return 0;
  // One rolling row of the classic longest-common-substring table.
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  int best = 0;
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

std::pair<double, std::optional<NGram>> literal_similarity(
    std::string_view cell, const std::vector<Token>& question_tokens, int n_max) {
  if (normalize_text(cell).empty()) throw DomainError("literal_similarity: empty cell");
  const std::string cell_norm = normalize_text(cell);
  const double cell_len = static_cast<double>(cell_norm.size());

  double best_score = 0.0;
  std::optional<NGram> best;
  const int ntok = static_cast<int>(question_tokens.size());
  // Tie-break order: smaller n first, then smaller start index; strict
  // improvement required, so the first maximum wins.
  for (int n = 1; n <= n_max; ++n) {
    for (int s = 0; s + n <= ntok; ++s) {
      std::string surface;
      for (int k = 0; k < n; ++k) {
        if (k) surface.push_back(' ');
        surface += question_tokens[s + k].text;
      }
      surface = normalize_text(surface);
      if (surface.empty()) continue;
      const double l = static_cast<double>(lcs_len(surface, cell_norm));
      const double score =
          l / (2.0 * static_cast<double>(surface.size())) + l / (2.0 * cell_len);
      if (score > best_score) {
        best_score = score;
        best = NGram{s, n, surface};
      }
    }
  }
  return {best_score, best};
}

ContentLink select_cells(const TableData& table,
                         const std::vector<Token>& question_tokens, double sigma,
                         int n_max) {
  const int ncols = table.schema.num_cols();
  ContentLink link;
  link.per_header.resize(ncols);
  link.token_tags.assign(question_tokens.size(), TokenTag::NotMatch);

  for (int c = 0; c < ncols; ++c) {
    const bool numeric = table.schema.col_types[c] == ColType::Real;
    // Distinct cell values, first occurrence in row order.
    std::vector<std::string> cells;
    std::unordered_set<std::string> seen;
    for (const auto& row : table.rows) {
      std::string canon = canonical_cell(row[c], numeric);
      if (canon.empty()) continue;
      if (seen.insert(canon).second) cells.push_back(std::move(canon));
    }
    ContentLink::Entry entry;  // defaults to the sentinel
    for (const std::string& cell : cells) {
      auto [score, ngram] = literal_similarity(cell, question_tokens, n_max);
      if (score > entry.score) {
        entry.score = score;
        entry.cell = cell;
        entry.ngram = ngram;
      }
    }
    if (entry.score < sigma) {
      entry.cell = kNoneSentinel;
      entry.ngram.reset();
    }
    link.per_header[c] = std::move(entry);
  }

  for (const auto& entry : link.per_header) {
    if (!entry.ngram) continue;
    for (int i = entry.ngram->start; i < entry.ngram->start + entry.ngram->len; ++i)
      link.token_tags[i] = TokenTag::Match;
  }
  return link;
}

std::vector<int> token_type_ids(const ContentLink& link) {
  std::vector<int> ids(link.token_tags.size());
  for (size_t i = 0; i < ids.size(); ++i)
    ids[i] = link.token_tags[i] == TokenTag::Match ? 1 : 0;
  return ids;
}

}  // namespace mcsql
