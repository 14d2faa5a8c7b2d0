#include "mcsql/content_match.hpp"

#include <gtest/gtest.h>

#include <random>

#include "mcsql/params.hpp"
#include "mcsql/text.hpp"
#include "mcsql/tokenize.hpp"

using namespace mcsql;

namespace {

// Independent oracle: enumerate every substring of a, test containment in b.
int lcs_brute(const std::string& a_raw, const std::string& b_raw) {
  const std::string a = normalize_text(a_raw), b = normalize_text(b_raw);
  int best = 0;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t len = 1; i + len <= a.size(); ++len)
      if (b.find(a.substr(i, len)) != std::string::npos)
        best = std::max(best, static_cast<int>(len));
  return best;
}

// Independent oracle for the similarity score: explicit loops over n-grams.
double similarity_brute(const std::string& cell, const std::vector<Token>& toks,
                        int n_max) {
  const std::string c = normalize_text(cell);
  double best = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    for (size_t s = 0; s + static_cast<size_t>(n) <= toks.size(); ++s) {
      std::string g;
      for (int k = 0; k < n; ++k) {
        if (k) g += " ";
        g += toks[s + static_cast<size_t>(k)].text;
      }
      g = normalize_text(g);
      if (g.empty()) continue;
      const double l = lcs_brute(g, c);
      best = std::max(best, l / (2.0 * static_cast<double>(g.size())) +
                                l / (2.0 * static_cast<double>(c.size())));
    }
  }
  return best;
}

std::string random_string(std::mt19937_64& gen, int max_len, const char* alphabet,
                          int alpha_size) {
  const int len = rng::next_index(gen, max_len + 1);
  std::string s;
  for (int i = 0; i < len; ++i)
    s.push_back(alphabet[rng::next_index(gen, alpha_size)]);
  return s;
}

}  // namespace

TEST(LcsLen, KnownValues) {
  EXPECT_EQ(lcs_len("son", "son"), 3);
  EXPECT_EQ(lcs_len("abc", "xyz"), 0);
  EXPECT_EQ(lcs_len("new york", "new york city"), 8);
  EXPECT_EQ(lcs_len("", "anything"), 0);
  EXPECT_EQ(lcs_len("Son", "person"), 3);  // case-insensitive
}

TEST(LcsLen, MatchesBruteForceOnRandomPairs) {
  std::mt19937_64 gen(99);
  for (int iter = 0; iter < 3000; ++iter) {
    const std::string a = random_string(gen, 12, "abcd", 4);
    const std::string b = random_string(gen, 12, "abcd", 4);
    ASSERT_EQ(lcs_len(a, b), lcs_brute(a, b)) << "a=" << a << " b=" << b;
  }
}

TEST(LiteralSimilarity, ExactCellMatchScoresOne) {
  const auto toks = tokenize("who is the son of the monarch ?");
  auto [score, ngram] = literal_similarity("Son", toks);
  EXPECT_DOUBLE_EQ(score, 1.0);
  ASSERT_TRUE(ngram.has_value());
  EXPECT_EQ(ngram->surface, "son");
  EXPECT_EQ(ngram->start, 3);
  EXPECT_EQ(ngram->len, 1);
}

TEST(LiteralSimilarity, PartialOverlapKnownValue) {
  // lcs = 8, |ngram "new york"| = 8, |cell| = 13: 8/16 + 8/26
  const auto toks = tokenize("flights to new york tonight");
  auto [score, ngram] = literal_similarity("New York City", toks);
  EXPECT_NEAR(score, 8.0 / 16.0 + 8.0 / 26.0, 1e-12);
  ASSERT_TRUE(ngram.has_value());
  EXPECT_EQ(ngram->surface, "new york");
}

TEST(LiteralSimilarity, DisjointStringsScoreZero) {
  const auto toks = tokenize("who is the king");
  auto [score, ngram] = literal_similarity("qqq", toks);
  EXPECT_DOUBLE_EQ(score, 0.0);
  EXPECT_FALSE(ngram.has_value());
}

TEST(LiteralSimilarity, EmptyCellIsDomainError) {
  const auto toks = tokenize("anything here");
  EXPECT_THROW(literal_similarity("", toks), DomainError);
  EXPECT_THROW(literal_similarity("   ", toks), DomainError);
}

TEST(LiteralSimilarity, MatchesBruteForceOnRandomPairs) {
  std::mt19937_64 gen(7);
  const std::vector<std::string> words = {"new",  "york", "city", "son",  "king",
                                          "blue", "12",   "3.5",  "ab",   "cd",
                                          "abc",  "a",    "zz",   "year", "rank"};
  for (int iter = 0; iter < 1000; ++iter) {
    const int n_tok = 1 + rng::next_index(gen, 8);
    std::string q;
    for (int i = 0; i < n_tok; ++i) {
      if (i) q += " ";
      q += words[static_cast<size_t>(rng::next_index(gen, static_cast<int>(words.size())))];
    }
    std::string cell =
        words[static_cast<size_t>(rng::next_index(gen, static_cast<int>(words.size())))];
    if (rng::next_index(gen, 2)) {
      cell += " " +
              words[static_cast<size_t>(rng::next_index(gen, static_cast<int>(words.size())))];
    }
    const auto toks = tokenize(q);
    auto [score, ngram] = literal_similarity(cell, toks);
    const double expect = similarity_brute(cell, toks, kDefaultNgramMax);
    ASSERT_NEAR(score, expect, 1e-9) << "cell=" << cell << " q=" << q;
    EXPECT_GE(score, 0.0);
    EXPECT_LE(score, 1.0 + 1e-12);
    // Score 1.0 exactly when some n-gram equals the normalized cell.
    if (score > 1.0 - 1e-12) {
      ASSERT_TRUE(ngram.has_value());
      EXPECT_EQ(ngram->surface, normalize_text(cell));
    }
  }
}

namespace {

TableData example_table() {
  TableData t;
  t.schema = {"t", {"Relationship to Monarch", "Name", "Age"},
              {ColType::Text, ColType::Text, ColType::Real}};
  t.rows = {{"Son", "Edward", "41"}, {"Daughter", "Mary", "39"}, {"Son", "Henry", "12"}};
  return t;
}

}  // namespace

TEST(SelectCells, RetainsExactMatchAndSentinelsBelowSigma) {
  const auto toks = tokenize("who is the son of the monarch ?");
  const ContentLink link = select_cells(example_table(), toks, 0.9);
  ASSERT_EQ(link.per_header.size(), 3u);
  EXPECT_EQ(link.per_header[0].cell, "son");
  EXPECT_DOUBLE_EQ(link.per_header[0].score, 1.0);
  EXPECT_EQ(link.per_header[1].cell, kNoneSentinel);
  EXPECT_EQ(link.per_header[2].cell, kNoneSentinel);
  // Token "son" (index 3) is Match, all others NotMatch.
  for (size_t i = 0; i < link.token_tags.size(); ++i)
    EXPECT_EQ(link.token_tags[i] == TokenTag::Match, i == 3) << "token " << i;
}

TEST(SelectCells, ScoreBelowSigmaYieldsSentinel) {
  TableData t;
  t.schema = {"t", {"place"}, {ColType::Text}};
  t.rows = {{"New York City"}};
  const auto toks = tokenize("flights to new york tonight");
  const ContentLink link = select_cells(t, toks, 0.9);
  EXPECT_EQ(link.per_header[0].cell, kNoneSentinel);
  EXPECT_NEAR(link.per_header[0].score, 8.0 / 16.0 + 8.0 / 26.0, 1e-9);
  for (const TokenTag tag : link.token_tags) EXPECT_EQ(tag, TokenTag::NotMatch);
}

TEST(SelectCells, EmptyTableAllSentinels) {
  TableData t;
  t.schema = {"t", {"a", "b"}, {ColType::Text, ColType::Text}};
  const auto toks = tokenize("anything at all");
  const ContentLink link = select_cells(t, toks, 0.9);
  for (const auto& e : link.per_header) {
    EXPECT_EQ(e.cell, kNoneSentinel);
    EXPECT_DOUBLE_EQ(e.score, 0.0);
    EXPECT_FALSE(e.ngram.has_value());
  }
  for (const TokenTag tag : link.token_tags) EXPECT_EQ(tag, TokenTag::NotMatch);
}

TEST(SelectCells, NumericCellsMatchCanonicalRendering) {
  TableData t;
  t.schema = {"t", {"price"}, {ColType::Real}};
  t.rows = {{"3.50"}};
  const auto toks = tokenize("items priced at 3.5 ?");
  const ContentLink link = select_cells(t, toks, 0.9);
  EXPECT_EQ(link.per_header[0].cell, "3.5");
  EXPECT_DOUBLE_EQ(link.per_header[0].score, 1.0);
}

TEST(SelectCells, OverlappingSpansUnionTokenTags) {
  TableData t;
  t.schema = {"t", {"a", "b"}, {ColType::Text, ColType::Text}};
  t.rows = {{"new york", "york city"}};
  const auto toks = tokenize("new york city");
  const ContentLink link = select_cells(t, toks, 0.9);
  EXPECT_EQ(link.per_header[0].cell, "new york");
  EXPECT_EQ(link.per_header[1].cell, "york city");
  EXPECT_EQ(token_type_ids(link), (std::vector<int>{1, 1, 1}));
}

TEST(SelectCells, DeterministicOnTies) {
  TableData t;
  t.schema = {"t", {"a"}, {ColType::Text}};
  t.rows = {{"alpha"}, {"beta"}, {"alpha"}};
  const auto toks = tokenize("alpha or beta ?");
  const ContentLink first = select_cells(t, toks, 0.9);
  for (int i = 0; i < 5; ++i) {
    const ContentLink again = select_cells(t, toks, 0.9);
    EXPECT_EQ(again.per_header[0].cell, first.per_header[0].cell);
    EXPECT_DOUBLE_EQ(again.per_header[0].score, first.per_header[0].score);
  }
  // Both cells score 1.0; the first in row order wins.
  EXPECT_EQ(first.per_header[0].cell, "alpha");
}

TEST(TokenTypeIds, MatchBecomesOne) {
  ContentLink link;
  link.token_tags = {TokenTag::NotMatch, TokenTag::Match, TokenTag::Match,
                     TokenTag::NotMatch};
  EXPECT_EQ(token_type_ids(link), (std::vector<int>{0, 1, 1, 0}));
}

// ContentLink invariant: token_tags marks exactly the union of retained
// n-gram spans, on randomized tables and questions.
TEST(SelectCells, TokenTagInvariantRandomized) {
  std::mt19937_64 gen(4242);
  const std::vector<std::string> words = {"ada",  "bo",  "cy",   "dell", "eve",
                                          "finn", "gus", "hank", "ivy",  "jo"};
  for (int iter = 0; iter < 200; ++iter) {
    const int ncols = 1 + rng::next_index(gen, 3);
    TableData t;
    t.schema.table_id = "t";
    for (int c = 0; c < ncols; ++c) {
      t.schema.headers.push_back("h" + std::to_string(c));
      t.schema.col_types.push_back(ColType::Text);
    }
    const int nrows = 1 + rng::next_index(gen, 4);
    for (int r = 0; r < nrows; ++r) {
      std::vector<std::string> row;
      for (int c = 0; c < ncols; ++c)
        row.push_back(
            words[static_cast<size_t>(rng::next_index(gen, static_cast<int>(words.size())))]);
      t.rows.push_back(std::move(row));
    }
    std::string q;
    const int n_tok = 2 + rng::next_index(gen, 6);
    for (int i = 0; i < n_tok; ++i) {
      if (i) q += " ";
      q += words[static_cast<size_t>(rng::next_index(gen, static_cast<int>(words.size())))];
    }
    const auto toks = tokenize(q);
    const ContentLink link = select_cells(t, toks, 0.9);
    std::vector<int> expect(toks.size(), 0);
    for (const auto& e : link.per_header) {
      EXPECT_EQ(e.cell == kNoneSentinel, !e.ngram.has_value());
      if (e.ngram)
        for (int i = e.ngram->start; i < e.ngram->start + e.ngram->len; ++i)
          expect[static_cast<size_t>(i)] = 1;
    }
    ASSERT_EQ(token_type_ids(link), expect);
  }
}
