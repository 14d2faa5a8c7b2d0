#include "mcsql/tokenize.hpp"

#include <gtest/gtest.h>

using namespace mcsql;

namespace {

std::vector<std::string> texts(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const Token& t : toks) out.push_back(t.text);
  return out;
}

}  // namespace

TEST(Tokenize, SplitsPunctuationOffWords) {
  const auto toks = tokenize("Who is the son?");
  EXPECT_EQ(texts(toks), (std::vector<std::string>{"who", "is", "the", "son", "?"}));
}

TEST(Tokenize, KeepsNumbersWhole) {
  const auto toks = tokenize("price > 3.5");
  EXPECT_EQ(texts(toks), (std::vector<std::string>{"price", ">", "3.5"}));
}

TEST(Tokenize, RecordsCharacterSpans) {
  const auto toks = tokenize("New York City");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[0], (Token{"new", 0, 3}));
  EXPECT_EQ(toks[1], (Token{"york", 4, 8}));
  EXPECT_EQ(toks[2], (Token{"city", 9, 13}));
}

TEST(Tokenize, SpansSliceTheOriginalString) {
  const std::string q = "Which  Venue hosted round 4?";
  for (const Token& t : tokenize(q)) {
    std::string raw = q.substr(static_cast<size_t>(t.begin),
                               static_cast<size_t>(t.end - t.begin));
    for (char& c : raw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    EXPECT_EQ(raw, t.text);
  }
}

TEST(Tokenize, LeadingAndTrailingPunctuation) {
  EXPECT_EQ(texts(tokenize("(hello)")), (std::vector<std::string>{"(", "hello", ")"}));
  EXPECT_EQ(texts(tokenize("...")), (std::vector<std::string>{".", ".", "."}));
}

TEST(Tokenize, EmptyQuestionIsDomainError) {
  EXPECT_THROW(tokenize(""), DomainError);
  EXPECT_THROW(tokenize("   \t "), DomainError);
}
