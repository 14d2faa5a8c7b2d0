#include "mcsql/text.hpp"

#include <gtest/gtest.h>

using namespace mcsql;

TEST(NormalizeText, LowercasesAndCollapsesWhitespace) {
  EXPECT_EQ(normalize_text("New  York\tCity"), "new york city");
  EXPECT_EQ(normalize_text("  padded  "), "padded");
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_EQ(normalize_text("   "), "");
  EXPECT_EQ(normalize_text("MiXeD"), "mixed");
}

TEST(ParseNumber, AcceptsPlainDecimals) {
  EXPECT_DOUBLE_EQ(*parse_number("3.5"), 3.5);
  EXPECT_DOUBLE_EQ(*parse_number("-17"), -17.0);
  EXPECT_DOUBLE_EQ(*parse_number(" 42 "), 42.0);
  EXPECT_FALSE(parse_number("3.5x").has_value());
  EXPECT_FALSE(parse_number("").has_value());
  EXPECT_FALSE(parse_number("abc").has_value());
  EXPECT_FALSE(parse_number("nan").has_value());
}

TEST(CanonicalNumber, StripsTrailingPointZero) {
  EXPECT_EQ(canonical_number(7.0), "7");
  EXPECT_EQ(canonical_number(3.5), "3.5");
  EXPECT_EQ(canonical_number(0.0), "0");
  EXPECT_EQ(canonical_number(-2.0), "-2");
  EXPECT_EQ(canonical_number(1250.0), "1250");
}

TEST(CanonicalCell, NumericColumnsGetCanonicalRendering) {
  EXPECT_EQ(canonical_cell("7.0", true), "7");
  EXPECT_EQ(canonical_cell("  3.50 ", true), "3.5");
  EXPECT_EQ(canonical_cell("Son", false), "son");
  EXPECT_EQ(canonical_cell("not a number", true), "not a number");
}
