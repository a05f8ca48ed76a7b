#include <cmath>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "cibench/numeric.hpp"
#include "cibench/text_format.hpp"
#include "temp_dir.hpp"

using namespace cibench;

TEST(FormatNumber, SixSignificantDigits) {
  EXPECT_EQ(format_number(3.2), "3.2");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.123456789), "0.123457");
  EXPECT_EQ(format_number(123456789.0), "1.23457e+08");
  EXPECT_EQ(format_number(-2.5e-9), "-2.5e-09");
}

TEST(FormatNumber, InfinitiesAndNegativeZero) {
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(-0.0), "0");
}

TEST(ParseNumber, AcceptsPlainAndInfinite) {
  EXPECT_EQ(parse_number("3.2"), 3.2);
  EXPECT_EQ(parse_number("-1e-3"), -1e-3);
  EXPECT_EQ(parse_number("inf"), std::numeric_limits<double>::infinity());
  EXPECT_EQ(parse_number("-INF"), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(parse_number("Inf"), std::numeric_limits<double>::infinity());
}

TEST(ParseNumber, RejectsGarbage) {
  EXPECT_FALSE(parse_number(""));
  EXPECT_FALSE(parse_number("nan"));
  EXPECT_FALSE(parse_number("NA"));
  EXPECT_FALSE(parse_number("1.0x"));
  EXPECT_FALSE(parse_number(" 1"));
  EXPECT_FALSE(parse_number("1 "));
}

TEST(FormatNumber, ReparseIsAFixedPoint) {
  // Rendering a value that was read back must give the same text.
  for (double v : {0.1, 1.0 / 3.0, 2.0 / 3.0 * 1e10, -7.77777777e-5, 42.0}) {
    const std::string once = format_number(v);
    EXPECT_EQ(format_number(*parse_number(once)), once);
  }
}

TEST(SplitCsvLine, KeepsEmptyCells) {
  const auto cells = split_csv_line("a,,b,");
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0], "a");
  EXPECT_EQ(cells[1], "");
  EXPECT_EQ(cells[2], "b");
  EXPECT_EQ(cells[3], "");
}

TEST(ReadLines, StripsCarriageReturns) {
  cibench::testing::TempDir dir;
  const auto path = dir / "f.csv";
  {
    std::ofstream out(path, std::ios::binary);
    out << "h1,h2\r\na,b\r\nc,d";
  }
  const auto lines = read_lines(path);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "h1,h2");
  EXPECT_EQ(lines[1], "a,b");
  EXPECT_EQ(lines[2], "c,d");
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(800.0), 1.0, 0.0);
  EXPECT_EQ(sigmoid(-800.0), 0.0);
  EXPECT_NEAR(sigmoid(-0.84729786038720361), 0.3, 1e-15);
}

TEST(DeriveSeed, DependsOnEveryStreamElement) {
  const auto a = derive_seed(1, {2, 3});
  EXPECT_EQ(a, derive_seed(1, {2, 3}));
  EXPECT_NE(a, derive_seed(1, {3, 2}));
  EXPECT_NE(a, derive_seed(2, {2, 3}));
  EXPECT_NE(a, derive_seed(1, {2, 3, 0}));
}
