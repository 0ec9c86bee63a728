#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pflow/text.hpp"

namespace pflow::text {
namespace {

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-3.25), "-3.25");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng);
    EXPECT_EQ(parse_double(format_double(v)).value(), v);
  }
}

TEST(FormatFixed, RoundsAndDropsNegativeZero) {
  EXPECT_EQ(format_fixed(1.23456, 3), "1.235");
  EXPECT_EQ(format_fixed(-0.0001, 3), "0.000");
  EXPECT_EQ(format_fixed(-0.0, 2), "0.00");
  EXPECT_EQ(format_fixed(-2.5, 1), "-2.5");
}

TEST(Split, WhitespaceAndSeparator) {
  const auto ws = split_ws("  a \t bb  c ");
  ASSERT_EQ(ws.size(), 3U);
  EXPECT_EQ(ws[1], "bb");
  const auto parts = split("1,,2", ',');
  ASSERT_EQ(parts.size(), 3U);
  EXPECT_EQ(parts[1], "");
  EXPECT_EQ(trim("  x y \r\n"), "x y");
}

TEST(Parse, RejectsGarbageAndPartialTokens) {
  EXPECT_FALSE(parse_double("1.5x"));
  EXPECT_FALSE(parse_double(""));
  EXPECT_FALSE(parse_int("3.0"));
  EXPECT_EQ(parse_int("-42").value(), -42);
  EXPECT_EQ(parse_double("1e-3").value(), 1e-3);
}

}  // namespace
}  // namespace pflow::text
