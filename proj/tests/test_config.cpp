#include <gtest/gtest.h>

#include "signmix/config.hpp"
#include "signmix/record.hpp"

using namespace signmix;

TEST(Config, ParsesKeysValuesAndComments) {
  auto c = Config::parse("# comment\nplan.total_epochs = 50  # trailing\n\nname=abc\nflag = true\n");
  EXPECT_EQ(c.get("name"), "abc");
  EXPECT_DOUBLE_EQ(c.get_double("plan.total_epochs", 0), 50.0);
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(c.get_int("missing", 7), 7);
  EXPECT_THROW(c.get("missing"), std::invalid_argument);
}

TEST(Config, RejectsMalformedLinesWithLineNumbers) {
  try {
    Config::parse("a = 1\nnot a pair\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(Config::parse("a = 1\na = 2\n"), ParseError);
}

TEST(Config, BadNumbersThrow) {
  auto c = Config::parse("x = abc\n");
  EXPECT_THROW(c.get_double("x", 0), std::invalid_argument);
  EXPECT_THROW(c.get_int("x", 0), std::invalid_argument);
  EXPECT_THROW(c.get_bool("x", false), std::invalid_argument);
}

TEST(Config, SectionAndUnknownKeys) {
  auto c = Config::parse("plan.a = 1\nplan.b = 2\nother = 3\n");
  auto s = c.section("plan");
  EXPECT_EQ(s.entries().size(), 2u);
  EXPECT_EQ(s.get("a"), "1");
  EXPECT_NO_THROW(s.reject_unknown({"a", "b"}));
  EXPECT_THROW(s.reject_unknown({"a"}), std::invalid_argument);
}

TEST(Config, HashIgnoresOrderAndSpacing) {
  auto a = Config::parse("x = 1\ny = 2\n");
  auto b = Config::parse("y=2\n# note\nx   =   1\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), Config::parse("x = 1\ny = 3\n").hash());
}

TEST(Config, FnvKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}
