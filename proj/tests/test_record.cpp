#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "signmix/record.hpp"
#include "test_util.hpp"

using namespace signmix;

TEST(Record, EncodeDecodeRoundTripsReservedCharacters) {
  const std::string raw = "a b\tc=d,e%f\r\ng";
  auto enc = encode_value(raw);
  EXPECT_EQ(enc.find(' '), std::string::npos);
  EXPECT_EQ(enc.find(','), std::string::npos);
  EXPECT_EQ(decode_value(enc), raw);
}

TEST(Record, RandomBytesRoundTrip) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::string s(rng() % 20, '\0');
    for (auto& c : s) c = static_cast<char>(32 + rng() % 95);
    EXPECT_EQ(decode_value(encode_value(s)), s);
  }
}

TEST(Record, BadEscapesAreRejected) {
  EXPECT_THROW(decode_value("%4"), std::invalid_argument);
  EXPECT_THROW(decode_value("%zz"), std::invalid_argument);
}

TEST(Record, FormatDoubleIsShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5, 4.8e-3}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Record, LineRoundTrip) {
  Record r("sample");
  r.add("id", "x 1").add("n", 42).add("ok", true).add("x", 0.25).add_list("members", {"a", "b,c"});
  auto back = Record::parse(r.to_line());
  EXPECT_EQ(back.kind(), "sample");
  EXPECT_EQ(back.get("id"), "x 1");
  EXPECT_EQ(back.get_int("n"), 42);
  EXPECT_TRUE(back.get_bool("ok"));
  EXPECT_DOUBLE_EQ(back.get_double("x"), 0.25);
  EXPECT_EQ(back.get_list("members"), (std::vector<std::string>{"a", "b,c"}));
  EXPECT_EQ(back.to_line(), r.to_line());
}

TEST(Record, DoublesListRoundTrip) {
  std::vector<double> v{1.0 / 7.0, -3e12, 0.0};
  Record r("t");
  r.add_doubles("v", v);
  EXPECT_EQ(Record::parse(r.to_line()).get_doubles("v"), v);
}

TEST(Record, ParseRejectsMalformedAndDuplicateFields) {
  EXPECT_THROW(Record::parse("kind novalue"), std::invalid_argument);
  EXPECT_THROW(Record::parse("kind a=1 a=2"), std::invalid_argument);
  EXPECT_THROW(Record::parse(""), std::invalid_argument);
}

TEST(Record, ExpectFieldsChecksOrder) {
  auto r = Record::parse("k a=1 b=2");
  EXPECT_NO_THROW(r.expect_fields({"a", "b"}));
  EXPECT_THROW(r.expect_fields({"b", "a"}), std::invalid_argument);
  EXPECT_THROW(r.expect_fields({"a"}), std::invalid_argument);
  EXPECT_THROW(r.expect_fields({"a", "b", "c"}), std::invalid_argument);
}

TEST(Record, MissingKeyAndBadTypes) {
  auto r = Record::parse("k a=x");
  EXPECT_THROW(r.get("b"), std::invalid_argument);
  EXPECT_THROW(r.get_int("a"), std::invalid_argument);
  EXPECT_THROW(r.get_bool("a"), std::invalid_argument);
  EXPECT_FALSE(r.find("b").has_value());
}

TEST(Record, ReaderSkipsCommentsAndReportsLineNumbers) {
  std::istringstream in("# header\n\nk a=1\nk bad\n");
  try {
    read_records(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  std::istringstream ok("# c\nk a=1\n\nk a=2\n");
  auto recs = read_records(ok);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].line, 4u);
}

TEST(Record, JsonDecodesValues) {
  Record r("task");
  r.add("a", "x y").add_list("m", {"p", "q"});
  EXPECT_EQ(r.to_json(), R"({"kind":"task","a":"x y","m":["p","q"]})");
}

TEST(Record, DurableAppendAccumulates) {
  testutil::TempDir dir;
  auto p = dir / "log";
  append_record_durable(p, Record("v").add("i", 1));
  append_record_durable(p, Record("v").add("i", 2));
  auto recs = read_records(p);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].record.get_int("i"), 2);
}

TEST(Record, MissingFileIsIoError) {
  EXPECT_THROW(read_records(std::filesystem::path("/nonexistent/file")), IoError);
}
