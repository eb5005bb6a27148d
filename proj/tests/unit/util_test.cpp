#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "metaemb/errors.hpp"
#include "metaemb/util.hpp"

using namespace metaemb;

TEST_CASE("split_ws collapses runs and never yields empties") {
  auto parts = split_ws("  a\t\tbb  c ");
  REQUIRE(parts.size() == 3);
  CHECK(parts[0] == "a");
  CHECK(parts[1] == "bb");
  CHECK(parts[2] == "c");
  CHECK(split_ws("   ").empty());
}

TEST_CASE("split_on keeps empty fields") {
  auto parts = split_on("a,,b,", ',');
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == "a");
  CHECK(parts[1] == "");
  CHECK(parts[2] == "b");
  CHECK(parts[3] == "");
}

TEST_CASE("trim strips surrounding whitespace") {
  CHECK(trim("  x y \t") == "x y");
  CHECK(trim("") == "");
  CHECK(trim(" \t ") == "");
}

TEST_CASE("parse_double consumes the whole finite token") {
  CHECK(parse_double("3.25", "t") == 3.25);
  CHECK(parse_double("-1e-3", "t") == -0.001);
  CHECK_THROWS_AS(parse_double("1.5x", "t"), DataError);
  CHECK_THROWS_AS(parse_double("", "t"), DataError);
  CHECK_THROWS_AS(parse_double("nan", "t"), DataError);
  CHECK_THROWS_AS(parse_double("inf", "t"), DataError);
}

TEST_CASE("parse_size rejects negatives and junk") {
  CHECK(parse_size("42", "t") == 42);
  CHECK_THROWS_AS(parse_size("-1", "t"), DataError);
  CHECK_THROWS_AS(parse_size("4.5", "t"), DataError);
  CHECK_THROWS_AS(parse_size("x", "t"), DataError);
}

TEST_CASE("parse errors carry the context string") {
  try {
    parse_double("bogus", "file.vec:7");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("file.vec:7") != std::string::npos);
  }
}

TEST_CASE("hex doubles round-trip bit-exactly") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    const double v = dist(rng);
    CHECK(parse_hex_double(hex_double(v), "t") == v);
  }
  CHECK(parse_hex_double(hex_double(0.0), "t") == 0.0);
  CHECK(parse_hex_double(hex_double(-0.125), "t") == -0.125);
  CHECK_THROWS_AS(parse_hex_double("zz", "t"), DataError);
}

TEST_CASE("format_double_exact round-trips through decimal") {
  std::mt19937_64 rng(72);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double v = dist(rng);
    CHECK(parse_double(format_double_exact(v), "t") == v);
  }
}

TEST_CASE("format_double gives compact ten-significant-digit output") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1234567890.0) == "1234567890");
}
