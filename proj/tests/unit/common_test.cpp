// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"
#include "epbench/common.hpp"
#include "epbench/csv.hpp"

using namespace epbench;

TEST_SUITE("common") {
  TEST_CASE("format_number keeps nine significant digits") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(2988) == "2988");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(parse_number("inf") == std::numeric_limits<double>::infinity());
    CHECK(std::isnan(parse_number("nan")));
    CHECK_THROWS_AS(parse_number("1.5x"), ParseError);
    CHECK_THROWS_AS(parse_number(""), ParseError);
  }

  TEST_CASE("number text round-trips at nine digits") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
      const double v = std::exp(20.0 * rng.uniform() - 10.0);
      const std::string once = format_number(v);
      CHECK(format_number(parse_number(once)) == once);
    }
  }

  TEST_CASE("timestamps format with microseconds and round-trip") {
    const Timestamp t = parse_timestamp("2026-05-01T00:05:00.000250Z");
    CHECK(format_timestamp(t) == "2026-05-01T00:05:00.000250Z");
    CHECK(format_date(date_of(t)) == "2026-05-01");
    CHECK(parse_date("2026-05-01") == date_of(t));
    CHECK(seconds_since_epoch(timestamp_from_seconds(1777593900.5)) == doctest::Approx(1777593900.5));
    CHECK_THROWS_AS(parse_timestamp("2026-05-01 00:05:00"), ParseError);
  }

  TEST_CASE("time window is half-open") {
    const Timestamp a = parse_timestamp("2026-05-01T00:00:00.000000Z");
    const TimeWindow w{a, a + std::chrono::hours(1)};
    CHECK(w.contains(a));
    CHECK_FALSE(w.contains(a + std::chrono::hours(1)));
  }

  TEST_CASE("scalar parsers reject junk") {
    CHECK(parse_int("42") == 42);
    CHECK_THROWS_AS(parse_int("4.2"), ParseError);
    CHECK(parse_bool("true"));
    CHECK_FALSE(parse_bool("false"));
    CHECK_THROWS_AS(parse_bool("yes please"), ParseError);
  }

  TEST_CASE("sha256 matches the published test vector") {
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("").size() == 64);
  }

  TEST_CASE("hash64 is FNV-1a") {
    CHECK(hash64("") == 0xcbf29ce484222325ULL);
    CHECK(hash64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(mix64(1, 2) != mix64(2, 1));
  }

  TEST_CASE("count_tokens splits on whitespace") {
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("  one two\tthree\n") == 3);
  }

  TEST_CASE("Rng is reproducible and in range") {
    Rng a(5), b(5);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double u = a.uniform();
      CHECK(u == b.uniform());
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      const double z = a.normal();
      b.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.03).scale(1.0));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
    std::set<std::size_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(a.index(7));
    CHECK(seen.size() == 7);
    CHECK(*seen.rbegin() == 6);
  }

  TEST_CASE("lognormal_mean_cv hits its mean and degenerates at cv 0") {
    Rng rng(9);
    CHECK(rng.lognormal_mean_cv(0.01, 0.0) == doctest::Approx(0.01));
    double sum = 0.0;
    for (int i = 0; i < 50000; ++i) sum += rng.lognormal_mean_cv(2.0, 0.3);
    CHECK(sum / 50000 == doctest::Approx(2.0).epsilon(0.01));
  }
}

TEST_SUITE("csv") {
  TEST_CASE("quoted fields round-trip") {
    csv::Table t({"a", "b"});
    t.add_row({"plain", "has,comma"});
    t.add_row({"has \"quote\"", "line\nbreak"});
    const std::string text = t.to_string();
    CHECK(text.find("\"has,comma\"") != std::string::npos);
    const csv::Table back = csv::parse(text);
    CHECK(back.header() == t.header());
    CHECK(back.rows() == t.rows());
    CHECK(back.to_string() == text);
  }

  TEST_CASE("output uses LF and a trailing newline") {
    csv::Table t({"x"});
    t.add_row({"1"});
    CHECK(t.to_string() == "x\n1\n");
    CHECK(csv::parse("x\r\n1\r\n").at(0, "x") == "1");
  }

  TEST_CASE("column lookups and header checks") {
    const csv::Table t = csv::parse("a,b\n1,2\n", "demo.csv");
    CHECK(t.column("b") == 1);
    CHECK(t.has_column("a"));
    CHECK_FALSE(t.has_column("c"));
    CHECK(t.at(0, "b") == "2");
    CHECK_THROWS_AS(t.column("c"), ParseError);
    CHECK_NOTHROW(t.expect_header({"a", "b"}));
    CHECK_THROWS_AS(t.expect_header({"b", "a"}), ParseError);
  }

  TEST_CASE("malformed input is a parse error") {
    CHECK_THROWS_AS(csv::parse("a,b\n1,2,3\n"), ParseError);
    CHECK_THROWS_AS(csv::parse("a\n\"unterminated\n"), ParseError);
    csv::Table t({"a", "b"});
    CHECK_THROWS_AS(t.add_row({"only one"}), ParseError);
  }

  TEST_CASE("header-only file has no rows") {
    CHECK(csv::parse("a,b\n").size() == 0);
  }
}
