// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace epbench {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV, JSON, timestamps, enum labels).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A record names an entity that does not exist.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

/// A value violates a type invariant or an operation precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;
using Date = std::chrono::year_month_day;

/// Half-open interval [start, end).
struct TimeWindow {
  Timestamp start;
  Timestamp end;

  bool contains(Timestamp t) const { return t >= start && t < end; }
  bool operator==(const TimeWindow&) const = default;
};

Timestamp timestamp_from_seconds(double seconds_since_epoch);
double seconds_since_epoch(Timestamp t);
Date date_of(Timestamp t);

/// ISO-8601 UTC with microseconds, e.g. 2026-05-01T00:05:00.000000Z.
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);
std::string format_date(Date d);
Date parse_date(std::string_view text);

/// Canonical number text: 9 significant digits, "inf"/"-inf"/"nan" for
/// non-finite values.
std::string format_number(double v);
double parse_number(std::string_view text);
std::int64_t parse_int(std::string_view text);
bool parse_bool(std::string_view text);

std::string sha256_hex(std::string_view data);

/// FNV-1a, stable across platforms (std::hash is not).
std::uint64_t hash64(std::string_view data);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

/// Number of whitespace-separated words; the simulator and harness share
/// this as their token count.
std::int64_t count_tokens(std::string_view text);

/// Seeded generator with platform-independent transforms. std::mt19937_64 is
/// specified bit-exactly; the std distributions are not, so the transforms
/// live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  double normal();
  /// Lognormal with the given mean and coefficient of variation.
  double lognormal_mean_cv(double mean, double cv);

 private:
  std::mt19937_64 engine_;
};

}  // namespace epbench
