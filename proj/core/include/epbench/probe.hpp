// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epbench/client.hpp"
#include "epbench/common.hpp"
#include "epbench/registry.hpp"

namespace epbench {

class Store;

struct ProbeConditions {
  std::int64_t input_length = 10000;  // tokens: 1K, 10K or 100K
  int concurrency = 1;                // 1, 10 or 100
  std::string region = "us-east";

  void validate() const;
  /// e.g. "10000/1/us-east"
  std::string key() const;
  bool operator==(const ProbeConditions&) const = default;
};

/// The leaderboard's default measurement condition.
ProbeConditions default_conditions();

enum class ProbeStatus { Ok, HttpError, Timeout, Truncated };
std::string_view to_string(ProbeStatus s);
ProbeStatus parse_probe_status(std::string_view s);

struct ProbeRecord {
  EndpointId endpoint;
  ProbeConditions conditions;
  Timestamp request_time{};
  double ttft = 0.0;
  std::optional<double> ttfv;
  std::vector<double> inter_token_gaps;
  double total_time = 0.0;
  std::int64_t output_tokens = 0;
  ProbeStatus status = ProbeStatus::Ok;
  std::string response_hash;  // SHA-256 hex of the concatenated token text
  Date prompt_set_day{};

  void validate() const;
};

struct LatencySummary {
  EndpointId endpoint;
  ProbeConditions conditions;
  TimeWindow window;
  double ttft_p50 = 0.0;
  double ttft_p95 = 0.0;
  double ttft_p99 = 0.0;
  std::optional<double> ttfv_p50;
  double output_speed = 0.0;  // tokens/sec over the decode phase, mean over ok probes
  double jitter = 0.0;        // std dev of inter-token gaps, seconds
  double completion_rate = 0.0;
  double error_rate = 0.0;
  std::int64_t n_probes = 0;

  /// False when no probe in the window completed; latency fields are NaN then.
  bool has_latency() const { return completion_rate > 0.0; }
  void validate() const;
};

/// ceil(p * n)-th order statistic of an ascending sample.
double nearest_rank(std::span<const double> sorted, double p);

struct ProbeOptions {
  double issued_at = 0.0;  // stream-clock seconds
  std::uint64_t seed = 0;
  int max_tokens = 256;
  Date prompt_set_day{};
};

/// One timed streaming request. Never throws: client failures are encoded
/// in the record's status.
ProbeRecord run_probe(const EndpointClient& client, const EndpointId& endpoint,
                      const ProbeConditions& conditions, const std::string& prompt,
                      double deadline, const ProbeOptions& options = {});

/// Aggregates a homogeneous (endpoint, conditions) window of probes.
LatencySummary summarize(std::span<const ProbeRecord> records);

/// A deterministic probe prompt of exactly `tokens` words.
std::string make_prompt(std::int64_t tokens, std::uint64_t seed);

struct ProbePlan {
  double cadence_seconds = 300.0;
  Timestamp start{};
  Timestamp end{};
  std::vector<ProbeConditions> rotation = {default_conditions()};
  std::uint64_t rotation_seed = 0;
  double deadline = 120.0;
  int max_tokens = 256;
  /// Endpoints to probe; empty means every registry endpoint.
  std::vector<EndpointId> endpoints;

  void validate() const;
};

/// Issues probes at every cadence tick in [plan.start, plan.end) and appends
/// each record to the store. The prompt set rotates at each UTC date
/// boundary. Returns the number of records appended.
std::size_t schedule_probes(const Registry& registry, const EndpointClient& client,
                            const ProbePlan& plan, Store& store);

}  // namespace epbench
