// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epbench/client.hpp"
#include "epbench/registry.hpp"

namespace epbench {

/// Behaviour of one simulated endpoint.
struct SimEndpointSpec {
  EndpointId endpoint_id;
  double ttft_median = 0.25;        // seconds
  double ttft_log_sigma = 0.0;      // lognormal shape
  double tokens_per_sec = 100.0;
  double jitter_cv = 0.0;           // coefficient of variation of inter-token gaps
  double error_rate = 0.0;          // [0, 1]
  double perturbation_epsilon = 0.0;
  double accuracy_penalty = 0.0;    // subtracted from the family success probability
  std::uint64_t seed = 0;
  int thinking_tokens = 0;          // marked thinking segment emitted before visible tokens
  std::int64_t context_cliff = 0;   // input tokens above which task success halves; 0 = none
  bool supports_logprobs = true;

  void validate() const;
};

/// Per-model-family ground truth shared by every endpoint serving the family.
struct FamilyProfile {
  std::string model;
  double base_success = 0.8;
  std::map<std::string, double, std::less<>> suite_success;
  int answer_tokens = 64;

  double success(std::string_view suite) const;
};

struct SimOptions {
  /// Sleep so events arrive at their timestamps on the wall clock. Event
  /// timestamps are identical in both modes.
  bool real_time = false;
  int support_size = 8;          // tokens with non-zero probability per position
  std::int32_t vocab_size = 4096;
};

/// A deterministic fleet of simulated streaming endpoints. Responses depend
/// only on (spec, request content, request seed); the fleet is immutable
/// and safe to stream from concurrently.
class SimFleet final : public EndpointClient {
 public:
  SimFleet(std::vector<SimEndpointSpec> specs, std::vector<FamilyProfile> families = {},
           SimOptions options = {});

  void stream(const EndpointId& endpoint, const StreamRequest& request,
              const StreamSink& sink) const override;
  bool supports_logprobs(const EndpointId& endpoint) const override;

  std::size_t size() const { return specs_.size(); }
  const std::vector<SimEndpointSpec>& specs() const { return specs_; }
  const SimEndpointSpec& spec(const EndpointId& endpoint) const;
  const FamilyProfile& family(std::string_view model) const;
  const SimOptions& options() const { return options_; }

  /// The family's token distribution at (prompt, position), sorted by
  /// descending probability then token id.
  std::vector<TokenProb> reference_distribution(std::string_view model, std::string_view prompt,
                                                int position) const;
  /// The endpoint's distribution: (1 - eps) * reference + eps * seeded noise.
  std::vector<TokenProb> endpoint_distribution(const EndpointId& endpoint,
                                               std::string_view prompt, int position) const;

 private:
  std::vector<TokenProb> reference_at(std::uint64_t model_hash, std::uint64_t prompt_hash,
                                      int position) const;
  std::vector<TokenProb> mixed_at(const SimEndpointSpec& spec, std::uint64_t model_hash,
                                  std::uint64_t prompt_hash, int position) const;

  std::vector<SimEndpointSpec> specs_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, FamilyProfile, std::less<>> families_;
  FamilyProfile default_family_;
  SimOptions options_;
};

/// Builds a fleet; throws ValidationError on duplicate ids or out-of-range specs.
SimFleet spawn_fleet(std::vector<SimEndpointSpec> specs, std::vector<FamilyProfile> families = {},
                     SimOptions options = {});

/// Collects every event of one stream.
std::vector<StreamEvent> serve_stream(const EndpointClient& client, const EndpointId& endpoint,
                                      const StreamRequest& request);

std::vector<SimEndpointSpec> load_fleet_csv(const std::filesystem::path& path);
void save_fleet_csv(const std::filesystem::path& path, const std::vector<SimEndpointSpec>& specs);
std::vector<FamilyProfile> load_families_csv(const std::filesystem::path& path);
void save_families_csv(const std::filesystem::path& path,
                       const std::vector<FamilyProfile>& families);

/// Answers a synthetic eval prompt (arithmetic or key lookup). Returns the
/// suite tag and answer, or nothing for free-form prompts.
struct SolvedTask {
  std::string suite;
  std::string answer;
};
std::optional<SolvedTask> solve_task(std::string_view prompt);

}  // namespace epbench
