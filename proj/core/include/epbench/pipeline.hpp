// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epbench/energy.hpp"
#include "epbench/eval.hpp"
#include "epbench/fingerprint.hpp"
#include "epbench/probe.hpp"
#include "epbench/registry.hpp"
#include "epbench/scoring.hpp"
#include "epbench/sim.hpp"
#include "epbench/store.hpp"

namespace epbench {

/// How raw measurements turn into factors. Stored in every snapshot manifest.
struct PipelineConfig {
  ProbeConditions conditions = default_conditions();
  double window_hours = 24.0;
  std::vector<std::string> quality_suites = {"mmlu-pro", "gpqa-diamond", "math-500",
                                             "aime-2025", "humaneval-plus", "ifbench"};
  /// Empty means uniform over quality_suites.
  std::map<std::string, double> suite_weights;
  std::vector<std::string> reasoning_suites = {"gpqa-diamond", "math-500", "aime-2025"};
  std::string headline_suite = "math-500";
  std::string aime_suite = "aime-2025";
  std::string code_suite = "humaneval-plus";
  std::string context_suite = "ruler";
  std::string price_preset = "chat";  // blend used for $/correct
  double fidelity_z = 0.05;
  bool use_ttfv = false;  // TTFV instead of TTFT for thinking endpoints
  double cache_hit = 0.0;

  std::map<std::string, double> weights() const;
  void validate() const;
  std::map<std::string, std::string> to_settings() const;
  /// Missing keys keep their defaults.
  static PipelineConfig from_settings(const std::map<std::string, std::string>& settings);
};

/// Everything the leaderboard knows about one endpoint.
struct EndpointMeasures {
  EndpointId endpoint;
  std::optional<LatencySummary> latency;  // default conditions
  std::map<std::string, EvalRun> latest_runs;  // per suite, context sweeps excluded
  std::optional<QualityScore> quality;
  std::optional<std::int64_t> effective_context;
  std::optional<FidelityResult> fidelity;
  std::optional<EnergyEstimate> energy;
  std::optional<HeadlineMetrics> headline;

  EndpointFactors factors(bool use_ttfv) const;
};

/// Most recent run per suite among runs with context_length 0.
std::map<std::string, EvalRun> latest_runs(const std::vector<EvalRun>& runs,
                                           const EndpointId& endpoint);
/// Effective context from the latest run at each level of the context suite.
std::optional<std::int64_t> effective_context_from_runs(const std::vector<EvalRun>& runs,
                                                        const EndpointId& endpoint,
                                                        const std::string& suite);

/// Recomputes the derived tables (latency summaries, energy, fidelity,
/// headline, composite scores) from the raw ones. Derived records carry
/// as_of as their computation time.
Snapshot derive(const Registry& registry, Snapshot raw, const PipelineConfig& config);

/// Read-side view over a derived snapshot.
class Leaderboard {
 public:
  Leaderboard(Registry registry, Snapshot snapshot);

  const Registry& registry() const { return registry_; }
  const Snapshot& snapshot() const { return snapshot_; }
  const PipelineConfig& config() const { return config_; }

  const EndpointMeasures* measures(const EndpointId& id) const;
  const std::map<std::string, EndpointMeasures>& all_measures() const { return measures_; }
  std::vector<EndpointFactors> factors() const;

  std::vector<CompositeScore> rank(const WorkloadPreset& preset, const std::string& scope) const;
  std::vector<CompositeScore> rank(const std::string& preset, const std::string& scope) const;

 private:
  Registry registry_;
  Snapshot snapshot_;
  PipelineConfig config_;
  std::map<std::string, EndpointMeasures> measures_;
};

struct SimulationOptions {
  Timestamp start{};
  int days = 1;
  double cadence_seconds = 300.0;
  std::string version = "sim";
  std::uint64_t seed = 1;
  std::size_t tasks_per_suite = 40;
  std::size_t tasks_per_context_level = 10;
  std::vector<std::int64_t> context_levels = {32000, 64000, 96000, 128000};
  ReferenceSet refset = make_reference_set(16, 4, 8, 7);
  /// When set, the store persists its NDJSON logs here.
  std::optional<std::filesystem::path> store_dir;
};

/// Runs the probe, eval and fingerprint loops against `client` for every
/// registry endpoint the fleet serves, then derives a snapshot as of
/// start + days.
Snapshot simulate(const Registry& registry, const SimFleet& fleet, const PipelineConfig& config,
                  const SimulationOptions& options);

}  // namespace epbench
