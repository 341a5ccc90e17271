// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epbench/csv.hpp"
#include "epbench/pipeline.hpp"

namespace epbench {

enum class GapKind { Ratio, Points };
std::string_view to_string(GapKind g);

struct AxisRange {
  std::string axis;
  double min = 0.0;
  double max = 0.0;
  double gap = 0.0;  // max/min for ratios, max-min for points
  GapKind gap_kind = GapKind::Ratio;
  std::string min_endpoint;
  std::string max_endpoint;
};

struct WithinModelRange {
  std::string model;
  std::size_t n_endpoints = 0;
  std::vector<AxisRange> rows;
};

/// Per-endpoint values of one within-model axis.
struct AxisValues {
  std::string axis;
  GapKind gap_kind = GapKind::Ratio;
  std::vector<std::pair<EndpointId, double>> values;
};

/// The twelve within-model axes, in report order. Throws ValidationError
/// naming the first endpoint missing an axis.
std::vector<AxisValues> within_model_axes(const Leaderboard& board, const std::string& model);
AxisRange axis_range(const AxisValues& values);
WithinModelRange within_model(const Leaderboard& board, const std::string& model);

/// Size of the intersection of the two top-k lists.
std::size_t topk_overlap(std::span<const std::string> ranking_a,
                         std::span<const std::string> ranking_b, std::size_t k);
std::vector<std::string> ranking_keys(const std::vector<CompositeScore>& scores);

struct OverlapMatrix {
  std::vector<std::string> presets;
  std::size_t k = 10;
  std::vector<std::vector<std::size_t>> cells;
};

inline const std::vector<std::string> kOverlapPresets = {"chat", "voice-agent", "coding-agent",
                                                         "rag",  "reasoning",   "batch"};

OverlapMatrix overlap_matrix(const Leaderboard& board, std::span<const std::string> presets,
                             std::size_t k = 10, const std::string& scope = "full");

/// Moves one weight by delta and rescales the other four proportionally.
WorkloadPreset perturb_weights(const WorkloadPreset& preset, Factor factor, double delta);
/// The preset with one factor's weight set to zero and the rest rescaled.
WorkloadPreset ablate_weights(const WorkloadPreset& preset, Factor factor);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);
/// Spearman between two rankings of the same endpoints (keys in rank order).
double spearman_rankings(std::span<const std::string> a, std::span<const std::string> b);

struct SensitivityRow {
  std::string preset;
  Factor factor = Factor::Speed;
  double delta = 0.0;
  bool valid = true;  // false when the perturbed weight would leave [0,1]
  int max_top10_shift = 0;
  bool leader_changed = false;
  std::size_t top10_overlap = 10;
};

std::vector<SensitivityRow> sensitivity_report(const Leaderboard& board,
                                               std::span<const std::string> presets,
                                               double delta = 0.10, bool both_signs = true,
                                               const std::string& scope = "full");

struct AblationRow {
  std::string scheme;  // "full" or "w/o <factor>"
  FactorValues weights;
  double spearman_rho = 1.0;
  std::size_t top10_overlap = 10;
};

struct AblationReport {
  std::string preset;
  std::vector<AblationRow> rows;
};

AblationRow ablate(const Leaderboard& board, const std::string& preset, Factor factor,
                   const std::string& scope = "full");
AblationReport ablation_report(const Leaderboard& board, const std::string& preset,
                               const std::string& scope = "full");

struct BootstrapCI {
  EndpointId endpoint;
  std::string preset;
  std::size_t n_resamples = 1000;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Resamples the endpoint's probes in the summary window and its eval runs
/// (per suite) with replacement, holding other endpoints fixed, and
/// recomputes its composite within `scope`.
BootstrapCI bootstrap_ci(const Leaderboard& board, const EndpointId& endpoint,
                         const std::string& preset, std::size_t n = 1000,
                         std::uint64_t seed = 0, const std::string& scope = "full");

struct LooRow {
  std::string axis;
  double full = 0.0;
  double max_relative_change = 0.0;
  std::string worst_drop;  // endpoint whose removal moves the gap most
};

/// Max relative change of the gap over all single-value drops.
double leave_one_out_change(std::span<const double> values, GapKind kind);

inline const std::vector<std::string> kLooAxes = {"output_speed", "blended_price_3_1",
                                                  "fidelity", "j_per_correct"};

std::vector<LooRow> leave_one_out(const Leaderboard& board, const std::string& model,
                                  std::span<const std::string> axes = kLooAxes);

struct CategoryRow {
  ProviderCategory category = ProviderCategory::FrontierLab;
  std::size_t n_endpoints = 0;
  std::vector<std::string> providers;  // provider names with at least one endpoint
};

/// Endpoint counts per provider category, in catalog order.
std::vector<CategoryRow> registry_summary(const Registry& registry);

/// CSV exports.
csv::Table to_table(const WithinModelRange& r);
csv::Table to_table(const OverlapMatrix& m);
csv::Table to_table(const AblationReport& r);
csv::Table to_table(const std::vector<SensitivityRow>& rows);
csv::Table to_table(const std::vector<BootstrapCI>& rows);
csv::Table to_table(const std::vector<LooRow>& rows);
csv::Table to_table(const std::vector<SkuGroup>& groups, std::span<const std::string> suites);
csv::Table to_table(const std::vector<CategoryRow>& rows);
csv::Table to_table(const std::vector<HardwareClass>& hardware);

/// Fidelity groups for a model's cohort, with deltas on the given suites.
std::vector<SkuGroup> fidelity_groups(const Leaderboard& board, const std::string& model,
                                      std::span<const std::string> suites);

}  // namespace epbench
