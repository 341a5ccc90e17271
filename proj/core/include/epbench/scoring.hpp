// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epbench/common.hpp"
#include "epbench/eval.hpp"
#include "epbench/probe.hpp"
#include "epbench/registry.hpp"

namespace epbench {

/// Blend of input, cached-input and output prices, USD per 1M tokens.
double blended_price(const Endpoint& endpoint, const WorkloadPreset& preset,
                     double cache_hit = 0.0);
double blended_price(const Endpoint& endpoint, double input_ratio, double output_ratio,
                     double cache_hit = 0.0);

enum class Orientation { HigherBetter, LowerBetter };
Orientation orientation(Factor f);

/// Min-max scaling to [0,1]; higher is always better after scaling. A
/// constant input maps to all 1.0.
std::vector<double> minmax_normalize(std::span<const double> values, Orientation orientation);

/// completion_rate * (1 - min(1, (p99/p50 - 1) / 9)).
double reliability(const LatencySummary& summary);

struct FactorVector {
  EndpointId endpoint;
  FactorValues raw;
  FactorValues normalized;
  std::string cohort;  // "full" or the model id
  std::string preset;
};

struct CompositeScore {
  EndpointId endpoint;
  std::string preset;
  std::string scope;  // "full" or "cohort:<model>"
  double score = 0.0;
  int rank = 0;
  FactorValues normalized;
  FactorValues raw;
  Timestamp computed_at{};
};

/// dot(preset weights, normalized factors). Throws ValidationError when the
/// vector was normalized for another preset.
CompositeScore composite(const FactorVector& factors, const WorkloadPreset& preset);

/// Raw measurements behind the composite; price is derived per preset.
struct EndpointFactors {
  EndpointId endpoint;
  std::optional<double> speed;
  std::optional<double> ttft;
  std::optional<double> quality;
  std::optional<double> reliability;
};

/// Descending score, ties by endpoint id.
void assign_ranks(std::vector<CompositeScore>& scores);

/// Normalizes within `scope` ("full" or "cohort:<model>") and ranks.
/// Throws ValidationError naming any scoped endpoint without all factors.
std::vector<CompositeScore> rank_endpoints(const Registry& registry,
                                           std::span<const EndpointFactors> factors,
                                           const WorkloadPreset& preset,
                                           const std::string& scope, double cache_hit = 0.0);

struct HeadlineMetrics {
  EndpointId endpoint;
  double j_ca = 0.0;  // joules per correct answer
  double c_ca = 0.0;  // USD per correct answer
  double j_per_token = 0.0;
  double p_per_token = 0.0;  // USD per token
  double tokens_to_solution = 0.0;
  double accuracy = 0.0;
  Timestamp computed_at{};
};

/// j*T/A and p*T/A; infinite when A is 0.
HeadlineMetrics headline(double j_per_token, double price_per_token, double tokens_to_solution,
                         double accuracy);
HeadlineMetrics headline(double j_per_token, double price_per_token, const EvalRun& eval);

}  // namespace epbench
