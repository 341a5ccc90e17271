// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epbench/client.hpp"
#include "epbench/common.hpp"
#include "epbench/registry.hpp"

namespace epbench {

/// Fixed prompts whose first K output positions form the fingerprint.
struct ReferenceSet {
  std::vector<std::string> prompts;
  int positions_per_prompt = 8;
  int top_k = 20;
  std::uint64_t seed = 0;

  void validate() const;
  /// SHA-256 over the prompts and parameters.
  std::string hash() const;
  /// Token ids every endpoint is forced along, so positions align.
  std::vector<std::int32_t> continuation(std::size_t prompt_index) const;
};

ReferenceSet make_reference_set(std::size_t n_prompts = 1024, int positions_per_prompt = 8,
                                int top_k = 20, std::uint64_t seed = 0);

using Distribution = std::vector<TokenProb>;

struct Fingerprint {
  EndpointId endpoint;
  std::string refset_hash;
  int positions_per_prompt = 0;
  /// Row-major by (prompt, position).
  std::vector<Distribution> distributions;
  Timestamp capture_time{};

  const Distribution& at(std::size_t prompt, int position) const {
    return distributions[prompt * static_cast<std::size_t>(positions_per_prompt) +
                         static_cast<std::size_t>(position)];
  }
  void validate() const;
};

/// Throws ValidationError when the endpoint does not expose log-probabilities.
Fingerprint capture_fingerprint(const EndpointClient& client, const EndpointId& endpoint,
                                const ReferenceSet& refset, Timestamp capture_time = {});

inline constexpr double kProbabilityFloor = 1e-6;

/// Symmetrized KL divergence KL(p||q) + KL(q||p) on the union of both
/// supports, after giving absent tokens kProbabilityFloor and renormalizing.
double sym_kl(const Distribution& p, const Distribution& q);

/// Mean per-position sym_kl; throws ValidationError on mismatched reference sets.
double mean_sym_kl(const Fingerprint& fp, const Fingerprint& ref);

enum class FidelityFlag { Faithful, Drifted, QuantizedOrModified };
std::string_view to_string(FidelityFlag f);
FidelityFlag parse_fidelity_flag(std::string_view s);

inline constexpr double kFaithfulThreshold = 99.5;
inline constexpr double kDriftedThreshold = 95.0;

/// 100 * (1 - kl / z), clamped to [0, 100].
double fidelity_score(double kl_sym, double z);
FidelityFlag flag_for(double f);

struct FidelityResult {
  EndpointId endpoint;
  EndpointId reference_endpoint;
  double kl_sym = 0.0;
  double f = 100.0;
  FidelityFlag flag = FidelityFlag::Faithful;
  bool second_tier = false;
  Timestamp computed_at{};

  void validate() const;
};

FidelityResult fidelity(const Fingerprint& fp, const Fingerprint& ref, double z,
                        bool reference_first_party = true);

struct ZCalibration {
  double z = 0.0;
  /// Smallest f - 99.5 over the hold-out pairs.
  double margin = 0.0;
};

inline constexpr double kMinZ = 1e-3;

/// Smallest z putting every hold-out divergence at f >= 99.5.
ZCalibration calibrate_z(std::span<const double> holdout_kl, double min_z = kMinZ);
ZCalibration calibrate_z(std::span<const std::pair<Fingerprint, Fingerprint>> holdout,
                         double min_z = kMinZ);

struct ReferenceChoice {
  EndpointId endpoint;
  bool second_tier = false;
};

/// The model's first-party endpoint when fingerprinted; otherwise the
/// full-precision endpoint with the smallest mean divergence to the rest of
/// the cohort, ties by id.
std::optional<ReferenceChoice> select_reference(const Registry& registry, std::string_view model,
                                                std::span<const Fingerprint> fingerprints);

struct SkuGroup {
  std::string sku_class;
  std::size_t n = 0;
  double mean_f = 0.0;
  /// Mean accuracy delta vs. the reference endpoint, in points, per suite.
  std::map<std::string, double> eval_deltas;
};

/// Groups results by precision class. `accuracies` maps endpoint key to
/// suite accuracies; deltas are reported for `suites` where the reference
/// and the member both have one.
std::vector<SkuGroup> fidelity_by_sku(
    std::span<const FidelityResult> results, const Registry& registry,
    const std::map<std::string, std::map<std::string, double>>& accuracies = {},
    std::span<const std::string> suites = {});

}  // namespace epbench
