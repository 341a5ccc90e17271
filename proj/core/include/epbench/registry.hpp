// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epbench {

enum class Precision { BF16, FP8, INT8, FP16, Other };
enum class Decoding { Standard, Speculative, Other };

std::string_view to_string(Precision p);
std::string_view to_string(Decoding d);
Precision parse_precision(std::string_view s);
Decoding parse_decoding(std::string_view s);

/// The (provider, model, sku, precision, decoding, region) identity of a
/// serving endpoint. Ordering is lexicographic on key().
struct EndpointId {
  std::string provider;
  std::string model;
  std::string sku;
  Precision precision = Precision::BF16;
  Decoding decoding = Decoding::Standard;
  std::string region;

  /// The six fields joined by '/'.
  std::string key() const;
  static EndpointId parse(std::string_view key);

  bool operator==(const EndpointId& o) const = default;
  std::strong_ordering operator<=>(const EndpointId& o) const { return key() <=> o.key(); }
};

/// Column names of the six identity fields, shared by every endpoint-keyed CSV.
inline const std::vector<std::string> kEndpointColumns = {"provider",  "model",    "sku",
                                                          "precision", "decoding", "region"};
std::vector<std::string> endpoint_fields(const EndpointId& id);

struct Endpoint {
  EndpointId id;
  double price_input = 0.0;   // USD per 1M tokens
  double price_output = 0.0;  // USD per 1M tokens
  std::optional<double> price_cached_input;
  double batch_discount = 0.0;
  std::int64_t advertised_context = 0;
  std::string hardware_class;
  bool first_party = false;
  bool disclosed_quantization = false;

  /// Cached-input price; no cache benefit when unset.
  double cached_input_price() const { return price_cached_input.value_or(price_input); }
  bool full_precision() const {
    return id.precision == Precision::BF16 || id.precision == Precision::FP16;
  }
};

enum class ProviderCategory {
  FrontierLab,
  Hyperscaler,
  CustomSilicon,
  ServerlessGpu,
  Aggregator,
  RawGpuCloud,
  Decentralized,
  MultimodalSpecialist,
};
inline constexpr std::array kProviderCategories = {
    ProviderCategory::FrontierLab,   ProviderCategory::Hyperscaler,
    ProviderCategory::CustomSilicon, ProviderCategory::ServerlessGpu,
    ProviderCategory::Aggregator,    ProviderCategory::RawGpuCloud,
    ProviderCategory::Decentralized, ProviderCategory::MultimodalSpecialist,
};
std::string_view to_string(ProviderCategory c);
std::string_view display_name(ProviderCategory c);
ProviderCategory parse_category(std::string_view s);

struct Provider {
  std::string id;
  std::string name;
  ProviderCategory category = ProviderCategory::ServerlessGpu;
};

struct ModelFamily {
  std::string id;
  std::string name;
  std::optional<std::string> first_party_provider;
  bool open_weights = true;
};

struct HardwareClass {
  std::string name;
  double tdp_watts = 0.0;
  double default_pue = 1.0;
  double sharing_factor = 1.0;  // concurrent streams amortizing one device
};

struct Region {
  std::string id;
  double grid_intensity = 0.0;  // gCO2eq per kWh
  std::optional<double> pue_override;
};

/// The five composite factors, in weight-vector order.
enum class Factor { Speed, Ttft, Price, Quality, Reliability };
inline constexpr std::size_t kFactorCount = 5;
inline constexpr std::array kFactors = {Factor::Speed, Factor::Ttft, Factor::Price,
                                        Factor::Quality, Factor::Reliability};
std::string_view to_string(Factor f);
Factor parse_factor(std::string_view s);

/// One value per factor; used for weights, raw factors and normalized factors.
struct FactorValues {
  std::array<double, kFactorCount> values{};

  double& operator[](Factor f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Factor f) const { return values[static_cast<std::size_t>(f)]; }
  double sum() const;
  double dot(const FactorValues& o) const;
  bool operator==(const FactorValues&) const = default;
};

struct WorkloadPreset {
  std::string name;
  double input_ratio = 1.0;
  double output_ratio = 1.0;
  FactorValues weights;

  /// Input share r_i of the blended price.
  double input_share() const { return input_ratio / (input_ratio + output_ratio); }
  /// Throws ValidationError on ratio or weight violations.
  void validate() const;
};

/// The ten built-in workload presets, in catalog order.
std::vector<WorkloadPreset> builtin_presets();

/// Immutable, cross-referenced set of endpoints and their supporting
/// entities. Construction validates every invariant and reference.
class Registry {
 public:
  Registry(std::vector<Provider> providers, std::vector<ModelFamily> models,
           std::vector<HardwareClass> hardware, std::vector<Region> regions,
           std::vector<Endpoint> endpoints, std::vector<WorkloadPreset> presets);

  /// Loads endpoints.csv, providers.csv, models.csv, regions.csv and, when
  /// present, hardware.csv and presets.csv (built-in tables otherwise).
  static Registry load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  const std::vector<Endpoint>& endpoints() const { return endpoints_; }
  const std::vector<Provider>& providers() const { return providers_; }
  const std::vector<ModelFamily>& models() const { return models_; }
  const std::vector<HardwareClass>& hardware() const { return hardware_; }
  const std::vector<Region>& regions() const { return regions_; }
  const std::vector<WorkloadPreset>& presets() const { return presets_; }

  const Endpoint* find_endpoint(const EndpointId& id) const;
  const Endpoint& endpoint(const EndpointId& id) const;
  const Provider& provider(std::string_view id) const;
  const ModelFamily& model(std::string_view id) const;
  const HardwareClass& hardware_class(std::string_view name) const;
  const Region& region(std::string_view id) const;
  const WorkloadPreset& preset(std::string_view name) const;
  bool has_preset(std::string_view name) const;

  /// Endpoints serving `model`, in lexicographic id order.
  std::vector<Endpoint> cohort(std::string_view model) const;

  /// SHA-256 over the canonical CSV serialization.
  const std::string& hash() const { return hash_; }

  /// Canonical CSV text per file name.
  std::map<std::string, std::string> serialize() const;

 private:
  void validate();

  std::vector<Provider> providers_;
  std::vector<ModelFamily> models_;
  std::vector<HardwareClass> hardware_;
  std::vector<Region> regions_;
  std::vector<Endpoint> endpoints_;
  std::vector<WorkloadPreset> presets_;
  std::map<std::string, std::size_t, std::less<>> endpoint_index_;
  std::string hash_;
};

}  // namespace epbench
