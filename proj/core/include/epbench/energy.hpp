// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "epbench/common.hpp"
#include "epbench/registry.hpp"

namespace epbench {

enum class Provenance { Disclosed, RegionalDefault, Modeled };
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

inline constexpr double kDefaultUtilization = 0.70;

struct EnergyAssumptions {
  double utilization = kDefaultUtilization;
  double pue = 1.0;
  double sparsity = 0.0;
  Provenance utilization_source = Provenance::Modeled;
  Provenance pue_source = Provenance::Modeled;
  Provenance sparsity_source = Provenance::Modeled;

  void validate() const;
};

/// Provider-published figures; any field left unset falls back to defaults.
struct EnergyDisclosure {
  std::optional<double> utilization;
  std::optional<double> pue;
  std::optional<double> sparsity;
};

/// PUE resolves disclosure, then region override, then hardware default.
EnergyAssumptions resolve_assumptions(const HardwareClass& hw, const Region& region,
                                      const EnergyDisclosure& disclosure = {});

struct EnergyEstimate {
  EndpointId endpoint;
  double j_per_token = 0.0;
  double kwh_per_mtok = 0.0;
  double gco2_per_mtok = 0.0;
  EnergyAssumptions assumptions;
  double sharing_factor = 1.0;
  double throughput_used = 0.0;  // tokens/sec
  Timestamp computed_at{};
};

/// TDP * utilization * PUE * (1 - sparsity) / throughput, amortized over the
/// hardware class's sharing factor. Throws ValidationError for throughput <= 0.
double joules_per_token(const HardwareClass& hw, const EnergyAssumptions& assumptions,
                        double tokens_per_sec);

struct KwhAndCo2 {
  double kwh_per_mtok = 0.0;
  double gco2_per_mtok = 0.0;
};
KwhAndCo2 kwh_and_co2(double j_per_token, const Region& region);
/// Looks the region up in the registry; throws NotFoundError when unknown.
KwhAndCo2 kwh_and_co2(double j_per_token, const Registry& registry, std::string_view region_id);

EnergyEstimate estimate_energy(const Registry& registry, const EndpointId& endpoint,
                               double tokens_per_sec, const EnergyDisclosure& disclosure = {},
                               Timestamp computed_at = {});

/// Vendor TDP and default PUE for the ten reference hardware classes.
std::vector<HardwareClass> builtin_hardware_table();
/// 30-day average grid intensities for the nine reference regions.
std::vector<Region> builtin_regions();

}  // namespace epbench
