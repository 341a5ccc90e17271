// SPDX-License-Identifier: Apache-2.0
#include "epbench/energy.hpp"

#include <string>

namespace epbench {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Disclosed: return "disclosed";
    case Provenance::RegionalDefault: return "regional_default";
    case Provenance::Modeled: return "modeled";
  }
  return "modeled";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "disclosed") return Provenance::Disclosed;
  if (s == "regional_default") return Provenance::RegionalDefault;
  if (s == "modeled") return Provenance::Modeled;
  throw ParseError("unknown provenance '" + std::string(s) + "'");
}

void EnergyAssumptions::validate() const {
  if (!(utilization > 0.0 && utilization <= 1.0)) {
    throw ValidationError("utilization must be in (0,1]");
  }
  if (!(pue >= 1.0)) throw ValidationError("pue must be >= 1.0");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw ValidationError("sparsity must be in [0,1)");
}

EnergyAssumptions resolve_assumptions(const HardwareClass& hw, const Region& region,
                                      const EnergyDisclosure& disclosure) {
  EnergyAssumptions a;
  if (disclosure.utilization) {
    a.utilization = *disclosure.utilization;
    a.utilization_source = Provenance::Disclosed;
  }
  if (disclosure.pue) {
    a.pue = *disclosure.pue;
    a.pue_source = Provenance::Disclosed;
  } else if (region.pue_override) {
    a.pue = *region.pue_override;
    a.pue_source = Provenance::RegionalDefault;
  } else {
    a.pue = hw.default_pue;
    a.pue_source = Provenance::Modeled;
  }
  if (disclosure.sparsity) {
    a.sparsity = *disclosure.sparsity;
    a.sparsity_source = Provenance::Disclosed;
  }
  a.validate();
  return a;
}

double joules_per_token(const HardwareClass& hw, const EnergyAssumptions& a,
                        double tokens_per_sec) {
  if (!(tokens_per_sec > 0.0)) throw ValidationError("throughput must be > 0 tokens/sec");
  a.validate();
  const double wafer = hw.tdp_watts * a.utilization * a.pue * (1.0 - a.sparsity) / tokens_per_sec;
  return wafer / hw.sharing_factor;
}

KwhAndCo2 kwh_and_co2(double j_per_token, const Region& region) {
  if (!(j_per_token > 0.0)) throw ValidationError("j_per_token must be > 0");
  KwhAndCo2 out;
  out.kwh_per_mtok = j_per_token * 1e6 / 3.6e6;
  out.gco2_per_mtok = out.kwh_per_mtok * region.grid_intensity;
  return out;
}

KwhAndCo2 kwh_and_co2(double j_per_token, const Registry& registry, std::string_view region_id) {
  return kwh_and_co2(j_per_token, registry.region(region_id));
}

EnergyEstimate estimate_energy(const Registry& registry, const EndpointId& endpoint,
                               double tokens_per_sec, const EnergyDisclosure& disclosure,
                               Timestamp computed_at) {
  const Endpoint& e = registry.endpoint(endpoint);
  const HardwareClass& hw = registry.hardware_class(e.hardware_class);
  const Region& region = registry.region(endpoint.region);
  EnergyEstimate est;
  est.endpoint = endpoint;
  est.assumptions = resolve_assumptions(hw, region, disclosure);
  est.sharing_factor = hw.sharing_factor;
  est.throughput_used = tokens_per_sec;
  est.j_per_token = joules_per_token(hw, est.assumptions, tokens_per_sec);
  const auto k = kwh_and_co2(est.j_per_token, region);
  est.kwh_per_mtok = k.kwh_per_mtok;
  est.gco2_per_mtok = k.gco2_per_mtok;
  est.computed_at = computed_at;
  return est;
}

std::vector<HardwareClass> builtin_hardware_table() {
  return {
      {"NVIDIA H100 SXM5", 700, 1.20, 1},
      {"NVIDIA H200 SXM5", 700, 1.20, 1},
      {"NVIDIA B200", 1000, 1.15, 1},
      {"NVIDIA H800 (China)", 700, 1.30, 1},
      {"Google TPU v5e", 230, 1.10, 1},
      {"Google TPU v6 (Trillium)", 350, 1.10, 1},
      {"AWS Trainium2", 300, 1.20, 1},
      {"Cerebras WSE-3", 23000, 1.20, 1},
      {"Groq LPU", 215, 1.20, 1},
      {"SambaNova SN40L (RDU)", 750, 1.20, 1},
  };
}

std::vector<Region> builtin_regions() {
  return {
      {"us-east", 380, std::nullopt},        {"us-west", 250, std::nullopt},
      {"us-texas", 400, std::nullopt},       {"eu-central", 320, std::nullopt},
      {"eu-nordic", 50, std::nullopt},       {"eu-france", 80, std::nullopt},
      {"apac-singapore", 480, std::nullopt}, {"apac-tokyo", 500, std::nullopt},
      {"china-hangzhou", 580, std::nullopt},
  };
}

}  // namespace epbench
