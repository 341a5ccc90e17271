// SPDX-License-Identifier: Apache-2.0
#include "epbench/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace epbench {

double blended_price(const Endpoint& endpoint, double input_ratio, double output_ratio,
                     double cache_hit) {
  if (!(input_ratio > 0.0 && output_ratio > 0.0)) {
    throw ValidationError("blended_price: ratios must be > 0");
  }
  if (!(cache_hit >= 0.0 && cache_hit <= 1.0)) {
    throw ValidationError("blended_price: cache_hit must be in [0,1]");
  }
  const double ri = input_ratio / (input_ratio + output_ratio);
  const double ro = 1.0 - ri;
  return ri * ((1.0 - cache_hit) * endpoint.price_input +
               cache_hit * endpoint.cached_input_price()) +
         ro * endpoint.price_output;
}

double blended_price(const Endpoint& endpoint, const WorkloadPreset& preset, double cache_hit) {
  return blended_price(endpoint, preset.input_ratio, preset.output_ratio, cache_hit);
}

Orientation orientation(Factor f) {
  return f == Factor::Ttft || f == Factor::Price ? Orientation::LowerBetter
                                                 : Orientation::HigherBetter;
}

std::vector<double> minmax_normalize(std::span<const double> values, Orientation orientation) {
  if (values.empty()) throw ValidationError("minmax_normalize: no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, max = *hi;
  std::vector<double> out;
  out.reserve(values.size());
  for (const double v : values) {
    if (max == min) {
      out.push_back(1.0);
      continue;
    }
    const double x = std::clamp((v - min) / (max - min), 0.0, 1.0);
    out.push_back(orientation == Orientation::HigherBetter ? x : 1.0 - x);
  }
  return out;
}

double reliability(const LatencySummary& s) {
  if (!s.has_latency() || !(s.ttft_p50 > 0.0)) return 0.0;
  const double dispersion = std::min(1.0, std::max(0.0, (s.ttft_p99 / s.ttft_p50 - 1.0) / 9.0));
  return std::clamp(s.completion_rate * (1.0 - dispersion), 0.0, 1.0);
}

CompositeScore composite(const FactorVector& factors, const WorkloadPreset& preset) {
  if (factors.preset != preset.name) {
    throw ValidationError("composite: factors for preset '" + factors.preset +
                          "' scored with preset '" + preset.name + "'");
  }
  CompositeScore s;
  s.endpoint = factors.endpoint;
  s.preset = preset.name;
  s.scope = factors.cohort == "full" ? "full" : "cohort:" + factors.cohort;
  s.normalized = factors.normalized;
  s.raw = factors.raw;
  s.score = preset.weights.dot(factors.normalized);
  return s;
}

void assign_ranks(std::vector<CompositeScore>& scores) {
  std::sort(scores.begin(), scores.end(), [](const CompositeScore& a, const CompositeScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.endpoint.key() < b.endpoint.key();
  });
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = static_cast<int>(i + 1);
}

std::vector<CompositeScore> rank_endpoints(const Registry& registry,
                                           std::span<const EndpointFactors> factors,
                                           const WorkloadPreset& preset,
                                           const std::string& scope, double cache_hit) {
  preset.validate();
  std::string cohort = "full";
  std::vector<Endpoint> scoped;
  if (scope == "full") {
    scoped = registry.endpoints();
  } else if (scope.rfind("cohort:", 0) == 0) {
    cohort = scope.substr(7);
    scoped = registry.cohort(cohort);
  } else {
    throw ValidationError("unknown scope '" + scope + "'");
  }

  std::map<std::string, const EndpointFactors*> by_key;
  for (const auto& f : factors) by_key[f.endpoint.key()] = &f;

  const std::size_t n = scoped.size();
  std::vector<FactorVector> vectors(n);
  std::array<std::vector<double>, kFactorCount> columns;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ep = scoped[i];
    const auto it = by_key.find(ep.id.key());
    const EndpointFactors* f = it == by_key.end() ? nullptr : it->second;
    auto require = [&](const std::optional<double>& v, std::string_view what) {
      if (!f || !v) {
        throw ValidationError("endpoint '" + ep.id.key() + "' has no " + std::string(what));
      }
      return *v;
    };
    auto& fv = vectors[i];
    fv.endpoint = ep.id;
    fv.cohort = cohort;
    fv.preset = preset.name;
    fv.raw[Factor::Speed] = require(f ? f->speed : std::nullopt, "speed");
    fv.raw[Factor::Ttft] = require(f ? f->ttft : std::nullopt, "ttft");
    fv.raw[Factor::Price] = blended_price(ep, preset, cache_hit);
    fv.raw[Factor::Quality] = require(f ? f->quality : std::nullopt, "quality");
    fv.raw[Factor::Reliability] = require(f ? f->reliability : std::nullopt, "reliability");
    for (const auto factor : kFactors) {
      columns[static_cast<std::size_t>(factor)].push_back(fv.raw[factor]);
    }
  }

  std::vector<CompositeScore> scores;
  if (n == 0) return scores;
  for (const auto factor : kFactors) {
    const auto norm = minmax_normalize(columns[static_cast<std::size_t>(factor)], orientation(factor));
    for (std::size_t i = 0; i < n; ++i) vectors[i].normalized[factor] = norm[i];
  }
  scores.reserve(n);
  for (const auto& fv : vectors) scores.push_back(composite(fv, preset));
  assign_ranks(scores);
  return scores;
}

HeadlineMetrics headline(double j_per_token, double price_per_token, double tokens_to_solution,
                         double accuracy) {
  HeadlineMetrics h;
  h.j_per_token = j_per_token;
  h.p_per_token = price_per_token;
  h.tokens_to_solution = tokens_to_solution;
  h.accuracy = accuracy;
  if (accuracy <= 0.0) {
    h.j_ca = std::numeric_limits<double>::infinity();
    h.c_ca = std::numeric_limits<double>::infinity();
  } else {
    h.j_ca = j_per_token * tokens_to_solution / accuracy;
    h.c_ca = price_per_token * tokens_to_solution / accuracy;
  }
  return h;
}

HeadlineMetrics headline(double j_per_token, double price_per_token, const EvalRun& eval) {
  auto h = headline(j_per_token, price_per_token, eval.tokens_to_solution, eval.accuracy);
  h.endpoint = eval.endpoint;
  return h;
}

}  // namespace epbench
