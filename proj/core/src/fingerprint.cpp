// SPDX-License-Identifier: Apache-2.0
#include "epbench/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "epbench/probe.hpp"

namespace epbench {

void ReferenceSet::validate() const {
  if (prompts.empty()) throw ValidationError("reference set has no prompts");
  if (positions_per_prompt < 1) throw ValidationError("reference set needs K >= 1");
  if (top_k < 2) throw ValidationError("reference set needs top_k >= 2");
}

std::string ReferenceSet::hash() const {
  std::string text = std::to_string(positions_per_prompt) + "|" + std::to_string(top_k) + "|" +
                     std::to_string(seed) + "\n";
  for (const auto& p : prompts) text += p + "\n";
  return sha256_hex(text);
}

std::vector<std::int32_t> ReferenceSet::continuation(std::size_t prompt_index) const {
  Rng rng(mix64(seed, prompt_index));
  std::vector<std::int32_t> out(static_cast<std::size_t>(positions_per_prompt));
  for (auto& t : out) t = static_cast<std::int32_t>(rng.index(4096));
  return out;
}

ReferenceSet make_reference_set(std::size_t n_prompts, int positions_per_prompt, int top_k,
                                std::uint64_t seed) {
  ReferenceSet rs;
  rs.positions_per_prompt = positions_per_prompt;
  rs.top_k = top_k;
  rs.seed = seed;
  rs.prompts.reserve(n_prompts);
  for (std::size_t i = 0; i < n_prompts; ++i) {
    rs.prompts.push_back(make_prompt(24, mix64(seed ^ 0x5eed, i)));
  }
  rs.validate();
  return rs;
}

void Fingerprint::validate() const {
  if (refset_hash.empty()) throw ValidationError("fingerprint without refset_hash");
  if (positions_per_prompt < 1) throw ValidationError("fingerprint needs positions_per_prompt >= 1");
  if (distributions.size() % static_cast<std::size_t>(positions_per_prompt) != 0) {
    throw ValidationError("fingerprint distributions do not fill whole prompts");
  }
  for (const auto& d : distributions) {
    double sum = 0.0;
    for (const auto& tp : d) {
      if (!(tp.prob > 0.0 && tp.prob <= 1.0)) {
        throw ValidationError("fingerprint probability outside (0,1] for " + endpoint.key());
      }
      sum += tp.prob;
    }
    if (sum > 1.0 + 1e-9) throw ValidationError("fingerprint distribution sums above 1");
  }
}

Fingerprint capture_fingerprint(const EndpointClient& client, const EndpointId& endpoint,
                                const ReferenceSet& refset, Timestamp capture_time) {
  refset.validate();
  if (!client.supports_logprobs(endpoint)) {
    throw ValidationError("fingerprint undefined: '" + endpoint.key() +
                          "' does not expose log-probabilities");
  }
  constexpr int kAttempts = 16;
  Fingerprint fp;
  fp.endpoint = endpoint;
  fp.refset_hash = refset.hash();
  fp.positions_per_prompt = refset.positions_per_prompt;
  fp.capture_time = capture_time;
  fp.distributions.reserve(refset.prompts.size() *
                           static_cast<std::size_t>(refset.positions_per_prompt));

  for (std::size_t i = 0; i < refset.prompts.size(); ++i) {
    StreamRequest req;
    req.prompt = refset.prompts[i];
    req.max_tokens = refset.positions_per_prompt;
    req.logprobs_top_k = refset.top_k;
    req.forced_tokens = refset.continuation(i);
    std::vector<Distribution> got;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      got.clear();
      bool failed = false;
      req.seed = mix64(refset.seed, static_cast<std::uint64_t>(attempt));
      client.stream(endpoint, req, [&](const StreamEvent& ev) {
        if (ev.kind == EventKind::Error) {
          failed = true;
          return false;
        }
        if (ev.kind != EventKind::Token) return false;
        Distribution d;
        d.reserve(ev.top_logprobs.size());
        for (const auto& lp : ev.top_logprobs) d.push_back({lp.token, std::exp(lp.logprob)});
        got.push_back(std::move(d));
        return true;
      });
      if (!failed && got.size() == static_cast<std::size_t>(refset.positions_per_prompt)) break;
    }
    if (got.size() != static_cast<std::size_t>(refset.positions_per_prompt)) {
      throw Error("fingerprint capture failed for '" + endpoint.key() + "' at prompt " +
                  std::to_string(i));
    }
    for (auto& d : got) fp.distributions.push_back(std::move(d));
  }
  return fp;
}

double sym_kl(const Distribution& p, const Distribution& q) {
  if (p.empty() || q.empty()) throw ValidationError("sym_kl: empty distribution");
  std::map<std::int32_t, std::pair<double, double>> joint;
  for (const auto& tp : p) joint[tp.token].first += tp.prob;
  for (const auto& tq : q) joint[tq.token].second += tq.prob;
  double sp = 0.0, sq = 0.0;
  for (auto& [_, v] : joint) {
    v.first = std::max(v.first, kProbabilityFloor);
    v.second = std::max(v.second, kProbabilityFloor);
    sp += v.first;
    sq += v.second;
  }
  double kl = 0.0;
  for (const auto& [_, v] : joint) {
    const double a = v.first / sp;
    const double b = v.second / sq;
    kl += (a - b) * (std::log(a) - std::log(b));
  }
  return std::max(0.0, kl);
}

double mean_sym_kl(const Fingerprint& fp, const Fingerprint& ref) {
  if (fp.refset_hash != ref.refset_hash ||
      fp.distributions.size() != ref.distributions.size() ||
      fp.positions_per_prompt != ref.positions_per_prompt) {
    throw ValidationError("fingerprints of '" + fp.endpoint.key() + "' and '" +
                          ref.endpoint.key() + "' use different reference sets");
  }
  if (fp.distributions.empty()) throw ValidationError("empty fingerprint");
  double total = 0.0;
  for (std::size_t i = 0; i < fp.distributions.size(); ++i) {
    total += sym_kl(fp.distributions[i], ref.distributions[i]);
  }
  return total / static_cast<double>(fp.distributions.size());
}

std::string_view to_string(FidelityFlag f) {
  switch (f) {
    case FidelityFlag::Faithful: return "faithful";
    case FidelityFlag::Drifted: return "drifted";
    case FidelityFlag::QuantizedOrModified: return "quantized_or_modified";
  }
  return "faithful";
}

FidelityFlag parse_fidelity_flag(std::string_view s) {
  if (s == "faithful") return FidelityFlag::Faithful;
  if (s == "drifted") return FidelityFlag::Drifted;
  if (s == "quantized_or_modified") return FidelityFlag::QuantizedOrModified;
  throw ParseError("unknown fidelity flag '" + std::string(s) + "'");
}

double fidelity_score(double kl_sym, double z) {
  if (!(z > 0.0)) throw ValidationError("fidelity: z must be > 0");
  return std::clamp(100.0 * (1.0 - kl_sym / z), 0.0, 100.0);
}

FidelityFlag flag_for(double f) {
  if (f >= kFaithfulThreshold) return FidelityFlag::Faithful;
  if (f >= kDriftedThreshold) return FidelityFlag::Drifted;
  return FidelityFlag::QuantizedOrModified;
}

void FidelityResult::validate() const {
  if (!(kl_sym >= 0.0)) throw ValidationError("fidelity kl_sym must be >= 0");
  if (!(f >= 0.0 && f <= 100.0)) throw ValidationError("fidelity f outside [0,100]");
  if (flag != flag_for(f)) throw ValidationError("fidelity flag disagrees with f");
}

FidelityResult fidelity(const Fingerprint& fp, const Fingerprint& ref, double z,
                        bool reference_first_party) {
  FidelityResult r;
  r.endpoint = fp.endpoint;
  r.reference_endpoint = ref.endpoint;
  r.kl_sym = mean_sym_kl(fp, ref);
  r.f = fidelity_score(r.kl_sym, z);
  r.flag = flag_for(r.f);
  r.second_tier = !reference_first_party;
  return r;
}

ZCalibration calibrate_z(std::span<const double> holdout_kl, double min_z) {
  if (holdout_kl.empty()) throw ValidationError("calibrate_z: empty hold-out set");
  const double worst = *std::max_element(holdout_kl.begin(), holdout_kl.end());
  double z = min_z;
  if (worst > 0.0) {
    z = worst / (1.0 - kFaithfulThreshold / 100.0);
    while (fidelity_score(worst, z) < kFaithfulThreshold) {
      z = std::nextafter(z, std::numeric_limits<double>::infinity());
    }
  }
  ZCalibration out{z, std::numeric_limits<double>::infinity()};
  for (const double kl : holdout_kl) {
    out.margin = std::min(out.margin, fidelity_score(kl, z) - kFaithfulThreshold);
  }
  return out;
}

ZCalibration calibrate_z(std::span<const std::pair<Fingerprint, Fingerprint>> holdout,
                         double min_z) {
  std::vector<double> kls;
  kls.reserve(holdout.size());
  for (const auto& [fp, ref] : holdout) kls.push_back(mean_sym_kl(fp, ref));
  return calibrate_z(kls, min_z);
}

std::optional<ReferenceChoice> select_reference(const Registry& registry, std::string_view model,
                                                std::span<const Fingerprint> fingerprints) {
  std::vector<const Fingerprint*> cohort;
  for (const auto& fp : fingerprints) {
    if (fp.endpoint.model == model) cohort.push_back(&fp);
  }
  std::sort(cohort.begin(), cohort.end(),
            [](const Fingerprint* a, const Fingerprint* b) { return a->endpoint < b->endpoint; });
  for (const auto* fp : cohort) {
    if (registry.endpoint(fp->endpoint).first_party) return ReferenceChoice{fp->endpoint, false};
  }
  std::optional<ReferenceChoice> best;
  double best_kl = std::numeric_limits<double>::infinity();
  for (const auto* cand : cohort) {
    if (!registry.endpoint(cand->endpoint).full_precision()) continue;
    double total = 0.0;
    std::size_t n = 0;
    for (const auto* other : cohort) {
      if (other == cand) continue;
      total += mean_sym_kl(*other, *cand);
      ++n;
    }
    const double mean = n ? total / static_cast<double>(n) : 0.0;
    if (mean < best_kl) {
      best_kl = mean;
      best = ReferenceChoice{cand->endpoint, true};
    }
  }
  return best;
}

std::vector<SkuGroup> fidelity_by_sku(
    std::span<const FidelityResult> results, const Registry& registry,
    const std::map<std::string, std::map<std::string, double>>& accuracies,
    std::span<const std::string> suites) {
  struct Acc {
    std::size_t n = 0;
    double f = 0.0;
    std::map<std::string, std::pair<double, std::size_t>> deltas;
  };
  std::map<std::string, Acc> groups;
  for (const auto& r : results) {
    const auto& ep = registry.endpoint(r.endpoint);
    auto& g = groups[std::string(to_string(ep.id.precision))];
    ++g.n;
    g.f += r.f;
    const auto mine = accuracies.find(r.endpoint.key());
    const auto ref = accuracies.find(r.reference_endpoint.key());
    if (mine == accuracies.end() || ref == accuracies.end()) continue;
    for (const auto& suite : suites) {
      const auto a = mine->second.find(suite);
      const auto b = ref->second.find(suite);
      if (a == mine->second.end() || b == ref->second.end()) continue;
      auto& d = g.deltas[suite];
      d.first += 100.0 * (a->second - b->second);
      ++d.second;
    }
  }
  std::vector<SkuGroup> out;
  for (const auto& [name, g] : groups) {
    SkuGroup s{name, g.n, g.f / static_cast<double>(g.n), {}};
    for (const auto& [suite, d] : g.deltas) s.eval_deltas[suite] = d.first / static_cast<double>(d.second);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace epbench
