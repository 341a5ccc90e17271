// SPDX-License-Identifier: Apache-2.0
#include "epbench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace epbench {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::map<std::string, double> PipelineConfig::weights() const {
  return suite_weights.empty() ? uniform_suite_weights(quality_suites) : suite_weights;
}

void PipelineConfig::validate() const {
  conditions.validate();
  if (!(window_hours > 0.0)) throw ValidationError("pipeline window must be > 0 hours");
  if (quality_suites.empty()) throw ValidationError("pipeline needs at least one quality suite");
  if (!(fidelity_z > 0.0)) throw ValidationError("fidelity_z must be > 0");
  if (!(cache_hit >= 0.0 && cache_hit <= 1.0)) throw ValidationError("cache_hit must be in [0,1]");
  double sum = 0.0;
  for (const auto& [suite, w] : weights()) {
    if (std::find(quality_suites.begin(), quality_suites.end(), suite) == quality_suites.end()) {
      throw ValidationError("suite weight for unconfigured suite '" + suite + "'");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("suite weights must sum to 1");
}

std::map<std::string, std::string> PipelineConfig::to_settings() const {
  std::map<std::string, std::string> s;
  s["input_length"] = std::to_string(conditions.input_length);
  s["concurrency"] = std::to_string(conditions.concurrency);
  s["probe_region"] = conditions.region;
  s["window_hours"] = format_number(window_hours);
  s["quality_suites"] = join(quality_suites);
  std::vector<std::string> w;
  for (const auto& [suite, weight] : suite_weights) w.push_back(suite + ":" + format_number(weight));
  s["suite_weights"] = join(w);
  s["reasoning_suites"] = join(reasoning_suites);
  s["headline_suite"] = headline_suite;
  s["aime_suite"] = aime_suite;
  s["code_suite"] = code_suite;
  s["context_suite"] = context_suite;
  s["price_preset"] = price_preset;
  s["fidelity_z"] = format_number(fidelity_z);
  s["use_ttfv"] = use_ttfv ? "true" : "false";
  s["cache_hit"] = format_number(cache_hit);
  return s;
}

PipelineConfig PipelineConfig::from_settings(const std::map<std::string, std::string>& s) {
  PipelineConfig c;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = s.find(key);
    return it == s.end() ? nullptr : &it->second;
  };
  if (auto v = get("input_length")) c.conditions.input_length = parse_int(*v);
  if (auto v = get("concurrency")) c.conditions.concurrency = static_cast<int>(parse_int(*v));
  if (auto v = get("probe_region")) c.conditions.region = *v;
  if (auto v = get("window_hours")) c.window_hours = parse_number(*v);
  if (auto v = get("quality_suites")) c.quality_suites = split(*v);
  if (auto v = get("suite_weights")) {
    c.suite_weights.clear();
    for (const auto& item : split(*v)) {
      const auto colon = item.rfind(':');
      if (colon == std::string::npos) throw ParseError("bad suite weight '" + item + "'");
      c.suite_weights[item.substr(0, colon)] = parse_number(item.substr(colon + 1));
    }
  }
  if (auto v = get("reasoning_suites")) c.reasoning_suites = split(*v);
  if (auto v = get("headline_suite")) c.headline_suite = *v;
  if (auto v = get("aime_suite")) c.aime_suite = *v;
  if (auto v = get("code_suite")) c.code_suite = *v;
  if (auto v = get("context_suite")) c.context_suite = *v;
  if (auto v = get("price_preset")) c.price_preset = *v;
  if (auto v = get("fidelity_z")) c.fidelity_z = parse_number(*v);
  if (auto v = get("use_ttfv")) c.use_ttfv = parse_bool(*v);
  if (auto v = get("cache_hit")) c.cache_hit = parse_number(*v);
  c.validate();
  return c;
}

EndpointFactors EndpointMeasures::factors(bool use_ttfv) const {
  EndpointFactors f;
  f.endpoint = endpoint;
  if (latency && latency->has_latency()) {
    if (std::isfinite(latency->output_speed)) f.speed = latency->output_speed;
    f.ttft = use_ttfv && latency->ttfv_p50 ? *latency->ttfv_p50 : latency->ttft_p50;
    f.reliability = reliability(*latency);
  } else if (latency) {
    f.reliability = 0.0;
  }
  if (quality) f.quality = quality->q;
  return f;
}

std::map<std::string, EvalRun> latest_runs(const std::vector<EvalRun>& runs,
                                           const EndpointId& endpoint) {
  std::map<std::string, EvalRun> out;
  for (const auto& r : runs) {
    if (!(r.endpoint == endpoint) || r.context_length != 0) continue;
    const auto it = out.find(r.suite);
    if (it == out.end() || r.window.start >= it->second.window.start) out[r.suite] = r;
  }
  return out;
}

std::optional<std::int64_t> effective_context_from_runs(const std::vector<EvalRun>& runs,
                                                        const EndpointId& endpoint,
                                                        const std::string& suite) {
  std::map<std::int64_t, const EvalRun*> by_level;
  for (const auto& r : runs) {
    if (!(r.endpoint == endpoint) || r.suite != suite || r.context_length <= 0) continue;
    auto& slot = by_level[r.context_length];
    if (!slot || r.window.start >= slot->window.start) slot = &r;
  }
  if (by_level.empty()) return std::nullopt;
  std::vector<std::int64_t> levels;
  std::vector<double> acc;
  for (const auto& [level, run] : by_level) {
    levels.push_back(level);
    acc.push_back(run->accuracy);
  }
  return largest_passing_level(levels, acc);
}

namespace {

// Latest fingerprint per endpoint.
std::vector<Fingerprint> latest_fingerprints(const std::vector<Fingerprint>& all) {
  std::map<std::string, const Fingerprint*> latest;
  for (const auto& fp : all) {
    auto& slot = latest[fp.endpoint.key()];
    if (!slot || fp.capture_time >= slot->capture_time) slot = &fp;
  }
  std::vector<Fingerprint> out;
  for (const auto& [_, fp] : latest) out.push_back(*fp);
  return out;
}

std::vector<std::string> cohort_models(const Registry& registry) {
  std::set<std::string> models;
  for (const auto& e : registry.endpoints()) models.insert(e.id.model);
  return {models.begin(), models.end()};
}

}  // namespace

Snapshot derive(const Registry& registry, Snapshot raw, const PipelineConfig& config) {
  config.validate();
  Snapshot out = std::move(raw);
  out.registry_hash = registry.hash();
  out.settings = config.to_settings();
  out.latency_summaries.clear();
  out.fidelity.clear();
  out.energy_estimates.clear();
  out.composite_scores.clear();
  out.headline.clear();
  const Timestamp as_of = out.as_of;
  const auto window_len = std::chrono::microseconds{
      static_cast<std::int64_t>(std::llround(config.window_hours * 3600e6))};
  const TimeWindow window{as_of - window_len, as_of + std::chrono::microseconds{1}};

  // Latency summaries per (endpoint, conditions) over the window.
  std::map<std::pair<std::string, std::string>, std::vector<ProbeRecord>> groups;
  for (const auto& p : out.probe_records) {
    if (window.contains(p.request_time)) groups[{p.endpoint.key(), p.conditions.key()}].push_back(p);
  }
  for (const auto& [_, records] : groups) out.latency_summaries.push_back(summarize(records));

  // Energy from the default-condition speed.
  std::map<std::string, double> speed;
  for (const auto& s : out.latency_summaries) {
    if (s.conditions == config.conditions && s.has_latency() && s.output_speed > 0.0) {
      speed[s.endpoint.key()] = s.output_speed;
    }
  }
  for (const auto& e : registry.endpoints()) {
    const auto it = speed.find(e.id.key());
    if (it == speed.end()) continue;
    out.energy_estimates.push_back(estimate_energy(registry, e.id, it->second, {}, as_of));
  }

  // Fidelity against each cohort's reference.
  const auto fps = latest_fingerprints(out.fingerprints);
  for (const auto& model : cohort_models(registry)) {
    const auto choice = select_reference(registry, model, fps);
    if (!choice) continue;
    const Fingerprint* ref = nullptr;
    for (const auto& fp : fps) {
      if (fp.endpoint == choice->endpoint) ref = &fp;
    }
    for (const auto& fp : fps) {
      if (fp.endpoint.model != model) continue;
      auto r = fidelity(fp, *ref, config.fidelity_z, !choice->second_tier);
      r.computed_at = as_of;
      out.fidelity.push_back(r);
    }
  }

  // Headline metrics.
  const auto& price_preset = registry.preset(config.price_preset);
  for (const auto& est : out.energy_estimates) {
    const auto runs = latest_runs(out.eval_runs, est.endpoint);
    const auto it = runs.find(config.headline_suite);
    if (it == runs.end()) continue;
    const double p = blended_price(registry.endpoint(est.endpoint), price_preset, config.cache_hit) / 1e6;
    auto h = headline(est.j_per_token, p, it->second);
    h.computed_at = as_of;
    out.headline.push_back(h);
  }

  // Composite scores for every preset, full registry and per cohort.
  Leaderboard board(registry, out);
  std::vector<std::string> scopes = {"full"};
  for (const auto& m : cohort_models(registry)) scopes.push_back("cohort:" + m);
  for (const auto& preset : registry.presets()) {
    for (const auto& scope : scopes) {
      std::vector<CompositeScore> scores;
      try {
        scores = board.rank(preset, scope);
      } catch (const ValidationError&) {
        continue;  // a scoped endpoint lacks a factor; the scope is left unscored
      }
      for (auto& s : scores) {
        s.computed_at = as_of;
        out.composite_scores.push_back(std::move(s));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Leaderboard::Leaderboard(Registry registry, Snapshot snapshot)
    : registry_(std::move(registry)),
      snapshot_(std::move(snapshot)),
      config_(PipelineConfig::from_settings(snapshot_.settings)) {
  for (const auto& e : registry_.endpoints()) {
    EndpointMeasures m;
    m.endpoint = e.id;
    m.latest_runs = latest_runs(snapshot_.eval_runs, e.id);
    std::vector<EvalRun> quality_runs;
    for (const auto& [suite, run] : m.latest_runs) quality_runs.push_back(run);
    bool complete = true;
    for (const auto& suite : config_.quality_suites) complete = complete && m.latest_runs.count(suite);
    if (complete) m.quality = quality_composite(quality_runs, config_.weights());
    m.effective_context = effective_context_from_runs(snapshot_.eval_runs, e.id, config_.context_suite);
    measures_.emplace(e.id.key(), std::move(m));
  }
  auto attach = [&](const auto& records, auto member) {
    for (const auto& r : records) {
      const auto it = measures_.find(r.endpoint.key());
      if (it != measures_.end()) it->second.*member = r;
    }
  };
  for (const auto& s : snapshot_.latency_summaries) {
    if (!(s.conditions == config_.conditions)) continue;
    const auto it = measures_.find(s.endpoint.key());
    if (it != measures_.end()) it->second.latency = s;
  }
  attach(snapshot_.fidelity, &EndpointMeasures::fidelity);
  attach(snapshot_.energy_estimates, &EndpointMeasures::energy);
  attach(snapshot_.headline, &EndpointMeasures::headline);
}

const EndpointMeasures* Leaderboard::measures(const EndpointId& id) const {
  const auto it = measures_.find(id.key());
  return it == measures_.end() ? nullptr : &it->second;
}

std::vector<EndpointFactors> Leaderboard::factors() const {
  std::vector<EndpointFactors> out;
  out.reserve(measures_.size());
  for (const auto& [_, m] : measures_) out.push_back(m.factors(config_.use_ttfv));
  return out;
}

std::vector<CompositeScore> Leaderboard::rank(const WorkloadPreset& preset,
                                              const std::string& scope) const {
  const auto f = factors();
  return rank_endpoints(registry_, f, preset, scope, config_.cache_hit);
}

std::vector<CompositeScore> Leaderboard::rank(const std::string& preset,
                                              const std::string& scope) const {
  return rank(registry_.preset(preset), scope);
}

// ---------------------------------------------------------------------------

Snapshot simulate(const Registry& registry, const SimFleet& fleet, const PipelineConfig& config,
                  const SimulationOptions& options) {
  config.validate();
  if (options.days < 1) throw ValidationError("simulate: days must be >= 1");
  std::unique_ptr<Store> store =
      options.store_dir ? std::make_unique<Store>(*options.store_dir) : std::make_unique<Store>();

  std::vector<EndpointId> served;
  for (const auto& e : registry.endpoints()) {
    try {
      fleet.spec(e.id);
      served.push_back(e.id);
    } catch (const NotFoundError&) {
    }
  }
  if (served.empty()) throw ValidationError("simulate: the fleet serves no registry endpoint");

  const Timestamp end = options.start + std::chrono::days{options.days};
  ProbePlan plan;
  plan.cadence_seconds = options.cadence_seconds;
  plan.start = options.start;
  plan.end = end;
  plan.rotation = {config.conditions};
  plan.rotation_seed = options.seed;
  plan.endpoints = served;
  schedule_probes(registry, fleet, plan, *store);

  // Daily evals and the context sweep run in the final two hours.
  std::vector<std::vector<EvalTask>> suites;
  for (const auto& suite : config.quality_suites) {
    SyntheticSuiteSpec spec;
    spec.suite = suite;
    spec.n_tasks = options.tasks_per_suite;
    spec.seed = options.seed;
    spec.is_reasoning = std::find(config.reasoning_suites.begin(), config.reasoning_suites.end(),
                                  suite) != config.reasoning_suites.end();
    suites.push_back(make_synthetic_suite(spec));
  }
  std::map<std::int64_t, std::vector<EvalTask>> context_tasks;
  for (const auto level : options.context_levels) {
    SyntheticSuiteSpec spec;
    spec.suite = config.context_suite;
    spec.n_tasks = options.tasks_per_context_level;
    spec.seed = options.seed;
    spec.context_length = level;
    context_tasks[level] = make_synthetic_suite(spec);
  }
  const double eval_start = seconds_since_epoch(end - std::chrono::hours{2});
  for (const auto& id : served) {
    const auto& ep = registry.endpoint(id);
    EvalOptions opts;
    opts.issued_at = eval_start;
    opts.parallelism = 4;
    for (const auto& tasks : suites) {
      try {
        const auto run = run_eval_suite(fleet, ep, tasks, opts);
        store->append(run);
      } catch (const Error&) {
        // every task failed; the endpoint simply has no run for this suite
      }
    }
    if (!options.context_levels.empty()) {
      try {
        const auto result = effective_context(
            fleet, ep, [&](std::int64_t level) { return context_tasks.at(level); },
            options.context_levels, opts);
        for (const auto& run : result.runs) store->append(run);
      } catch (const Error&) {
      }
    }
  }

  const Timestamp capture = end - std::chrono::hours{1};
  for (const auto& id : served) {
    if (!fleet.supports_logprobs(id)) continue;
    try {
      store->append(capture_fingerprint(fleet, id, options.refset, capture));
    } catch (const Error&) {
    }
  }

  auto raw = store->snapshot(options.version, end, registry);
  return derive(registry, std::move(raw), config);
}

}  // namespace epbench
