// SPDX-License-Identifier: Apache-2.0
#include "epbench/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "epbench/common.hpp"
#include "epbench/csv.hpp"

namespace epbench {

namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;
constexpr std::uint64_t kAnswerSalt = 0x616e73776572ULL;
constexpr std::uint64_t kTimingSalt = 0x74696d696e67ULL;

bool by_prob_desc(const TokenProb& a, const TokenProb& b) {
  if (a.prob != b.prob) return a.prob > b.prob;
  return a.token < b.token;
}

}  // namespace

void SimEndpointSpec::validate() const {
  const std::string who = "sim spec '" + endpoint_id.key() + "': ";
  if (!(ttft_median > 0.0)) throw ValidationError(who + "ttft_median must be > 0");
  if (!(ttft_log_sigma >= 0.0)) throw ValidationError(who + "ttft_log_sigma must be >= 0");
  if (!(tokens_per_sec > 0.0)) throw ValidationError(who + "tokens_per_sec must be > 0");
  if (!(jitter_cv >= 0.0)) throw ValidationError(who + "jitter_cv must be >= 0");
  if (!(error_rate >= 0.0 && error_rate <= 1.0)) {
    throw ValidationError(who + "error_rate must be in [0,1]");
  }
  if (!(perturbation_epsilon >= 0.0 && perturbation_epsilon <= 1.0)) {
    throw ValidationError(who + "perturbation_epsilon must be in [0,1]");
  }
  if (!(accuracy_penalty >= 0.0 && accuracy_penalty < 1.0)) {
    throw ValidationError(who + "accuracy_penalty must be in [0,1)");
  }
  if (thinking_tokens < 0) throw ValidationError(who + "thinking_tokens must be >= 0");
  if (context_cliff < 0) throw ValidationError(who + "context_cliff must be >= 0");
}

double FamilyProfile::success(std::string_view suite) const {
  const auto it = suite_success.find(suite);
  return it == suite_success.end() ? base_success : it->second;
}

SimFleet::SimFleet(std::vector<SimEndpointSpec> specs, std::vector<FamilyProfile> families,
                   SimOptions options)
    : specs_(std::move(specs)), options_(options) {
  if (options_.support_size < 2 || options_.support_size > options_.vocab_size) {
    throw ValidationError("sim support_size must be in [2, vocab_size]");
  }
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    specs_[i].validate();
    if (!index_.emplace(specs_[i].endpoint_id.key(), i).second) {
      throw ValidationError("duplicate sim endpoint '" + specs_[i].endpoint_id.key() + "'");
    }
  }
  for (auto& f : families) {
    const std::string model = f.model;
    families_.emplace(model, std::move(f));
  }
}

SimFleet spawn_fleet(std::vector<SimEndpointSpec> specs, std::vector<FamilyProfile> families,
                     SimOptions options) {
  return SimFleet(std::move(specs), std::move(families), options);
}

const SimEndpointSpec& SimFleet::spec(const EndpointId& endpoint) const {
  const auto it = index_.find(endpoint.key());
  if (it == index_.end()) throw NotFoundError("unknown endpoint '" + endpoint.key() + "'");
  return specs_[it->second];
}

const FamilyProfile& SimFleet::family(std::string_view model) const {
  const auto it = families_.find(model);
  return it == families_.end() ? default_family_ : it->second;
}

bool SimFleet::supports_logprobs(const EndpointId& endpoint) const {
  return spec(endpoint).supports_logprobs;
}

std::vector<TokenProb> SimFleet::reference_at(std::uint64_t model_hash,
                                              std::uint64_t prompt_hash, int position) const {
  Rng rng(mix64(model_hash, mix64(prompt_hash, static_cast<std::uint64_t>(position))));
  const int n = options_.support_size;
  std::vector<TokenProb> dist;
  dist.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(dist.size()) < n) {
    const auto tok = static_cast<std::int32_t>(rng.index(static_cast<std::size_t>(options_.vocab_size)));
    const bool dup = std::any_of(dist.begin(), dist.end(),
                                 [&](const TokenProb& t) { return t.token == tok; });
    if (!dup) dist.push_back({tok, 0.0});
  }
  double total = 0.0;
  for (auto& t : dist) {
    t.prob = std::exp(1.5 * rng.normal());
    total += t.prob;
  }
  for (auto& t : dist) t.prob /= total;
  std::sort(dist.begin(), dist.end(), by_prob_desc);
  return dist;
}

std::vector<TokenProb> SimFleet::mixed_at(const SimEndpointSpec& spec, std::uint64_t model_hash,
                                          std::uint64_t prompt_hash, int position) const {
  auto dist = reference_at(model_hash, prompt_hash, position);
  const double eps = spec.perturbation_epsilon;
  if (eps == 0.0) return dist;
  Rng noise(mix64(spec.seed ^ kNoiseSalt, mix64(prompt_hash, static_cast<std::uint64_t>(position))));
  std::vector<double> w(dist.size());
  double total = 0.0;
  // The noise distribution is a random reweighting of the reference.
  for (std::size_t i = 0; i < dist.size(); ++i) {
    w[i] = dist[i].prob * 2.0 * (1.0 - noise.uniform());
    total += w[i];
  }
  for (std::size_t i = 0; i < dist.size(); ++i) {
    dist[i].prob = (1.0 - eps) * dist[i].prob + eps * (w[i] / total);
  }
  std::sort(dist.begin(), dist.end(), by_prob_desc);
  return dist;
}

std::vector<TokenProb> SimFleet::reference_distribution(std::string_view model,
                                                        std::string_view prompt,
                                                        int position) const {
  return reference_at(hash64(model), hash64(prompt), position);
}

std::vector<TokenProb> SimFleet::endpoint_distribution(const EndpointId& endpoint,
                                                       std::string_view prompt,
                                                       int position) const {
  const auto& s = spec(endpoint);
  return mixed_at(s, hash64(s.endpoint_id.model), hash64(prompt), position);
}

void SimFleet::stream(const EndpointId& endpoint, const StreamRequest& request,
                      const StreamSink& sink) const {
  const SimEndpointSpec& s = spec(endpoint);
  if (request.temperature != 0.0) {
    throw ValidationError("simulated endpoints support temperature 0 only");
  }
  if (request.max_tokens < 1) throw ValidationError("max_tokens must be >= 1");

  const std::uint64_t prompt_hash = hash64(request.prompt);
  const std::uint64_t model_hash = hash64(s.endpoint_id.model);
  Rng rng(mix64(mix64(s.seed ^ kTimingSalt, prompt_hash), request.seed));

  const auto wall_start = std::chrono::steady_clock::now();
  auto emit = [&](const StreamEvent& ev) {
    if (options_.real_time) {
      const auto offset = std::chrono::duration<double>(ev.time - request.issued_at);
      std::this_thread::sleep_until(
          wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset));
    }
    return sink(ev);
  };

  double t = request.issued_at + s.ttft_median * std::exp(s.ttft_log_sigma * rng.normal());
  if (rng.uniform() < s.error_rate) {
    StreamEvent err;
    err.kind = EventKind::Error;
    err.time = t;
    err.http_status = 503;
    err.text = "service unavailable";
    emit(err);
    return;
  }

  // Decide content: synthetic tasks get an answer at the end; anything else
  // streams until max_tokens.
  const auto task = solve_task(request.prompt);
  int visible = 0;
  std::string final_text;
  if (task) {
    const std::int64_t input_tokens =
        request.input_tokens > 0 ? request.input_tokens : count_tokens(request.prompt);
    double p = family(s.endpoint_id.model).success(task->suite) - s.accuracy_penalty;
    if (s.context_cliff > 0 && input_tokens > s.context_cliff) p *= 0.5;
    p = std::clamp(p, 0.0, 1.0);
    Rng answer_rng(mix64(s.seed ^ kAnswerSalt, prompt_hash));
    const bool correct = answer_rng.uniform() < p;
    final_text = correct ? task->answer : task->answer + "0";
    const int base = family(s.endpoint_id.model).answer_tokens;
    visible = std::max(1, static_cast<int>(std::lround(base * (0.9 + 0.2 * rng.uniform()))));
  } else {
    visible = std::max(0, request.max_tokens - s.thinking_tokens);
  }
  const int thinking = std::min(s.thinking_tokens, request.max_tokens);
  const int total = std::min(request.max_tokens, thinking + visible);

  const double mean_gap = 1.0 / s.tokens_per_sec;
  for (int pos = 0; pos < total; ++pos) {
    if (pos > 0) t += rng.lognormal_mean_cv(mean_gap, s.jitter_cv);
    StreamEvent ev;
    ev.kind = EventKind::Token;
    ev.time = t;
    ev.thinking = pos < thinking;
    const bool need_dist = request.logprobs_top_k > 0 ||
                           pos >= static_cast<int>(request.forced_tokens.size());
    std::vector<TokenProb> dist;
    if (need_dist) dist = mixed_at(s, model_hash, prompt_hash, pos);
    ev.token = pos < static_cast<int>(request.forced_tokens.size()) ? request.forced_tokens[pos]
                                                                     : dist.front().token;
    if (request.logprobs_top_k > 0) {
      const auto k = std::min<std::size_t>(dist.size(), static_cast<std::size_t>(request.logprobs_top_k));
      ev.top_logprobs.reserve(k);
      for (std::size_t i = 0; i < k; ++i) ev.top_logprobs.push_back({dist[i].token, std::log(dist[i].prob)});
    }
    const bool last_visible = task && pos == thinking + visible - 1;
    if (last_visible) {
      ev.text = final_text;
    } else {
      ev.text = (ev.thinking ? "t" : "w") + std::to_string(ev.token);
    }
    if (!emit(ev)) return;
  }
  StreamEvent done;
  done.kind = EventKind::Done;
  done.time = t + rng.lognormal_mean_cv(mean_gap, s.jitter_cv);
  emit(done);
}

std::vector<StreamEvent> serve_stream(const EndpointClient& client, const EndpointId& endpoint,
                                      const StreamRequest& request) {
  std::vector<StreamEvent> events;
  client.stream(endpoint, request, [&](const StreamEvent& ev) {
    events.push_back(ev);
    return true;
  });
  return events;
}

// ---------------------------------------------------------------------------

std::optional<SolvedTask> solve_task(std::string_view prompt) {
  constexpr std::string_view kTag = "[suite:";
  if (prompt.substr(0, kTag.size()) != kTag) return std::nullopt;
  const auto close = prompt.find(']');
  if (close == std::string_view::npos) return std::nullopt;
  SolvedTask out;
  out.suite = std::string(prompt.substr(kTag.size(), close - kTag.size()));

  if (const auto at = prompt.find("Compute "); at != std::string_view::npos) {
    long long a = 0, b = 0;
    char op = 0;
    const std::string expr(prompt.substr(at + 8, 64));
    if (std::sscanf(expr.c_str(), "%lld %c %lld", &a, &op, &b) != 3) return std::nullopt;
    long long r = 0;
    switch (op) {
      case '+': r = a + b; break;
      case '-': r = a - b; break;
      case '*': r = a * b; break;
      default: return std::nullopt;
    }
    out.answer = std::to_string(r);
    return out;
  }
  constexpr std::string_view kQuestion = "Question: value of ";
  if (const auto at = prompt.rfind(kQuestion); at != std::string_view::npos) {
    const auto key_start = at + kQuestion.size();
    const auto key_end = prompt.find(' ', key_start);
    const std::string needle = " " + std::string(prompt.substr(key_start, key_end - key_start)) + " = ";
    const auto def = prompt.find(needle);
    if (def == std::string_view::npos || def > at) return std::nullopt;
    const auto v_start = def + needle.size();
    const auto v_end = prompt.find(' ', v_start);
    out.answer = std::string(prompt.substr(v_start, v_end - v_start));
    return out;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kFleetHeader = {
    "provider",       "model",          "sku",          "precision",
    "decoding",       "region",         "ttft_median",  "ttft_log_sigma",
    "tokens_per_sec", "jitter_cv",      "error_rate",   "perturbation_epsilon",
    "accuracy_penalty", "seed",         "thinking_tokens", "context_cliff",
    "supports_logprobs"};
const std::vector<std::string> kFamilyHeader = {"model", "suite", "base_success", "answer_tokens"};

}  // namespace

std::vector<SimEndpointSpec> load_fleet_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  auto get = [&](std::size_t r, std::string_view col, std::string_view fallback) -> std::string {
    return t.has_column(col) ? t.at(r, col) : std::string(fallback);
  };
  std::vector<SimEndpointSpec> specs;
  for (std::size_t r = 0; r < t.size(); ++r) {
    try {
      SimEndpointSpec s;
      s.endpoint_id = EndpointId{t.at(r, "provider"), t.at(r, "model"), t.at(r, "sku"),
                                 parse_precision(t.at(r, "precision")),
                                 parse_decoding(t.at(r, "decoding")), t.at(r, "region")};
      s.ttft_median = parse_number(t.at(r, "ttft_median"));
      s.ttft_log_sigma = parse_number(t.at(r, "ttft_log_sigma"));
      s.tokens_per_sec = parse_number(t.at(r, "tokens_per_sec"));
      s.jitter_cv = parse_number(t.at(r, "jitter_cv"));
      s.error_rate = parse_number(t.at(r, "error_rate"));
      s.perturbation_epsilon = parse_number(t.at(r, "perturbation_epsilon"));
      s.accuracy_penalty = parse_number(t.at(r, "accuracy_penalty"));
      s.seed = static_cast<std::uint64_t>(parse_int(t.at(r, "seed")));
      s.thinking_tokens = static_cast<int>(parse_int(get(r, "thinking_tokens", "0")));
      s.context_cliff = parse_int(get(r, "context_cliff", "0"));
      s.supports_logprobs = parse_bool(get(r, "supports_logprobs", "true"));
      specs.push_back(std::move(s));
    } catch (const ParseError& e) {
      throw ParseError(t.source + " line " + std::to_string(r + 2) + ": " + e.what());
    }
  }
  return specs;
}

void save_fleet_csv(const std::filesystem::path& path, const std::vector<SimEndpointSpec>& specs) {
  csv::Table t(kFleetHeader);
  for (const auto& s : specs) {
    auto row = endpoint_fields(s.endpoint_id);
    row.insert(row.end(),
               {format_number(s.ttft_median), format_number(s.ttft_log_sigma),
                format_number(s.tokens_per_sec), format_number(s.jitter_cv),
                format_number(s.error_rate), format_number(s.perturbation_epsilon),
                format_number(s.accuracy_penalty), std::to_string(static_cast<std::int64_t>(s.seed)),
                std::to_string(s.thinking_tokens), std::to_string(s.context_cliff),
                s.supports_logprobs ? "true" : "false"});
    t.add_row(std::move(row));
  }
  csv::write(path, t);
}

std::vector<FamilyProfile> load_families_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  t.expect_header(kFamilyHeader);
  std::map<std::string, FamilyProfile> by_model;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const auto& row = t.rows()[r];
    auto& f = by_model[row[0]];
    f.model = row[0];
    const double success = parse_number(row[2]);
    if (!(success >= 0.0 && success <= 1.0)) {
      throw ValidationError(t.source + " line " + std::to_string(r + 2) +
                            ": base_success must be in [0,1]");
    }
    if (row[1] == "*") {
      f.base_success = success;
      f.answer_tokens = static_cast<int>(parse_int(row[3]));
    } else {
      f.suite_success[row[1]] = success;
    }
  }
  std::vector<FamilyProfile> out;
  for (auto& [_, f] : by_model) out.push_back(std::move(f));
  return out;
}

void save_families_csv(const std::filesystem::path& path,
                       const std::vector<FamilyProfile>& families) {
  csv::Table t(kFamilyHeader);
  for (const auto& f : families) {
    t.add_row({f.model, "*", format_number(f.base_success), std::to_string(f.answer_tokens)});
    for (const auto& [suite, p] : f.suite_success) {
      t.add_row({f.model, suite, format_number(p), std::to_string(f.answer_tokens)});
    }
  }
  csv::write(path, t);
}

}  // namespace epbench
