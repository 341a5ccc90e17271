// SPDX-License-Identifier: Apache-2.0
#include "epbench/probe.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>

#include "epbench/store.hpp"

namespace epbench {

void ProbeConditions::validate() const {
  if (input_length != 1000 && input_length != 10000 && input_length != 100000) {
    throw ValidationError("input_length must be one of 1000, 10000, 100000");
  }
  if (concurrency != 1 && concurrency != 10 && concurrency != 100) {
    throw ValidationError("concurrency must be one of 1, 10, 100");
  }
  if (region.empty()) throw ValidationError("probe region is empty");
}

std::string ProbeConditions::key() const {
  return std::to_string(input_length) + "/" + std::to_string(concurrency) + "/" + region;
}

ProbeConditions default_conditions() { return {10000, 1, "us-east"}; }

std::string_view to_string(ProbeStatus s) {
  switch (s) {
    case ProbeStatus::Ok: return "ok";
    case ProbeStatus::HttpError: return "http_error";
    case ProbeStatus::Timeout: return "timeout";
    case ProbeStatus::Truncated: return "truncated";
  }
  return "ok";
}

ProbeStatus parse_probe_status(std::string_view s) {
  if (s == "ok") return ProbeStatus::Ok;
  if (s == "http_error") return ProbeStatus::HttpError;
  if (s == "timeout") return ProbeStatus::Timeout;
  if (s == "truncated") return ProbeStatus::Truncated;
  throw ParseError("unknown probe status '" + std::string(s) + "'");
}

void ProbeRecord::validate() const {
  conditions.validate();
  const std::string who = "probe record for '" + endpoint.key() + "': ";
  if (!(ttft >= 0.0)) throw ValidationError(who + "ttft must be >= 0");
  if (ttft > total_time) throw ValidationError(who + "ttft exceeds total_time");
  if (ttfv && *ttfv < ttft) throw ValidationError(who + "ttfv precedes ttft");
  if (output_tokens < 0) throw ValidationError(who + "output_tokens must be >= 0");
  if (status == ProbeStatus::Ok && output_tokens >= 1 &&
      static_cast<std::size_t>(output_tokens) != inter_token_gaps.size() + 1) {
    throw ValidationError(who + "output_tokens must equal gap count + 1");
  }
  if (response_hash.size() != 64) throw ValidationError(who + "response_hash must be SHA-256 hex");
}

void LatencySummary::validate() const {
  const std::string who = "latency summary for '" + endpoint.key() + "': ";
  if (n_probes < 1) throw ValidationError(who + "n_probes must be >= 1");
  if (!(completion_rate >= 0.0 && completion_rate <= 1.0)) {
    throw ValidationError(who + "completion_rate must be in [0,1]");
  }
  if (std::abs(completion_rate + error_rate - 1.0) > 1e-9) {
    throw ValidationError(who + "completion_rate + error_rate must equal 1");
  }
  if (has_latency() && !(ttft_p50 <= ttft_p95 && ttft_p95 <= ttft_p99)) {
    throw ValidationError(who + "percentiles must be monotone");
  }
}

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("percentile of empty sample");
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

ProbeRecord run_probe(const EndpointClient& client, const EndpointId& endpoint,
                      const ProbeConditions& conditions, const std::string& prompt,
                      double deadline, const ProbeOptions& options) {
  ProbeRecord rec;
  rec.endpoint = endpoint;
  rec.conditions = conditions;
  rec.request_time = timestamp_from_seconds(options.issued_at);
  rec.prompt_set_day = options.prompt_set_day;

  StreamRequest req;
  req.prompt = prompt;
  req.input_tokens = conditions.input_length;
  req.max_tokens = options.max_tokens;
  req.seed = options.seed;
  req.issued_at = options.issued_at;

  const double t0 = options.issued_at;
  std::optional<double> first_time;
  std::optional<double> first_visible;
  std::optional<double> last_token;
  std::optional<double> done_time;
  std::optional<double> error_time;
  bool saw_thinking = false;
  bool timed_out = false;
  std::string body;

  try {
    client.stream(endpoint, req, [&](const StreamEvent& ev) {
      if (ev.time - t0 > deadline) {
        timed_out = true;
        return false;
      }
      switch (ev.kind) {
        case EventKind::Token:
          if (!first_time) first_time = ev.time;
          if (ev.thinking) saw_thinking = true;
          if (!ev.thinking && !first_visible) first_visible = ev.time;
          if (last_token) rec.inter_token_gaps.push_back(ev.time - *last_token);
          last_token = ev.time;
          ++rec.output_tokens;
          body += ev.text;
          break;
        case EventKind::Done:
          done_time = ev.time;
          return false;
        case EventKind::Error:
          error_time = ev.time;
          return false;
      }
      return true;
    });
  } catch (const std::exception&) {
    error_time = first_time.value_or(t0);
  }

  rec.response_hash = sha256_hex(body);
  if (error_time) {
    rec.status = ProbeStatus::HttpError;
    rec.ttft = (first_time ? *first_time : *error_time) - t0;
    rec.total_time = std::max(rec.ttft, *error_time - t0);
  } else if (timed_out) {
    rec.status = ProbeStatus::Timeout;
    rec.total_time = deadline;
    rec.ttft = first_time ? std::min(*first_time - t0, deadline) : deadline;
  } else if (!done_time) {
    rec.status = ProbeStatus::Truncated;
    rec.ttft = first_time ? *first_time - t0 : 0.0;
    rec.total_time = std::max(rec.ttft, last_token ? *last_token - t0 : 0.0);
  } else {
    rec.status = ProbeStatus::Ok;
    rec.ttft = (first_time ? *first_time : *done_time) - t0;
    rec.total_time = *done_time - t0;
    if (saw_thinking && first_visible) rec.ttfv = *first_visible - t0;
  }
  return rec;
}

LatencySummary summarize(std::span<const ProbeRecord> records) {
  if (records.empty()) throw ValidationError("summarize: no probe records");
  const auto& head = records.front();
  LatencySummary s;
  s.endpoint = head.endpoint;
  s.conditions = head.conditions;
  s.n_probes = static_cast<std::int64_t>(records.size());
  s.window = {head.request_time, head.request_time};

  std::vector<double> ttfts;
  std::vector<double> ttfvs;
  double speed_sum = 0.0;
  std::size_t speed_n = 0;
  double gap_sum = 0.0;
  double gap_sq = 0.0;
  std::size_t gap_n = 0;
  std::size_t ok = 0;
  for (const auto& r : records) {
    if (!(r.endpoint == head.endpoint) || !(r.conditions == head.conditions)) {
      throw ValidationError("summarize: records mix endpoints or conditions");
    }
    s.window.start = std::min(s.window.start, r.request_time);
    s.window.end = std::max(s.window.end, r.request_time);
    if (r.status != ProbeStatus::Ok) continue;
    ++ok;
    ttfts.push_back(r.ttft);
    if (r.ttfv) ttfvs.push_back(*r.ttfv);
    const double decode = r.total_time - r.ttft;
    if (decode > 0.0 && r.output_tokens > 0) {
      speed_sum += static_cast<double>(r.output_tokens) / decode;
      ++speed_n;
    }
    for (double g : r.inter_token_gaps) {
      gap_sum += g;
      gap_sq += g * g;
      ++gap_n;
    }
  }
  s.window.end += std::chrono::microseconds{1};
  s.completion_rate = static_cast<double>(ok) / static_cast<double>(records.size());
  s.error_rate = static_cast<double>(records.size() - ok) / static_cast<double>(records.size());

  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  if (ttfts.empty()) {
    s.ttft_p50 = s.ttft_p95 = s.ttft_p99 = kNaN;
    s.output_speed = kNaN;
    s.jitter = kNaN;
    return s;
  }
  std::sort(ttfts.begin(), ttfts.end());
  s.ttft_p50 = nearest_rank(ttfts, 0.50);
  s.ttft_p95 = nearest_rank(ttfts, 0.95);
  s.ttft_p99 = nearest_rank(ttfts, 0.99);
  if (!ttfvs.empty()) {
    std::sort(ttfvs.begin(), ttfvs.end());
    s.ttfv_p50 = nearest_rank(ttfvs, 0.50);
  }
  s.output_speed = speed_n ? speed_sum / static_cast<double>(speed_n) : kNaN;
  if (gap_n) {
    const double mean = gap_sum / static_cast<double>(gap_n);
    s.jitter = std::sqrt(std::max(0.0, gap_sq / static_cast<double>(gap_n) - mean * mean));
  }
  return s;
}

std::string make_prompt(std::int64_t tokens, std::uint64_t seed) {
  static const char* const kWords[] = {
      "the",     "endpoint", "serves",   "tokens",  "under",   "load",    "while",   "latency",
      "budget",  "grows",    "across",   "regions", "model",   "answer",  "prompt",  "context",
      "window",  "cache",    "stream",   "request", "reply",   "batch",   "queue",   "shard",
      "weights", "layer",    "vector",   "matrix",  "kernel",  "device",  "memory",  "bandwidth",
      "report",  "summary",  "analysis", "section", "figure",  "table",   "record",  "value",
      "market",  "price",    "energy",   "signal",  "network", "packet",  "router",  "server",
      "client",  "session",  "event",    "metric",  "sample",  "window",  "probe",   "suite",
      "task",    "result",   "score",    "rank",    "factor",  "weight",  "cohort",  "trace"};
  constexpr std::size_t kN = sizeof(kWords) / sizeof(kWords[0]);
  Rng rng(seed);
  std::string out;
  out.reserve(static_cast<std::size_t>(tokens) * 7);
  for (std::int64_t i = 0; i < tokens; ++i) {
    if (i) out += ' ';
    out += kWords[rng.index(kN)];
  }
  return out;
}

void ProbePlan::validate() const {
  if (!(cadence_seconds > 0.0)) throw ValidationError("probe cadence must be > 0");
  if (end < start) throw ValidationError("probe plan ends before it starts");
  if (rotation.empty()) throw ValidationError("probe plan has no conditions");
  for (const auto& c : rotation) c.validate();
  if (!(deadline > 0.0)) throw ValidationError("probe deadline must be > 0");
  if (max_tokens < 1) throw ValidationError("probe max_tokens must be >= 1");
}

std::size_t schedule_probes(const Registry& registry, const EndpointClient& client,
                            const ProbePlan& plan, Store& store) {
  plan.validate();
  std::vector<EndpointId> targets = plan.endpoints;
  if (targets.empty()) {
    for (const auto& e : registry.endpoints()) targets.push_back(e.id);
  }

  std::map<std::pair<int, std::int64_t>, std::string> prompts;
  const auto cadence = std::chrono::microseconds{
      static_cast<std::int64_t>(std::llround(plan.cadence_seconds * 1e6))};
  std::size_t appended = 0;
  std::uint64_t tick = 0;
  for (Timestamp t = plan.start; t < plan.end; t += cadence, ++tick) {
    const ProbeConditions& cond = plan.rotation[tick % plan.rotation.size()];
    const Date day = date_of(t);
    const int day_number = std::chrono::sys_days{day}.time_since_epoch().count();
    auto& prompt = prompts[{day_number, cond.input_length}];
    if (prompt.empty()) {
      prompt = make_prompt(cond.input_length,
                           mix64(mix64(plan.rotation_seed, static_cast<std::uint64_t>(day_number)),
                                 static_cast<std::uint64_t>(cond.input_length)));
    }
    for (const auto& endpoint : targets) {
      ProbeOptions opts;
      opts.issued_at = seconds_since_epoch(t);
      opts.max_tokens = plan.max_tokens;
      opts.prompt_set_day = day;
      const std::uint64_t base = mix64(mix64(plan.rotation_seed, tick), hash64(endpoint.key()));
      std::vector<ProbeRecord> batch(static_cast<std::size_t>(cond.concurrency));
      if (cond.concurrency == 1) {
        opts.seed = base;
        batch[0] = run_probe(client, endpoint, cond, prompt, plan.deadline, opts);
      } else {
        std::vector<std::future<ProbeRecord>> inflight;
        inflight.reserve(batch.size());
        for (int c = 0; c < cond.concurrency; ++c) {
          ProbeOptions o = opts;
          o.seed = mix64(base, static_cast<std::uint64_t>(c));
          inflight.push_back(std::async(std::launch::async, [&, o] {
            return run_probe(client, endpoint, cond, prompt, plan.deadline, o);
          }));
        }
        for (std::size_t c = 0; c < inflight.size(); ++c) batch[c] = inflight[c].get();
      }
      for (const auto& rec : batch) {
        store.append(rec);
        ++appended;
      }
    }
  }
  return appended;
}

}  // namespace epbench
