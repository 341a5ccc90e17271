// SPDX-License-Identifier: Apache-2.0
#include "epbench/service.hpp"

#include <httplib.h>

#include <cmath>
#include <json.hpp>

#include "epbench/analysis.hpp"

namespace epbench {

namespace {

using nlohmann::json;

struct HttpError {
  int status;
  std::string message;
};

ApiResponse reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const EndpointId& id) {
  return {{"provider", id.provider}, {"model", id.model},
          {"sku", id.sku},           {"precision", std::string(to_string(id.precision))},
          {"decoding", std::string(to_string(id.decoding))},
          {"region", id.region}};
}

json to_json(const FactorValues& v) {
  json out = json::object();
  for (const auto f : kFactors) out[std::string(to_string(f))] = number(v[f]);
  return out;
}

json to_json(const ProbeConditions& c) {
  return {{"input_length", c.input_length}, {"concurrency", c.concurrency}, {"region", c.region}};
}

json to_json(const LatencySummary& s) {
  return {{"conditions", to_json(s.conditions)},
          {"window_start", format_timestamp(s.window.start)},
          {"window_end", format_timestamp(s.window.end)},
          {"ttft_p50", number(s.ttft_p50)},
          {"ttft_p95", number(s.ttft_p95)},
          {"ttft_p99", number(s.ttft_p99)},
          {"ttfv_p50", s.ttfv_p50 ? number(*s.ttfv_p50) : json(nullptr)},
          {"output_speed", number(s.output_speed)},
          {"jitter", number(s.jitter)},
          {"completion_rate", s.completion_rate},
          {"error_rate", s.error_rate},
          {"n_probes", s.n_probes}};
}

json to_json(const EvalRun& r) {
  return {{"suite", r.suite},
          {"window_start", format_timestamp(r.window.start)},
          {"window_end", format_timestamp(r.window.end)},
          {"accuracy", r.accuracy},
          {"tokens_to_solution", number(r.tokens_to_solution)},
          {"input_tokens", r.input_tokens},
          {"output_tokens", r.output_tokens},
          {"thinking_tokens", r.thinking_tokens},
          {"wall_clock", r.wall_clock},
          {"dollar_cost", r.dollar_cost},
          {"n_tasks", r.n_tasks},
          {"n_solved", r.n_solved},
          {"eval_errors", r.eval_errors},
          {"context_length", r.context_length}};
}

json to_json(const FidelityResult& r) {
  return {{"endpoint", to_json(r.endpoint)},
          {"reference_endpoint", to_json(r.reference_endpoint)},
          {"kl_sym", r.kl_sym},
          {"f", r.f},
          {"flag", std::string(to_string(r.flag))},
          {"second_tier", r.second_tier}};
}

json to_json(const EnergyEstimate& e) {
  const auto& a = e.assumptions;
  return {{"j_per_token", e.j_per_token},
          {"kwh_per_mtok", e.kwh_per_mtok},
          {"gco2_per_mtok", e.gco2_per_mtok},
          {"throughput_used", e.throughput_used},
          {"sharing_factor", e.sharing_factor},
          {"assumptions",
           {{"utilization", a.utilization},
            {"pue", a.pue},
            {"sparsity", a.sparsity},
            {"utilization_source", std::string(to_string(a.utilization_source))},
            {"pue_source", std::string(to_string(a.pue_source))},
            {"sparsity_source", std::string(to_string(a.sparsity_source))}}}};
}

json to_json(const HeadlineMetrics& h) {
  return {{"j_ca", number(h.j_ca)},
          {"c_ca", number(h.c_ca)},
          {"j_per_token", h.j_per_token},
          {"p_per_token", h.p_per_token},
          {"tokens_to_solution", number(h.tokens_to_solution)},
          {"accuracy", h.accuracy}};
}

json to_json(const WorkloadPreset& p) {
  return {{"name", p.name},
          {"input_ratio", p.input_ratio},
          {"output_ratio", p.output_ratio},
          {"weights", to_json(p.weights)}};
}

json ranking(const Leaderboard& board, const WorkloadPreset& preset, const std::string& scope) {
  const auto scores = board.rank(preset, scope);
  json entries = json::array();
  for (const auto& s : scores) {
    const auto* m = board.measures(s.endpoint);
    json e = {{"endpoint", to_json(s.endpoint)},
              {"rank", s.rank},
              {"score", s.score},
              {"normalized", to_json(s.normalized)},
              {"raw", to_json(s.raw)},
              {"j_ca", nullptr},
              {"c_ca", nullptr},
              {"fidelity_flag", nullptr}};
    if (m && m->headline) {
      e["j_ca"] = number(m->headline->j_ca);
      e["c_ca"] = number(m->headline->c_ca);
    }
    if (m && m->fidelity) e["fidelity_flag"] = std::string(to_string(m->fidelity->flag));
    entries.push_back(std::move(e));
  }
  return {{"version", board.snapshot().version},
          {"preset", to_json(preset)},
          {"scope", scope},
          {"entries", std::move(entries)}};
}

json endpoint_detail(const Leaderboard& board, const EndpointId& id) {
  const auto& ep = board.registry().endpoint(id);
  const auto* m = board.measures(id);
  json latency = json::array();
  for (const auto& s : board.snapshot().latency_summaries) {
    if (s.endpoint == id) latency.push_back(to_json(s));
  }
  json runs = json::array();
  for (const auto& r : board.snapshot().eval_runs) {
    if (r.endpoint == id) runs.push_back(to_json(r));
  }
  const auto f = m->factors(board.config().use_ttfv);
  auto opt = [](const std::optional<double>& v) { return v ? number(*v) : json(nullptr); };
  return {
      {"endpoint", to_json(id)},
      {"price_input", ep.price_input},
      {"price_output", ep.price_output},
      {"price_cached_input", ep.cached_input_price()},
      {"batch_discount", ep.batch_discount},
      {"advertised_context", ep.advertised_context},
      {"hardware_class", ep.hardware_class},
      {"first_party", ep.first_party},
      {"disclosed_quantization", ep.disclosed_quantization},
      {"factors",
       {{"speed", opt(f.speed)},
        {"ttft", opt(f.ttft)},
        {"price", blended_price(ep, board.registry().preset(board.config().price_preset),
                                board.config().cache_hit)},
        {"quality", opt(f.quality)},
        {"reliability", opt(f.reliability)}}},
      {"latency", std::move(latency)},
      {"eval_runs", std::move(runs)},
      {"effective_context", m->effective_context ? json(*m->effective_context) : json(nullptr)},
      {"fidelity", m->fidelity ? to_json(*m->fidelity) : json(nullptr)},
      {"energy", m->energy ? to_json(*m->energy) : json(nullptr)},
      {"headline", m->headline ? to_json(*m->headline) : json(nullptr)},
  };
}

json within_model_json(const Leaderboard& board, const std::string& model) {
  const auto r = within_model(board, model);
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"axis", row.axis},
                    {"min", row.min},
                    {"max", row.max},
                    {"gap", number(row.gap)},
                    {"gap_kind", std::string(to_string(row.gap_kind))},
                    {"min_endpoint", to_json(EndpointId::parse(row.min_endpoint))},
                    {"max_endpoint", to_json(EndpointId::parse(row.max_endpoint))}});
  }
  return {{"model", r.model}, {"n_endpoints", r.n_endpoints}, {"rows", std::move(rows)}};
}

json fidelity_json(const Leaderboard& board, const std::optional<std::string>& only_model) {
  const auto& cfg = board.config();
  const std::vector<std::string> suites = {cfg.aime_suite, cfg.headline_suite, cfg.code_suite};
  json models = json::array();
  for (const auto& mf : board.registry().models()) {
    if (only_model && mf.id != *only_model) continue;
    json results = json::array();
    for (const auto& ep : board.registry().cohort(mf.id)) {
      const auto* m = board.measures(ep.id);
      if (m && m->fidelity) results.push_back(to_json(*m->fidelity));
    }
    if (results.empty() && !only_model) continue;
    json groups = json::array();
    for (const auto& g : fidelity_groups(board, mf.id, suites)) {
      json deltas = json::object();
      for (const auto& [suite, d] : g.eval_deltas) deltas[suite] = d;
      groups.push_back(
          {{"sku_class", g.sku_class}, {"n", g.n}, {"mean_f", g.mean_f}, {"eval_deltas", deltas}});
    }
    models.push_back({{"model", mf.id}, {"groups", std::move(groups)}, {"results", std::move(results)}});
  }
  if (only_model && models.empty()) throw NotFoundError("unknown model '" + *only_model + "'");
  return {{"version", board.snapshot().version}, {"models", std::move(models)}};
}

WorkloadPreset custom_preset(std::string_view body) {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception& e) {
    throw HttpError{422, std::string("body is not valid JSON: ") + e.what()};
  }
  if (!req.is_object()) throw HttpError{422, "body must be a JSON object"};
  WorkloadPreset p;
  p.name = "custom";
  try {
    const auto& w = req.at("weights");
    if (w.is_array()) {
      if (w.size() != kFactorCount) throw HttpError{422, "weights must have 5 values"};
      for (std::size_t i = 0; i < kFactorCount; ++i) p.weights.values[i] = w[i].get<double>();
    } else if (w.is_object()) {
      for (const auto f : kFactors) p.weights[f] = w.at(std::string(to_string(f))).get<double>();
    } else {
      throw HttpError{422, "weights must be an array or an object"};
    }
    p.input_ratio = req.at("input_ratio").get<double>();
    p.output_ratio = req.at("output_ratio").get<double>();
  } catch (const json::exception& e) {
    throw HttpError{422, std::string("invalid request: ") + e.what()};
  }
  for (const double w : p.weights.values) {
    if (!(w >= 0.0)) throw HttpError{422, "weights must be non-negative"};
  }
  if (std::abs(p.weights.sum() - 1.0) > 1e-6) {
    throw HttpError{422, "weights must sum to 1 (got " + format_number(p.weights.sum()) + ")"};
  }
  if (!(p.input_ratio > 0.0) || !(p.output_ratio > 0.0) || !std::isfinite(p.input_ratio) ||
      !std::isfinite(p.output_ratio)) {
    throw HttpError{422, "input_ratio and output_ratio must be positive"};
  }
  return p;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const auto j = path.find('/', i);
    parts.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
    i = j == std::string::npos ? path.size() : j;
  }
  return parts;
}

ApiResponse route(const Leaderboard* board, std::string_view method, std::string_view target,
                  std::string_view body) {
  const std::string t(target);
  const auto q = t.find('?');
  const auto parts = split_path(t.substr(0, q));
  httplib::Params params;
  if (q != std::string::npos) httplib::detail::parse_query_text(t.substr(q + 1), params);
  auto param = [&](const std::string& name) -> std::optional<std::string> {
    const auto it = params.find(name);
    if (it == params.end()) return std::nullopt;
    return it->second;
  };
  auto segment = [&](std::size_t i) { return httplib::detail::decode_url(parts[i], false); };
  auto need_board = [&]() -> const Leaderboard& {
    if (!board) throw HttpError{409, "no snapshot loaded"};
    return *board;
  };

  if (parts.empty() || parts[0] != "v1") throw HttpError{404, "no such route"};
  const bool get = method == "GET";
  const bool post = method == "POST";

  if (parts.size() == 2 && parts[1] == "health" && get) {
    if (!board) return reply(200, {{"status", "no_snapshot"}, {"version", nullptr}});
    return reply(200, {{"status", "ok"},
                       {"version", board->snapshot().version},
                       {"as_of", format_timestamp(board->snapshot().as_of)},
                       {"registry_hash", board->snapshot().registry_hash}});
  }
  if (parts.size() == 2 && parts[1] == "leaderboard" && get) {
    const auto& b = need_board();
    const auto preset_name = param("preset").value_or("chat");
    const auto scope = param("scope").value_or("full");
    if (!b.registry().has_preset(preset_name)) {
      throw HttpError{404, "unknown preset '" + preset_name + "'"};
    }
    return reply(200, ranking(b, b.registry().preset(preset_name), scope));
  }
  if (parts.size() == 3 && parts[1] == "endpoints" && get) {
    const auto& b = need_board();
    EndpointId id;
    try {
      id = EndpointId::parse(segment(2));
    } catch (const Error& e) {
      throw HttpError{404, e.what()};
    }
    if (!b.registry().find_endpoint(id)) throw HttpError{404, "unknown endpoint '" + id.key() + "'"};
    return reply(200, endpoint_detail(b, id));
  }
  if (parts.size() == 4 && parts[1] == "models" && parts[3] == "within-model" && get) {
    return reply(200, within_model_json(need_board(), segment(2)));
  }
  if (parts.size() == 2 && parts[1] == "fidelity" && get) {
    return reply(200, fidelity_json(need_board(), param("model")));
  }
  if (parts.size() == 2 && parts[1] == "presets" && get) {
    const auto& b = need_board();
    json out = json::array();
    for (const auto& p : b.registry().presets()) out.push_back(to_json(p));
    return reply(200, {{"presets", std::move(out)}});
  }
  if (parts.size() == 3 && parts[1] == "score" && parts[2] == "custom" && post) {
    const auto& b = need_board();
    const auto preset = custom_preset(body);
    std::string scope = "full";
    try {
      const auto req = json::parse(body);
      if (req.contains("scope")) scope = req.at("scope").get<std::string>();
    } catch (const json::exception& e) {
      throw HttpError{422, std::string("invalid scope: ") + e.what()};
    }
    return reply(200, ranking(b, preset, scope));
  }
  throw HttpError{404, "no such route"};
}

}  // namespace

void ApiService::load(std::shared_ptr<const Leaderboard> board) {
  std::lock_guard lock(mutex_);
  board_ = std::move(board);
}

std::shared_ptr<const Leaderboard> ApiService::current() const {
  std::lock_guard lock(mutex_);
  return board_;
}

ApiResponse ApiService::handle(std::string_view method, std::string_view target,
                               std::string_view body) const {
  const auto board = current();
  try {
    return route(board.get(), method, target, body);
  } catch (const HttpError& e) {
    return reply(e.status, {{"error", e.message}});
  } catch (const NotFoundError& e) {
    return reply(404, {{"error", e.what()}});
  } catch (const Error& e) {
    return reply(422, {{"error", e.what()}});
  }
}

std::shared_ptr<const Leaderboard> load_leaderboard(const std::filesystem::path& snapshot_dir) {
  auto loaded = import_snapshot(snapshot_dir);
  return std::make_shared<const Leaderboard>(std::move(loaded.registry), std::move(loaded.snapshot));
}

std::string endpoint_path_segment(const EndpointId& id) {
  return httplib::detail::encode_query_param(id.key());
}

void serve(ApiService& service, const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ValidationError("listen address must be host:port");
  const auto host = listen.substr(0, colon);
  const auto port = static_cast<int>(parse_int(listen.substr(colon + 1)));

  httplib::Server server;
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.target, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get(".*", forward);
  server.Post(".*", forward);
  if (!server.listen(host, port)) throw Error("cannot listen on " + listen);
}

}  // namespace epbench
