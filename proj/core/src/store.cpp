// SPDX-License-Identifier: Apache-2.0
#include "epbench/store.hpp"

#include <fstream>
#include <mutex>
#include <tuple>

#include <json.hpp>

namespace epbench {

namespace {

using Row = std::vector<std::string>;

std::vector<std::string> with_endpoint(std::initializer_list<const char*> rest) {
  std::vector<std::string> h = kEndpointColumns;
  h.insert(h.end(), rest.begin(), rest.end());
  return h;
}

std::string num(double v) { return format_number(v); }
std::string opt_num(const std::optional<double>& v) { return v ? format_number(*v) : ""; }
std::string boolean(bool b) { return b ? "true" : "false"; }

void append_conditions(Row& row, const ProbeConditions& c) {
  row.push_back(std::to_string(c.input_length));
  row.push_back(std::to_string(c.concurrency));
  row.push_back(c.region);
}

class Reader {
 public:
  Reader(const csv::Table& t, std::size_t row) : t_(t), row_(row) {}

  const std::string& str(std::string_view col) const { return t_.at(row_, col); }
  double number(std::string_view col) const { return parse_number(str(col)); }
  std::optional<double> opt_number(std::string_view col) const {
    const auto& s = str(col);
    if (s.empty()) return std::nullopt;
    return parse_number(s);
  }
  std::int64_t integer(std::string_view col) const { return parse_int(str(col)); }
  bool boolean(std::string_view col) const { return parse_bool(str(col)); }
  Timestamp time(std::string_view col) const { return parse_timestamp(str(col)); }
  EndpointId endpoint() const {
    return EndpointId{str("provider"), str("model"), str("sku"), parse_precision(str("precision")),
                      parse_decoding(str("decoding")), str("region")};
  }
  ProbeConditions conditions() const {
    ProbeConditions c;
    c.input_length = integer("input_length");
    c.concurrency = static_cast<int>(integer("concurrency"));
    c.region = str("probe_region");
    return c;
  }

 private:
  const csv::Table& t_;
  std::size_t row_;
};

template <class R, class F>
std::vector<R> parse_rows(const csv::Table& t, const std::vector<std::string>& header, F&& make) {
  t.expect_header(header);
  std::vector<R> out;
  out.reserve(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    try {
      out.push_back(make(Reader(t, r)));
    } catch (const Error& e) {
      throw ParseError(t.source + " line " + std::to_string(r + 2) + ": " + e.what());
    }
  }
  return out;
}

const std::vector<std::string> kProbeHeader = with_endpoint(
    {"input_length", "concurrency", "probe_region", "request_time", "ttft", "ttfv",
     "inter_token_gaps", "total_time", "output_tokens", "status", "response_hash",
     "prompt_set_day"});
const std::vector<std::string> kSummaryHeader = with_endpoint(
    {"input_length", "concurrency", "probe_region", "window_start", "window_end", "ttft_p50",
     "ttft_p95", "ttft_p99", "ttfv_p50", "output_speed", "jitter", "completion_rate",
     "error_rate", "n_probes"});
const std::vector<std::string> kEvalHeader = with_endpoint(
    {"suite", "window_start", "window_end", "accuracy", "tokens_to_solution", "input_tokens",
     "output_tokens", "thinking_tokens", "wall_clock", "dollar_cost", "n_tasks", "n_solved",
     "eval_errors", "context_length"});
const std::vector<std::string> kFingerprintHeader =
    with_endpoint({"refset_hash", "positions_per_prompt", "capture_time", "prompt_index",
                   "position", "token", "probability"});
const std::vector<std::string> kFidelityHeader = with_endpoint(
    {"reference_endpoint", "kl_sym", "f", "flag", "second_tier", "computed_at"});
const std::vector<std::string> kEnergyHeader = with_endpoint(
    {"j_per_token", "kwh_per_mtok", "gco2_per_mtok", "utilization", "pue", "sparsity",
     "sharing_factor", "throughput_used", "utilization_source", "pue_source", "sparsity_source",
     "computed_at"});
const std::vector<std::string> kCompositeHeader = with_endpoint(
    {"preset", "scope", "score", "rank", "s_norm", "t_norm", "p_norm", "q_norm", "r_norm",
     "speed", "ttft", "blended_price", "quality", "reliability", "computed_at"});
const std::vector<std::string> kHeadlineHeader =
    with_endpoint({"j_ca", "c_ca", "j_per_token", "p_per_token", "tokens_to_solution",
                   "accuracy", "computed_at"});

std::string join_gaps(const std::vector<double>& gaps) {
  std::string out;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (i) out += ';';
    out += format_number(gaps[i]);
  }
  return out;
}

std::vector<double> split_gaps(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(';', start);
    out.push_back(parse_number(std::string_view(s).substr(start, end - start)));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

namespace tables {

csv::Table probe_records(const std::vector<ProbeRecord>& v) {
  csv::Table t(kProbeHeader);
  for (const auto& r : v) {
    auto row = endpoint_fields(r.endpoint);
    append_conditions(row, r.conditions);
    row.insert(row.end(), {format_timestamp(r.request_time), num(r.ttft), opt_num(r.ttfv),
                           join_gaps(r.inter_token_gaps), num(r.total_time),
                           std::to_string(r.output_tokens), std::string(to_string(r.status)),
                           r.response_hash, format_date(r.prompt_set_day)});
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<ProbeRecord> parse_probe_records(const csv::Table& t) {
  return parse_rows<ProbeRecord>(t, kProbeHeader, [](const Reader& r) {
    ProbeRecord p;
    p.endpoint = r.endpoint();
    p.conditions = r.conditions();
    p.request_time = r.time("request_time");
    p.ttft = r.number("ttft");
    p.ttfv = r.opt_number("ttfv");
    p.inter_token_gaps = split_gaps(r.str("inter_token_gaps"));
    p.total_time = r.number("total_time");
    p.output_tokens = r.integer("output_tokens");
    p.status = parse_probe_status(r.str("status"));
    p.response_hash = r.str("response_hash");
    p.prompt_set_day = parse_date(r.str("prompt_set_day"));
    return p;
  });
}

csv::Table latency_summaries(const std::vector<LatencySummary>& v) {
  csv::Table t(kSummaryHeader);
  for (const auto& s : v) {
    auto row = endpoint_fields(s.endpoint);
    append_conditions(row, s.conditions);
    row.insert(row.end(), {format_timestamp(s.window.start), format_timestamp(s.window.end),
                           num(s.ttft_p50), num(s.ttft_p95), num(s.ttft_p99),
                           opt_num(s.ttfv_p50), num(s.output_speed), num(s.jitter),
                           num(s.completion_rate), num(s.error_rate),
                           std::to_string(s.n_probes)});
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<LatencySummary> parse_latency_summaries(const csv::Table& t) {
  return parse_rows<LatencySummary>(t, kSummaryHeader, [](const Reader& r) {
    LatencySummary s;
    s.endpoint = r.endpoint();
    s.conditions = r.conditions();
    s.window = {r.time("window_start"), r.time("window_end")};
    s.ttft_p50 = r.number("ttft_p50");
    s.ttft_p95 = r.number("ttft_p95");
    s.ttft_p99 = r.number("ttft_p99");
    s.ttfv_p50 = r.opt_number("ttfv_p50");
    s.output_speed = r.number("output_speed");
    s.jitter = r.number("jitter");
    s.completion_rate = r.number("completion_rate");
    s.error_rate = r.number("error_rate");
    s.n_probes = r.integer("n_probes");
    return s;
  });
}

csv::Table eval_runs(const std::vector<EvalRun>& v) {
  csv::Table t(kEvalHeader);
  for (const auto& e : v) {
    auto row = endpoint_fields(e.endpoint);
    row.insert(row.end(),
               {e.suite, format_timestamp(e.window.start), format_timestamp(e.window.end),
                num(e.accuracy), num(e.tokens_to_solution), std::to_string(e.input_tokens),
                std::to_string(e.output_tokens), std::to_string(e.thinking_tokens),
                num(e.wall_clock), num(e.dollar_cost), std::to_string(e.n_tasks),
                std::to_string(e.n_solved), std::to_string(e.eval_errors),
                std::to_string(e.context_length)});
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<EvalRun> parse_eval_runs(const csv::Table& t) {
  return parse_rows<EvalRun>(t, kEvalHeader, [](const Reader& r) {
    EvalRun e;
    e.endpoint = r.endpoint();
    e.suite = r.str("suite");
    e.window = {r.time("window_start"), r.time("window_end")};
    e.accuracy = r.number("accuracy");
    e.tokens_to_solution = r.number("tokens_to_solution");
    e.input_tokens = r.integer("input_tokens");
    e.output_tokens = r.integer("output_tokens");
    e.thinking_tokens = r.integer("thinking_tokens");
    e.wall_clock = r.number("wall_clock");
    e.dollar_cost = r.number("dollar_cost");
    e.n_tasks = r.integer("n_tasks");
    e.n_solved = r.integer("n_solved");
    e.eval_errors = r.integer("eval_errors");
    e.context_length = r.integer("context_length");
    return e;
  });
}

csv::Table fingerprints(const std::vector<Fingerprint>& v) {
  csv::Table t(kFingerprintHeader);
  for (const auto& fp : v) {
    const auto id = endpoint_fields(fp.endpoint);
    const auto k = static_cast<std::size_t>(fp.positions_per_prompt);
    for (std::size_t i = 0; i < fp.distributions.size(); ++i) {
      for (const auto& tp : fp.distributions[i]) {
        auto row = id;
        row.insert(row.end(), {fp.refset_hash, std::to_string(fp.positions_per_prompt),
                               format_timestamp(fp.capture_time), std::to_string(i / k),
                               std::to_string(i % k), std::to_string(tp.token), num(tp.prob)});
        t.add_row(std::move(row));
      }
    }
  }
  return t;
}

std::vector<Fingerprint> parse_fingerprints(const csv::Table& t) {
  t.expect_header(kFingerprintHeader);
  std::vector<Fingerprint> out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    try {
      const Reader rd(t, r);
      const auto id = rd.endpoint();
      const auto hash = rd.str("refset_hash");
      const auto at = rd.time("capture_time");
      if (out.empty() || !(out.back().endpoint == id) || out.back().refset_hash != hash ||
          out.back().capture_time != at) {
        Fingerprint fp;
        fp.endpoint = id;
        fp.refset_hash = hash;
        fp.positions_per_prompt = static_cast<int>(rd.integer("positions_per_prompt"));
        fp.capture_time = at;
        if (fp.positions_per_prompt < 1) throw ValidationError("positions_per_prompt < 1");
        out.push_back(std::move(fp));
      }
      auto& fp = out.back();
      const auto index = static_cast<std::size_t>(rd.integer("prompt_index")) *
                             static_cast<std::size_t>(fp.positions_per_prompt) +
                         static_cast<std::size_t>(rd.integer("position"));
      if (index >= fp.distributions.size()) fp.distributions.resize(index + 1);
      fp.distributions[index].push_back(
          {static_cast<std::int32_t>(rd.integer("token")), rd.number("probability")});
    } catch (const Error& e) {
      throw ParseError(t.source + " line " + std::to_string(r + 2) + ": " + e.what());
    }
  }
  for (auto& fp : out) {
    const auto k = static_cast<std::size_t>(fp.positions_per_prompt);
    fp.distributions.resize((fp.distributions.size() + k - 1) / k * k);
  }
  return out;
}

csv::Table fidelity(const std::vector<FidelityResult>& v) {
  csv::Table t(kFidelityHeader);
  for (const auto& f : v) {
    auto row = endpoint_fields(f.endpoint);
    row.insert(row.end(), {f.reference_endpoint.key(), num(f.kl_sym), num(f.f),
                           std::string(to_string(f.flag)), boolean(f.second_tier),
                           format_timestamp(f.computed_at)});
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<FidelityResult> parse_fidelity(const csv::Table& t) {
  return parse_rows<FidelityResult>(t, kFidelityHeader, [](const Reader& r) {
    FidelityResult f;
    f.endpoint = r.endpoint();
    f.reference_endpoint = EndpointId::parse(r.str("reference_endpoint"));
    f.kl_sym = r.number("kl_sym");
    f.f = r.number("f");
    f.flag = parse_fidelity_flag(r.str("flag"));
    f.second_tier = r.boolean("second_tier");
    f.computed_at = r.time("computed_at");
    return f;
  });
}

csv::Table energy_estimates(const std::vector<EnergyEstimate>& v) {
  csv::Table t(kEnergyHeader);
  for (const auto& e : v) {
    auto row = endpoint_fields(e.endpoint);
    const auto& a = e.assumptions;
    row.insert(row.end(),
               {num(e.j_per_token), num(e.kwh_per_mtok), num(e.gco2_per_mtok),
                num(a.utilization), num(a.pue), num(a.sparsity), num(e.sharing_factor),
                num(e.throughput_used), std::string(to_string(a.utilization_source)),
                std::string(to_string(a.pue_source)), std::string(to_string(a.sparsity_source)),
                format_timestamp(e.computed_at)});
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<EnergyEstimate> parse_energy_estimates(const csv::Table& t) {
  return parse_rows<EnergyEstimate>(t, kEnergyHeader, [](const Reader& r) {
    EnergyEstimate e;
    e.endpoint = r.endpoint();
    e.j_per_token = r.number("j_per_token");
    e.kwh_per_mtok = r.number("kwh_per_mtok");
    e.gco2_per_mtok = r.number("gco2_per_mtok");
    e.assumptions.utilization = r.number("utilization");
    e.assumptions.pue = r.number("pue");
    e.assumptions.sparsity = r.number("sparsity");
    e.sharing_factor = r.number("sharing_factor");
    e.throughput_used = r.number("throughput_used");
    e.assumptions.utilization_source = parse_provenance(r.str("utilization_source"));
    e.assumptions.pue_source = parse_provenance(r.str("pue_source"));
    e.assumptions.sparsity_source = parse_provenance(r.str("sparsity_source"));
    e.computed_at = r.time("computed_at");
    return e;
  });
}

csv::Table composite_scores(const std::vector<CompositeScore>& v) {
  csv::Table t(kCompositeHeader);
  for (const auto& s : v) {
    auto row = endpoint_fields(s.endpoint);
    row.insert(row.end(), {s.preset, s.scope, num(s.score), std::to_string(s.rank)});
    for (const double x : s.normalized.values) row.push_back(num(x));
    for (const double x : s.raw.values) row.push_back(num(x));
    row.push_back(format_timestamp(s.computed_at));
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<CompositeScore> parse_composite_scores(const csv::Table& t) {
  return parse_rows<CompositeScore>(t, kCompositeHeader, [](const Reader& r) {
    CompositeScore s;
    s.endpoint = r.endpoint();
    s.preset = r.str("preset");
    s.scope = r.str("scope");
    s.score = r.number("score");
    s.rank = static_cast<int>(r.integer("rank"));
    static constexpr const char* kNorm[] = {"s_norm", "t_norm", "p_norm", "q_norm", "r_norm"};
    static constexpr const char* kRaw[] = {"speed", "ttft", "blended_price", "quality",
                                           "reliability"};
    for (std::size_t i = 0; i < kFactorCount; ++i) {
      s.normalized.values[i] = r.number(kNorm[i]);
      s.raw.values[i] = r.number(kRaw[i]);
    }
    s.computed_at = r.time("computed_at");
    return s;
  });
}

csv::Table headline(const std::vector<HeadlineMetrics>& v) {
  csv::Table t(kHeadlineHeader);
  for (const auto& h : v) {
    auto row = endpoint_fields(h.endpoint);
    row.insert(row.end(), {num(h.j_ca), num(h.c_ca), num(h.j_per_token), num(h.p_per_token),
                           num(h.tokens_to_solution), num(h.accuracy),
                           format_timestamp(h.computed_at)});
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<HeadlineMetrics> parse_headline(const csv::Table& t) {
  return parse_rows<HeadlineMetrics>(t, kHeadlineHeader, [](const Reader& r) {
    HeadlineMetrics h;
    h.endpoint = r.endpoint();
    h.j_ca = r.number("j_ca");
    h.c_ca = r.number("c_ca");
    h.j_per_token = r.number("j_per_token");
    h.p_per_token = r.number("p_per_token");
    h.tokens_to_solution = r.number("tokens_to_solution");
    h.accuracy = r.number("accuracy");
    h.computed_at = r.time("computed_at");
    return h;
  });
}

}  // namespace tables

// ---------------------------------------------------------------------------

Timestamp record_time(const ProbeRecord& r) { return r.request_time; }
Timestamp record_time(const LatencySummary& r) { return r.window.start; }
Timestamp record_time(const EvalRun& r) { return r.window.start; }
Timestamp record_time(const Fingerprint& r) { return r.capture_time; }
Timestamp record_time(const FidelityResult& r) { return r.computed_at; }
Timestamp record_time(const EnergyEstimate& r) { return r.computed_at; }
Timestamp record_time(const CompositeScore& r) { return r.computed_at; }
Timestamp record_time(const HeadlineMetrics& r) { return r.computed_at; }

namespace {

template <class R>
struct Codec;

#define EPBENCH_CODEC(Type, file, writer, reader) \
  template <>                                     \
  struct Codec<Type> {                            \
    static constexpr const char* kName = file;    \
    static csv::Table write(const std::vector<Type>& v) { return tables::writer(v); } \
    static std::vector<Type> read(const csv::Table& t) { return tables::reader(t); }  \
  };

EPBENCH_CODEC(ProbeRecord, "probe_records", probe_records, parse_probe_records)
EPBENCH_CODEC(LatencySummary, "latency_summaries", latency_summaries, parse_latency_summaries)
EPBENCH_CODEC(EvalRun, "eval_runs", eval_runs, parse_eval_runs)
EPBENCH_CODEC(Fingerprint, "fingerprints", fingerprints, parse_fingerprints)
EPBENCH_CODEC(FidelityResult, "fidelity", fidelity, parse_fidelity)
EPBENCH_CODEC(EnergyEstimate, "energy_estimates", energy_estimates, parse_energy_estimates)
EPBENCH_CODEC(CompositeScore, "composite_scores", composite_scores, parse_composite_scores)
EPBENCH_CODEC(HeadlineMetrics, "headline", headline, parse_headline)
#undef EPBENCH_CODEC

bool key_matches(const ProbeRecord& r, const EndpointId& id,
                 const std::optional<ProbeConditions>& c) {
  return r.endpoint == id && (!c || r.conditions == *c);
}
bool key_matches(const LatencySummary& r, const EndpointId& id,
                 const std::optional<ProbeConditions>& c) {
  return r.endpoint == id && (!c || r.conditions == *c);
}
template <class R>
bool key_matches(const R& r, const EndpointId& id, const std::optional<ProbeConditions>&) {
  return r.endpoint == id;
}

void validate_record(const ProbeRecord& r) { r.validate(); }
void validate_record(const LatencySummary& r) { r.validate(); }
void validate_record(const EvalRun& r) { r.validate(); }
void validate_record(const Fingerprint& r) { r.validate(); }
void validate_record(const FidelityResult& r) { r.validate(); }
void validate_record(const EnergyEstimate& r) {
  if (!(r.j_per_token > 0.0)) throw ValidationError("energy estimate needs j_per_token > 0");
  r.assumptions.validate();
}
void validate_record(const CompositeScore& r) {
  for (const double x : r.normalized.values) {
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("composite factor outside [0,1]");
  }
}
void validate_record(const HeadlineMetrics&) {}

template <class R>
struct Shelf {
  mutable std::mutex mutex;
  std::vector<R> records;
  std::map<std::string, std::vector<std::size_t>> by_endpoint;
  std::ofstream log;

  void index_last() {
    by_endpoint[records.back().endpoint.key()].push_back(records.size() - 1);
  }
};

}  // namespace

struct Store::Impl {
  std::optional<std::filesystem::path> dir;
  std::tuple<Shelf<ProbeRecord>, Shelf<LatencySummary>, Shelf<EvalRun>, Shelf<Fingerprint>,
             Shelf<FidelityResult>, Shelf<EnergyEstimate>, Shelf<CompositeScore>,
             Shelf<HeadlineMetrics>>
      shelves;

  template <class R>
  Shelf<R>& shelf() {
    return std::get<Shelf<R>>(shelves);
  }
  template <class R>
  const Shelf<R>& shelf() const {
    return std::get<Shelf<R>>(shelves);
  }

  template <class R>
  void open() {
    auto& s = shelf<R>();
    const auto path = *dir / (std::string(Codec<R>::kName) + ".ndjson");
    if (std::filesystem::exists(path)) {
      std::ifstream in(path);
      const auto header = Codec<R>::write({}).header();
      std::string line;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        csv::Table t(header);
        t.source = path.string() + " record " + std::to_string(n);
        try {
          for (const auto& row : nlohmann::json::parse(line)) t.add_row(row.get<Row>());
        } catch (const nlohmann::json::exception& e) {
          throw ParseError(t.source + ": " + e.what());
        }
        for (auto& r : Codec<R>::read(t)) {
          s.records.push_back(std::move(r));
          s.index_last();
        }
      }
    }
    s.log.open(path, std::ios::app);
    if (!s.log) throw Error("cannot open store log " + path.string());
  }

  template <class R>
  void append(const R& r) {
    validate_record(r);
    auto& s = shelf<R>();
    std::string line;
    if (dir) line = nlohmann::json(Codec<R>::write({r}).rows()).dump() + "\n";
    std::lock_guard lock(s.mutex);
    if (dir) {
      s.log << line;
      s.log.flush();
      if (!s.log) throw Error("store write failed for " + std::string(Codec<R>::kName));
    }
    s.records.push_back(r);
    s.index_last();
  }
};

Store::Store() : impl_(std::make_unique<Impl>()) {}

Store::Store(const std::filesystem::path& dir) : impl_(std::make_unique<Impl>()) {
  std::filesystem::create_directories(dir);
  impl_->dir = dir;
  std::apply([&](auto&... shelf) { (impl_->open<typename std::decay_t<decltype(shelf.records)>::value_type>(), ...); },
             impl_->shelves);
}

Store::~Store() = default;

void Store::append(const ProbeRecord& r) { impl_->append(r); }
void Store::append(const LatencySummary& r) { impl_->append(r); }
void Store::append(const EvalRun& r) { impl_->append(r); }
void Store::append(const Fingerprint& r) { impl_->append(r); }
void Store::append(const FidelityResult& r) { impl_->append(r); }
void Store::append(const EnergyEstimate& r) { impl_->append(r); }
void Store::append(const CompositeScore& r) { impl_->append(r); }
void Store::append(const HeadlineMetrics& r) { impl_->append(r); }

template <class R>
std::vector<R> Store::records() const {
  const auto& s = impl_->shelf<R>();
  std::lock_guard lock(s.mutex);
  return s.records;
}

template <class R>
std::vector<R> Store::query_window(const EndpointId& endpoint, const TimeWindow& window,
                                   const std::optional<ProbeConditions>& conditions) const {
  if (window.end < window.start) throw ValidationError("query_window: end before start");
  const auto& s = impl_->shelf<R>();
  std::lock_guard lock(s.mutex);
  std::vector<R> out;
  const auto it = s.by_endpoint.find(endpoint.key());
  if (it == s.by_endpoint.end()) return out;
  for (const auto i : it->second) {
    const auto& r = s.records[i];
    if (key_matches(r, endpoint, conditions) && window.contains(record_time(r))) out.push_back(r);
  }
  return out;
}

template <class R>
std::size_t Store::count() const {
  const auto& s = impl_->shelf<R>();
  std::lock_guard lock(s.mutex);
  return s.records.size();
}

#define EPBENCH_INSTANTIATE(Type)                                                      \
  template std::vector<Type> Store::records<Type>() const;                             \
  template std::vector<Type> Store::query_window<Type>(                                \
      const EndpointId&, const TimeWindow&, const std::optional<ProbeConditions>&) const; \
  template std::size_t Store::count<Type>() const;

EPBENCH_INSTANTIATE(ProbeRecord)
EPBENCH_INSTANTIATE(LatencySummary)
EPBENCH_INSTANTIATE(EvalRun)
EPBENCH_INSTANTIATE(Fingerprint)
EPBENCH_INSTANTIATE(FidelityResult)
EPBENCH_INSTANTIATE(EnergyEstimate)
EPBENCH_INSTANTIATE(CompositeScore)
EPBENCH_INSTANTIATE(HeadlineMetrics)
#undef EPBENCH_INSTANTIATE

Snapshot Store::snapshot(const std::string& version, Timestamp as_of, const Registry& registry,
                         std::map<std::string, std::string> settings) const {
  Snapshot snap;
  snap.version = version;
  snap.as_of = as_of;
  snap.registry_hash = registry.hash();
  snap.settings = std::move(settings);
  auto take = [&](auto& dest) {
    using R = typename std::decay_t<decltype(dest)>::value_type;
    for (auto& r : records<R>()) {
      if (record_time(r) <= as_of) dest.push_back(std::move(r));
    }
  };
  take(snap.probe_records);
  take(snap.latency_summaries);
  take(snap.eval_runs);
  take(snap.fingerprints);
  take(snap.fidelity);
  take(snap.energy_estimates);
  take(snap.composite_scores);
  take(snap.headline);
  return snap;
}

// ---------------------------------------------------------------------------

void Snapshot::validate(const Registry& registry) const {
  if (registry_hash != registry.hash()) {
    throw ValidationError("snapshot '" + version + "' was built against registry " +
                          registry_hash + ", not " + registry.hash());
  }
  auto check = [&](const auto& records, std::string_view table) {
    for (const auto& r : records) {
      if (!registry.find_endpoint(r.endpoint)) {
        throw ReferenceError(std::string(table) + ": unknown endpoint '" + r.endpoint.key() + "'");
      }
      if (record_time(r) > as_of) {
        throw ValidationError(std::string(table) + ": record for '" + r.endpoint.key() +
                              "' is newer than as_of");
      }
    }
  };
  check(probe_records, "probe_records");
  check(latency_summaries, "latency_summaries");
  check(eval_runs, "eval_runs");
  check(fingerprints, "fingerprints");
  check(fidelity, "fidelity");
  check(energy_estimates, "energy_estimates");
  check(composite_scores, "composite_scores");
  check(headline, "headline");
}

std::map<std::string, std::string> snapshot_files(const Snapshot& s) {
  return {
      {"probe_records.csv", tables::probe_records(s.probe_records).to_string()},
      {"latency_summaries.csv", tables::latency_summaries(s.latency_summaries).to_string()},
      {"eval_runs.csv", tables::eval_runs(s.eval_runs).to_string()},
      {"fingerprints.csv", tables::fingerprints(s.fingerprints).to_string()},
      {"fidelity.csv", tables::fidelity(s.fidelity).to_string()},
      {"energy_estimates.csv", tables::energy_estimates(s.energy_estimates).to_string()},
      {"composite_scores.csv", tables::composite_scores(s.composite_scores).to_string()},
      {"headline.csv", tables::headline(s.headline).to_string()},
  };
}

std::filesystem::path export_snapshot(const Snapshot& snapshot, const Registry& registry,
                                      const std::filesystem::path& root) {
  snapshot.validate(registry);
  if (snapshot.version.empty() || snapshot.version.find('/') != std::string::npos) {
    throw ValidationError("snapshot version must be a non-empty directory name");
  }
  const auto dir = root / snapshot.version;
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : snapshot_files(snapshot)) csv::write_file(dir / name, text);
  registry.save(dir / "registry");
  nlohmann::ordered_json manifest;
  manifest["version"] = snapshot.version;
  manifest["as_of"] = format_timestamp(snapshot.as_of);
  manifest["registry_hash"] = snapshot.registry_hash;
  manifest["settings"] = snapshot.settings;
  csv::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return dir;
}

namespace {

Snapshot read_snapshot_files(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw NotFoundError("no snapshot manifest at " + manifest_path.string());
  }
  Snapshot s;
  try {
    const auto manifest = nlohmann::json::parse(csv::read_file(manifest_path));
    s.version = manifest.at("version").get<std::string>();
    s.as_of = parse_timestamp(manifest.at("as_of").get<std::string>());
    s.registry_hash = manifest.at("registry_hash").get<std::string>();
    if (manifest.contains("settings")) {
      s.settings = manifest.at("settings").get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  s.probe_records = tables::parse_probe_records(csv::read(dir / "probe_records.csv"));
  s.latency_summaries = tables::parse_latency_summaries(csv::read(dir / "latency_summaries.csv"));
  s.eval_runs = tables::parse_eval_runs(csv::read(dir / "eval_runs.csv"));
  s.fingerprints = tables::parse_fingerprints(csv::read(dir / "fingerprints.csv"));
  s.fidelity = tables::parse_fidelity(csv::read(dir / "fidelity.csv"));
  s.energy_estimates = tables::parse_energy_estimates(csv::read(dir / "energy_estimates.csv"));
  s.composite_scores = tables::parse_composite_scores(csv::read(dir / "composite_scores.csv"));
  s.headline = tables::parse_headline(csv::read(dir / "headline.csv"));
  return s;
}

}  // namespace

LoadedSnapshot import_snapshot(const std::filesystem::path& dir) {
  auto snapshot = read_snapshot_files(dir);
  auto registry = Registry::load(dir / "registry");
  snapshot.validate(registry);
  return {std::move(registry), std::move(snapshot)};
}

Snapshot import_snapshot(const std::filesystem::path& dir, const Registry& registry) {
  auto snapshot = read_snapshot_files(dir);
  snapshot.validate(registry);
  return snapshot;
}

}  // namespace epbench
