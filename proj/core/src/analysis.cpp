// SPDX-License-Identifier: Apache-2.0
#include "epbench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

namespace epbench {

std::string_view to_string(GapKind g) { return g == GapKind::Ratio ? "ratio" : "points"; }

std::vector<AxisValues> within_model_axes(const Leaderboard& board, const std::string& model) {
  const auto cohort = board.registry().cohort(model);
  if (cohort.empty()) throw ValidationError("model '" + model + "' has no endpoints");
  const auto& cfg = board.config();

  std::vector<AxisValues> axes = {
      {"output_speed", GapKind::Ratio, {}},     {"ttft_p50", GapKind::Ratio, {}},
      {"ttft_p99", GapKind::Ratio, {}},         {"blended_price_3_1", GapKind::Ratio, {}},
      {"quality_composite", GapKind::Points, {}}, {"aime_accuracy", GapKind::Points, {}},
      {"code_accuracy", GapKind::Points, {}},   {"effective_context_k", GapKind::Ratio, {}},
      {"fidelity", GapKind::Points, {}},        {"j_per_token", GapKind::Ratio, {}},
      {"j_per_correct", GapKind::Ratio, {}},    {"usd_per_correct", GapKind::Ratio, {}},
  };
  for (const auto& ep : cohort) {
    const auto* m = board.measures(ep.id);
    auto missing = [&](std::string_view axis) {
      return ValidationError("endpoint '" + ep.id.key() + "' has no " + std::string(axis));
    };
    auto run_accuracy = [&](const std::string& suite) {
      const auto it = m->latest_runs.find(suite);
      if (it == m->latest_runs.end()) throw missing(suite + " run");
      return 100.0 * it->second.accuracy;
    };
    if (!m->latency || !m->latency->has_latency()) throw missing("latency summary");
    if (!m->quality) throw missing("quality composite");
    if (!m->effective_context) throw missing("effective context");
    if (!m->fidelity) throw missing("fidelity result");
    if (!m->energy) throw missing("energy estimate");
    if (!m->headline) throw missing("headline metrics");
    const double values[] = {
        m->latency->output_speed,
        m->latency->ttft_p50,
        m->latency->ttft_p99,
        blended_price(ep, 3.0, 1.0),
        m->quality->q,
        run_accuracy(cfg.aime_suite),
        run_accuracy(cfg.code_suite),
        static_cast<double>(*m->effective_context) / 1000.0,
        m->fidelity->f,
        m->energy->j_per_token,
        m->headline->j_ca,
        m->headline->c_ca,
    };
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i].values.emplace_back(ep.id, values[i]);
  }
  return axes;
}

namespace {

double gap_of(double min, double max, GapKind kind) {
  if (kind == GapKind::Points) return max - min;
  return min > 0.0 ? max / min : std::numeric_limits<double>::infinity();
}

}  // namespace

AxisRange axis_range(const AxisValues& v) {
  if (v.values.empty()) throw ValidationError("axis '" + v.axis + "' has no values");
  AxisRange r;
  r.axis = v.axis;
  r.gap_kind = v.gap_kind;
  const auto [lo, hi] = std::minmax_element(
      v.values.begin(), v.values.end(),
      [](const auto& a, const auto& b) { return a.second < b.second; });
  r.min = lo->second;
  r.max = hi->second;
  r.min_endpoint = lo->first.key();
  r.max_endpoint = hi->first.key();
  r.gap = gap_of(r.min, r.max, r.gap_kind);
  return r;
}

WithinModelRange within_model(const Leaderboard& board, const std::string& model) {
  WithinModelRange out;
  out.model = model;
  for (const auto& axis : within_model_axes(board, model)) {
    out.n_endpoints = axis.values.size();
    out.rows.push_back(axis_range(axis));
  }
  return out;
}

std::size_t topk_overlap(std::span<const std::string> a, std::span<const std::string> b,
                         std::size_t k) {
  const std::set<std::string> ua(a.begin(), a.end());
  const std::set<std::string> ub(b.begin(), b.end());
  if (ua != ub || ua.size() != a.size() || ub.size() != b.size()) {
    throw ValidationError("topk_overlap: rankings cover different endpoints");
  }
  if (k > a.size()) throw ValidationError("topk_overlap: k exceeds the ranking size");
  const std::set<std::string> top_a(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k));
  std::size_t n = 0;
  for (std::size_t i = 0; i < k; ++i) n += top_a.count(b[i]);
  return n;
}

std::vector<std::string> ranking_keys(const std::vector<CompositeScore>& scores) {
  std::vector<std::string> keys;
  keys.reserve(scores.size());
  for (const auto& s : scores) keys.push_back(s.endpoint.key());
  return keys;
}

OverlapMatrix overlap_matrix(const Leaderboard& board, std::span<const std::string> presets,
                             std::size_t k, const std::string& scope) {
  if (presets.size() < 2) throw ValidationError("overlap_matrix needs at least two presets");
  OverlapMatrix m;
  m.presets.assign(presets.begin(), presets.end());
  m.k = k;
  std::vector<std::vector<std::string>> rankings;
  for (const auto& p : presets) rankings.push_back(ranking_keys(board.rank(p, scope)));
  m.cells.assign(presets.size(), std::vector<std::size_t>(presets.size(), 0));
  for (std::size_t i = 0; i < presets.size(); ++i) {
    for (std::size_t j = i; j < presets.size(); ++j) {
      m.cells[i][j] = m.cells[j][i] = topk_overlap(rankings[i], rankings[j], k);
    }
  }
  return m;
}

WorkloadPreset perturb_weights(const WorkloadPreset& preset, Factor factor, double delta) {
  WorkloadPreset out = preset;
  if (delta == 0.0) return out;
  const double w = preset.weights[factor];
  const double target = w + delta;
  if (target < -1e-12 || target > 1.0 + 1e-12) {
    throw ValidationError("perturb_weights: " + std::string(to_string(factor)) + " weight " +
                          format_number(w) + " + " + format_number(delta) + " leaves [0,1]");
  }
  if (1.0 - w <= 0.0) {
    throw ValidationError("perturb_weights: " + std::string(to_string(factor)) +
                          " carries the whole weight");
  }
  const double t = std::clamp(target, 0.0, 1.0);
  const double scale = (1.0 - t) / (1.0 - w);
  for (const auto f : kFactors) out.weights[f] = f == factor ? t : preset.weights[f] * scale;
  return out;
}

WorkloadPreset ablate_weights(const WorkloadPreset& preset, Factor factor) {
  return perturb_weights(preset, factor, -preset.weights[factor]);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ValidationError("spearman needs two samples of equal size >= 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(va * vb);
}

double spearman_rankings(std::span<const std::string> a, std::span<const std::string> b) {
  std::unordered_map<std::string, double> pos_b;
  for (std::size_t i = 0; i < b.size(); ++i) pos_b[b[i]] = static_cast<double>(i + 1);
  if (a.size() != b.size() || pos_b.size() != b.size()) {
    throw ValidationError("spearman_rankings: rankings cover different endpoints");
  }
  std::vector<double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto it = pos_b.find(a[i]);
    if (it == pos_b.end()) throw ValidationError("spearman_rankings: rankings cover different endpoints");
    ra.push_back(static_cast<double>(i + 1));
    rb.push_back(it->second);
  }
  return spearman(ra, rb);
}

std::vector<SensitivityRow> sensitivity_report(const Leaderboard& board,
                                               std::span<const std::string> presets, double delta,
                                               bool both_signs, const std::string& scope) {
  std::vector<SensitivityRow> rows;
  for (const auto& name : presets) {
    const auto& base_preset = board.registry().preset(name);
    const auto base = ranking_keys(board.rank(base_preset, scope));
    const std::size_t k = std::min<std::size_t>(10, base.size());
    for (const auto factor : kFactors) {
      for (const double d : both_signs ? std::vector<double>{delta, -delta} : std::vector<double>{delta}) {
        SensitivityRow row;
        row.preset = name;
        row.factor = factor;
        row.delta = d;
        WorkloadPreset perturbed;
        try {
          perturbed = perturb_weights(base_preset, factor, d);
        } catch (const ValidationError&) {
          row.valid = false;
          row.top10_overlap = 0;
          rows.push_back(row);
          continue;
        }
        const auto now = ranking_keys(board.rank(perturbed, scope));
        std::unordered_map<std::string, int> pos;
        for (std::size_t i = 0; i < now.size(); ++i) pos[now[i]] = static_cast<int>(i);
        for (std::size_t i = 0; i < k; ++i) {
          row.max_top10_shift = std::max(row.max_top10_shift, std::abs(pos[base[i]] - static_cast<int>(i)));
        }
        row.leader_changed = !base.empty() && base.front() != now.front();
        row.top10_overlap = topk_overlap(base, now, k);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

AblationRow ablate(const Leaderboard& board, const std::string& preset, Factor factor,
                   const std::string& scope) {
  const auto& p = board.registry().preset(preset);
  const auto ablated = ablate_weights(p, factor);
  const auto full = ranking_keys(board.rank(p, scope));
  const auto now = ranking_keys(board.rank(ablated, scope));
  AblationRow row;
  row.scheme = "w/o " + std::string(to_string(factor));
  row.weights = ablated.weights;
  row.spearman_rho = full.size() < 2 ? 1.0 : spearman_rankings(full, now);
  row.top10_overlap = topk_overlap(full, now, std::min<std::size_t>(10, full.size()));
  return row;
}

AblationReport ablation_report(const Leaderboard& board, const std::string& preset,
                               const std::string& scope) {
  AblationReport report;
  report.preset = preset;
  const auto& p = board.registry().preset(preset);
  const auto n = board.rank(p, scope).size();
  report.rows.push_back({"full", p.weights, 1.0, std::min<std::size_t>(10, n)});
  for (const auto f : kFactors) report.rows.push_back(ablate(board, preset, f, scope));
  return report;
}

BootstrapCI bootstrap_ci(const Leaderboard& board, const EndpointId& endpoint,
                         const std::string& preset, std::size_t n, std::uint64_t seed,
                         const std::string& scope) {
  if (n < 1) throw ValidationError("bootstrap needs at least one resample");
  const auto& cfg = board.config();
  const auto& snap = board.snapshot();
  const auto& p = board.registry().preset(preset);
  board.registry().endpoint(endpoint);

  const auto window_len = std::chrono::microseconds{
      static_cast<std::int64_t>(std::llround(cfg.window_hours * 3600e6))};
  const TimeWindow window{snap.as_of - window_len, snap.as_of + std::chrono::microseconds{1}};
  std::vector<ProbeRecord> probes;
  for (const auto& r : snap.probe_records) {
    if (r.endpoint == endpoint && r.conditions == cfg.conditions && window.contains(r.request_time)) {
      probes.push_back(r);
    }
  }
  if (probes.empty()) throw ValidationError("bootstrap: no probes for '" + endpoint.key() + "'");
  std::map<std::string, std::vector<const EvalRun*>> pools;
  for (const auto& r : snap.eval_runs) {
    if (r.endpoint == endpoint && r.context_length == 0) pools[r.suite].push_back(&r);
  }
  for (const auto& suite : cfg.quality_suites) {
    if (pools[suite].empty()) {
      throw ValidationError("bootstrap: no " + suite + " runs for '" + endpoint.key() + "'");
    }
  }

  auto factors = board.factors();
  const auto self = std::find_if(factors.begin(), factors.end(),
                                 [&](const EndpointFactors& f) { return f.endpoint == endpoint; });
  const auto weights = cfg.weights();
  std::vector<double> scores;
  scores.reserve(n);
  std::vector<ProbeRecord> sample(probes.size());
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix64(seed, i));
    for (auto& s : sample) s = probes[rng.index(probes.size())];
    const auto summary = summarize(sample);
    std::vector<EvalRun> runs;
    for (const auto& suite : cfg.quality_suites) {
      const auto& pool = pools[suite];
      runs.push_back(*pool[rng.index(pool.size())]);
    }
    EndpointMeasures m;
    m.endpoint = endpoint;
    m.latency = summary;
    m.quality = quality_composite(runs, weights);
    *self = m.factors(cfg.use_ttfv);
    const auto ranked = rank_endpoints(board.registry(), factors, p, scope, cfg.cache_hit);
    for (const auto& s : ranked) {
      if (s.endpoint == endpoint) scores.push_back(s.score);
    }
  }
  std::sort(scores.begin(), scores.end());
  BootstrapCI ci;
  ci.endpoint = endpoint;
  ci.preset = preset;
  ci.n_resamples = n;
  ci.median = nearest_rank(scores, 0.50);
  ci.lower = nearest_rank(scores, 0.025);
  ci.upper = nearest_rank(scores, 0.975);
  return ci;
}

namespace {

std::pair<double, std::size_t> loo_change(std::span<const double> values, GapKind kind) {
  if (values.size() < 3) throw ValidationError("leave-one-out needs at least three endpoints");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double full = gap_of(*lo, *hi, kind);
  double worst = 0.0;
  std::size_t worst_i = 0;
  std::vector<double> rest;
  for (std::size_t i = 0; i < values.size(); ++i) {
    rest.assign(values.begin(), values.end());
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    const auto [l, h] = std::minmax_element(rest.begin(), rest.end());
    const double g = gap_of(*l, *h, kind);
    const double change = full != 0.0 ? std::abs(g - full) / std::abs(full) : std::abs(g - full);
    if (change > worst) {
      worst = change;
      worst_i = i;
    }
  }
  return {worst, worst_i};
}

}  // namespace

double leave_one_out_change(std::span<const double> values, GapKind kind) {
  return loo_change(values, kind).first;
}

std::vector<LooRow> leave_one_out(const Leaderboard& board, const std::string& model,
                                  std::span<const std::string> axes) {
  const auto all = within_model_axes(board, model);
  std::vector<LooRow> rows;
  for (const auto& name : axes) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const AxisValues& a) { return a.axis == name; });
    if (it == all.end()) throw ValidationError("unknown within-model axis '" + name + "'");
    std::vector<double> v;
    for (const auto& [_, x] : it->values) v.push_back(x);
    const auto [change, index] = loo_change(v, it->gap_kind);
    rows.push_back({name, axis_range(*it).gap, change, it->values[index].first.key()});
  }
  return rows;
}

std::vector<SkuGroup> fidelity_groups(const Leaderboard& board, const std::string& model,
                                      std::span<const std::string> suites) {
  std::vector<FidelityResult> results;
  std::map<std::string, std::map<std::string, double>> accuracies;
  for (const auto& ep : board.registry().cohort(model)) {
    const auto* m = board.measures(ep.id);
    if (!m->fidelity) continue;
    results.push_back(*m->fidelity);
    for (const auto& [suite, run] : m->latest_runs) accuracies[ep.id.key()][suite] = run.accuracy;
  }
  return fidelity_by_sku(results, board.registry(), accuracies, suites);
}

std::vector<CategoryRow> registry_summary(const Registry& registry) {
  std::vector<CategoryRow> rows;
  for (const auto c : kProviderCategories) {
    CategoryRow row;
    row.category = c;
    for (const auto& p : registry.providers()) {
      if (p.category != c) continue;
      std::size_t n = 0;
      for (const auto& e : registry.endpoints()) n += e.id.provider == p.id;
      if (n == 0) continue;
      row.n_endpoints += n;
      row.providers.push_back(p.name);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

csv::Table to_table(const WithinModelRange& r) {
  csv::Table t({"model", "axis", "min", "max", "gap", "gap_kind", "min_endpoint", "max_endpoint"});
  for (const auto& row : r.rows) {
    t.add_row({r.model, row.axis, format_number(row.min), format_number(row.max),
               format_number(row.gap), std::string(to_string(row.gap_kind)), row.min_endpoint,
               row.max_endpoint});
  }
  return t;
}

csv::Table to_table(const OverlapMatrix& m) {
  std::vector<std::string> header = {"preset"};
  header.insert(header.end(), m.presets.begin(), m.presets.end());
  csv::Table t(header);
  for (std::size_t i = 0; i < m.presets.size(); ++i) {
    std::vector<std::string> row = {m.presets[i]};
    for (const auto c : m.cells[i]) row.push_back(std::to_string(c));
    t.add_row(std::move(row));
  }
  return t;
}

csv::Table to_table(const AblationReport& r) {
  csv::Table t({"preset", "scheme", "w_s", "w_t", "w_p", "w_q", "w_r", "spearman_rho",
                "top10_overlap"});
  for (const auto& row : r.rows) {
    std::vector<std::string> fields = {r.preset, row.scheme};
    for (const double w : row.weights.values) fields.push_back(format_number(w));
    fields.push_back(format_number(row.spearman_rho));
    fields.push_back(std::to_string(row.top10_overlap));
    t.add_row(std::move(fields));
  }
  return t;
}

csv::Table to_table(const std::vector<SensitivityRow>& rows) {
  csv::Table t({"preset", "factor", "delta", "valid", "max_top10_shift", "leader_changed",
                "top10_overlap"});
  for (const auto& r : rows) {
    t.add_row({r.preset, std::string(to_string(r.factor)), format_number(r.delta),
               r.valid ? "true" : "false", std::to_string(r.max_top10_shift),
               r.leader_changed ? "true" : "false", std::to_string(r.top10_overlap)});
  }
  return t;
}

csv::Table to_table(const std::vector<BootstrapCI>& rows) {
  auto header = kEndpointColumns;
  header.insert(header.end(), {"preset", "n_resamples", "median", "lower", "upper"});
  csv::Table t(header);
  for (const auto& r : rows) {
    auto fields = endpoint_fields(r.endpoint);
    fields.insert(fields.end(), {r.preset, std::to_string(r.n_resamples), format_number(r.median),
                                 format_number(r.lower), format_number(r.upper)});
    t.add_row(std::move(fields));
  }
  return t;
}

csv::Table to_table(const std::vector<LooRow>& rows) {
  csv::Table t({"axis", "full", "max_relative_change", "worst_drop"});
  for (const auto& r : rows) {
    t.add_row({r.axis, format_number(r.full), format_number(r.max_relative_change), r.worst_drop});
  }
  return t;
}

csv::Table to_table(const std::vector<SkuGroup>& groups, std::span<const std::string> suites) {
  std::vector<std::string> header = {"sku_class", "n", "mean_f"};
  for (const auto& s : suites) header.push_back(s + "_delta");
  csv::Table t(header);
  for (const auto& g : groups) {
    std::vector<std::string> row = {g.sku_class, std::to_string(g.n), format_number(g.mean_f)};
    for (const auto& s : suites) {
      const auto it = g.eval_deltas.find(s);
      row.push_back(it == g.eval_deltas.end() ? "" : format_number(it->second));
    }
    t.add_row(std::move(row));
  }
  return t;
}

csv::Table to_table(const std::vector<CategoryRow>& rows) {
  csv::Table t({"category", "n", "providers"});
  std::size_t total = 0;
  for (const auto& r : rows) {
    std::string names;
    for (const auto& p : r.providers) names += (names.empty() ? "" : "; ") + p;
    t.add_row({std::string(display_name(r.category)), std::to_string(r.n_endpoints), names});
    total += r.n_endpoints;
  }
  t.add_row({"Total", std::to_string(total), ""});
  return t;
}

csv::Table to_table(const std::vector<HardwareClass>& hardware) {
  csv::Table t({"name", "tdp_watts", "default_pue", "sharing_factor"});
  for (const auto& h : hardware) {
    t.add_row({h.name, format_number(h.tdp_watts), format_number(h.default_pue),
               format_number(h.sharing_factor)});
  }
  return t;
}

}  // namespace epbench
