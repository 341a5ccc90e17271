// SPDX-License-Identifier: Apache-2.0
#include "epbench/registry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "epbench/common.hpp"
#include "epbench/csv.hpp"
#include "epbench/energy.hpp"

namespace epbench {

std::string_view to_string(Precision p) {
  switch (p) {
    case Precision::BF16: return "BF16";
    case Precision::FP8: return "FP8";
    case Precision::INT8: return "INT8";
    case Precision::FP16: return "FP16";
    case Precision::Other: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(Decoding d) {
  switch (d) {
    case Decoding::Standard: return "standard";
    case Decoding::Speculative: return "speculative";
    case Decoding::Other: return "other";
  }
  return "other";
}

Precision parse_precision(std::string_view s) {
  if (s == "BF16") return Precision::BF16;
  if (s == "FP8") return Precision::FP8;
  if (s == "INT8") return Precision::INT8;
  if (s == "FP16") return Precision::FP16;
  if (s == "OTHER") return Precision::Other;
  throw ParseError("unknown precision '" + std::string(s) + "'");
}

Decoding parse_decoding(std::string_view s) {
  if (s == "standard") return Decoding::Standard;
  if (s == "speculative") return Decoding::Speculative;
  if (s == "other") return Decoding::Other;
  throw ParseError("unknown decoding '" + std::string(s) + "'");
}

std::string EndpointId::key() const {
  std::string k;
  k.reserve(provider.size() + model.size() + sku.size() + region.size() + 24);
  k += provider;
  k += '/';
  k += model;
  k += '/';
  k += sku;
  k += '/';
  k += to_string(precision);
  k += '/';
  k += to_string(decoding);
  k += '/';
  k += region;
  return k;
}

EndpointId EndpointId::parse(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto slash = key.find('/', start);
    parts.emplace_back(key.substr(start, slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  if (parts.size() != 6) {
    throw ParseError("endpoint id needs 6 '/'-separated fields: '" + std::string(key) + "'");
  }
  return EndpointId{parts[0], parts[1], parts[2], parse_precision(parts[3]),
                    parse_decoding(parts[4]), parts[5]};
}

std::vector<std::string> endpoint_fields(const EndpointId& id) {
  return {id.provider, id.model, id.sku, std::string(to_string(id.precision)),
          std::string(to_string(id.decoding)), id.region};
}

std::string_view to_string(ProviderCategory c) {
  switch (c) {
    case ProviderCategory::FrontierLab: return "frontier_lab";
    case ProviderCategory::Hyperscaler: return "hyperscaler";
    case ProviderCategory::CustomSilicon: return "custom_silicon";
    case ProviderCategory::ServerlessGpu: return "serverless_gpu";
    case ProviderCategory::Aggregator: return "aggregator";
    case ProviderCategory::RawGpuCloud: return "raw_gpu_cloud";
    case ProviderCategory::Decentralized: return "decentralized";
    case ProviderCategory::MultimodalSpecialist: return "multimodal_specialist";
  }
  return "";
}

std::string_view display_name(ProviderCategory c) {
  switch (c) {
    case ProviderCategory::FrontierLab: return "Frontier first-party labs";
    case ProviderCategory::Hyperscaler: return "Hyperscalers";
    case ProviderCategory::CustomSilicon: return "Custom-silicon providers";
    case ProviderCategory::ServerlessGpu: return "Serverless GPU platforms";
    case ProviderCategory::Aggregator: return "Aggregators / routers";
    case ProviderCategory::RawGpuCloud: return "Raw GPU clouds";
    case ProviderCategory::Decentralized: return "Decentralized providers";
    case ProviderCategory::MultimodalSpecialist: return "Multimodal specialists";
  }
  return "";
}

ProviderCategory parse_category(std::string_view s) {
  for (auto c : kProviderCategories) {
    if (to_string(c) == s) return c;
  }
  throw ParseError("unknown provider category '" + std::string(s) + "'");
}

std::string_view to_string(Factor f) {
  switch (f) {
    case Factor::Speed: return "speed";
    case Factor::Ttft: return "ttft";
    case Factor::Price: return "price";
    case Factor::Quality: return "quality";
    case Factor::Reliability: return "reliability";
  }
  return "";
}

Factor parse_factor(std::string_view s) {
  for (auto f : kFactors) {
    if (to_string(f) == s) return f;
  }
  throw ParseError("unknown factor '" + std::string(s) + "'");
}

double FactorValues::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double FactorValues::dot(const FactorValues& o) const {
  double s = 0.0;
  for (std::size_t i = 0; i < kFactorCount; ++i) s += values[i] * o.values[i];
  return s;
}

void WorkloadPreset::validate() const {
  if (name.empty()) throw ValidationError("preset name is empty");
  if (!(input_ratio > 0.0) || !(output_ratio > 0.0)) {
    throw ValidationError("preset '" + name + "': input_ratio and output_ratio must be > 0");
  }
  for (auto f : kFactors) {
    if (!(weights[f] >= 0.0 && weights[f] <= 1.0)) {
      throw ValidationError("preset '" + name + "': weight w_" + std::string(to_string(f)) +
                            " must be in [0,1]");
    }
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9) {
    throw ValidationError("preset '" + name + "': weights must sum to 1 (got " +
                          format_number(weights.sum()) + ")");
  }
}

std::vector<WorkloadPreset> builtin_presets() {
  auto p = [](std::string name, double in, double out, double s, double t, double pr, double q,
              double r) {
    WorkloadPreset preset{std::move(name), in, out, {}};
    preset.weights.values = {s, t, pr, q, r};
    return preset;
  };
  return {
      p("chat", 3, 1, 0.20, 0.30, 0.20, 0.20, 0.10),
      p("voice-agent", 5, 1, 0.10, 0.50, 0.10, 0.15, 0.15),
      p("coding-agent", 1, 3, 0.20, 0.10, 0.15, 0.40, 0.15),
      p("generic-agent", 10, 1, 0.15, 0.20, 0.20, 0.30, 0.15),
      p("rag", 20, 1, 0.10, 0.20, 0.30, 0.25, 0.15),
      p("reasoning", 1, 5, 0.20, 0.05, 0.25, 0.45, 0.05),
      p("batch", 5, 1, 0.05, 0.00, 0.65, 0.20, 0.10),
      p("long-context", 50, 1, 0.05, 0.10, 0.40, 0.30, 0.15),
      p("multimodal-vision", 5, 1, 0.15, 0.20, 0.20, 0.30, 0.15),
      p("multimodal-voice", 1, 1, 0.10, 0.40, 0.20, 0.20, 0.10),
  };
}

// ---------------------------------------------------------------------------

Registry::Registry(std::vector<Provider> providers, std::vector<ModelFamily> models,
                   std::vector<HardwareClass> hardware, std::vector<Region> regions,
                   std::vector<Endpoint> endpoints, std::vector<WorkloadPreset> presets)
    : providers_(std::move(providers)),
      models_(std::move(models)),
      hardware_(std::move(hardware)),
      regions_(std::move(regions)),
      endpoints_(std::move(endpoints)),
      presets_(std::move(presets)) {
  validate();
}

namespace {

template <class T, class KeyFn>
void check_unique(const std::vector<T>& items, KeyFn key, std::string_view what) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    const std::string k = key(item);
    if (k.empty()) throw ValidationError(std::string(what) + ": empty identifier");
    if (!seen.insert(k).second) {
      throw ValidationError(std::string(what) + ": duplicate '" + k + "'");
    }
  }
}

template <class T, class KeyFn>
const T* find_by(const std::vector<T>& items, std::string_view id, KeyFn key) {
  for (const auto& item : items) {
    if (key(item) == id) return &item;
  }
  return nullptr;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

void Registry::validate() {
  check_unique(providers_, [](const Provider& p) { return p.id; }, "providers");
  check_unique(models_, [](const ModelFamily& m) { return m.id; }, "models");
  check_unique(hardware_, [](const HardwareClass& h) { return h.name; }, "hardware");
  check_unique(regions_, [](const Region& r) { return r.id; }, "regions");
  check_unique(presets_, [](const WorkloadPreset& p) { return p.name; }, "presets");

  for (const auto& m : models_) {
    if (!m.open_weights && !m.first_party_provider) {
      throw ValidationError("model '" + m.id + "': closed model requires first_party_provider");
    }
    if (m.first_party_provider && !find_by(providers_, *m.first_party_provider,
                                           [](const Provider& p) { return p.id; })) {
      throw ReferenceError("model '" + m.id + "' references unknown provider '" +
                           *m.first_party_provider + "'");
    }
  }
  for (const auto& h : hardware_) {
    require(h.tdp_watts > 0.0, "hardware '" + h.name + "': tdp_watts must be > 0");
    require(h.default_pue >= 1.0, "hardware '" + h.name + "': default_pue must be >= 1.0");
    require(h.sharing_factor >= 1.0, "hardware '" + h.name + "': sharing_factor must be >= 1");
  }
  for (const auto& r : regions_) {
    require(r.grid_intensity >= 0.0, "region '" + r.id + "': grid_intensity must be >= 0");
    require(!r.pue_override || *r.pue_override >= 1.0,
            "region '" + r.id + "': pue_override must be >= 1.0");
  }
  for (const auto& p : presets_) p.validate();

  std::sort(endpoints_.begin(), endpoints_.end(),
            [](const Endpoint& a, const Endpoint& b) { return a.id.key() < b.id.key(); });
  endpoint_index_.clear();
  for (std::size_t i = 0; i < endpoints_.size(); ++i) {
    const auto& e = endpoints_[i];
    const std::string k = e.id.key();
    const std::string where = "endpoint '" + k + "': ";
    require(!e.id.provider.empty() && !e.id.model.empty() && !e.id.sku.empty() &&
                !e.id.region.empty(),
            where + "all six id fields must be non-empty");
    if (!endpoint_index_.emplace(k, i).second) {
      throw ValidationError("duplicate endpoint tuple '" + k + "'");
    }
    require(e.price_input >= 0.0, where + "price_input must be >= 0");
    require(e.price_output >= 0.0, where + "price_output must be >= 0");
    if (e.price_cached_input) {
      require(*e.price_cached_input >= 0.0, where + "price_cached_input must be >= 0");
      require(*e.price_cached_input <= e.price_input,
              where + "price_cached_input must be <= price_input");
    }
    require(e.batch_discount >= 0.0 && e.batch_discount <= 1.0,
            where + "batch_discount must be in [0,1]");
    require(e.advertised_context > 0, where + "advertised_context must be > 0");
    if (!find_by(providers_, e.id.provider, [](const Provider& p) { return p.id; })) {
      throw ReferenceError(where + "unknown provider '" + e.id.provider + "'");
    }
    if (!find_by(models_, e.id.model, [](const ModelFamily& m) { return m.id; })) {
      throw ReferenceError(where + "unknown model '" + e.id.model + "'");
    }
    if (!find_by(regions_, e.id.region, [](const Region& r) { return r.id; })) {
      throw ReferenceError(where + "unknown region '" + e.id.region + "'");
    }
    if (!find_by(hardware_, e.hardware_class, [](const HardwareClass& h) { return h.name; })) {
      throw ReferenceError(where + "unknown hardware class '" + e.hardware_class + "'");
    }
  }

  std::string all;
  for (const auto& [name, text] : serialize()) all += name + "\n" + text;
  hash_ = sha256_hex(all);
}

const Endpoint* Registry::find_endpoint(const EndpointId& id) const {
  const auto it = endpoint_index_.find(id.key());
  return it == endpoint_index_.end() ? nullptr : &endpoints_[it->second];
}

const Endpoint& Registry::endpoint(const EndpointId& id) const {
  if (const auto* e = find_endpoint(id)) return *e;
  throw NotFoundError("unknown endpoint '" + id.key() + "'");
}

const Provider& Registry::provider(std::string_view id) const {
  if (auto* p = find_by(providers_, id, [](const Provider& x) { return x.id; })) return *p;
  throw NotFoundError("unknown provider '" + std::string(id) + "'");
}

const ModelFamily& Registry::model(std::string_view id) const {
  if (auto* m = find_by(models_, id, [](const ModelFamily& x) { return x.id; })) return *m;
  throw NotFoundError("unknown model '" + std::string(id) + "'");
}

const HardwareClass& Registry::hardware_class(std::string_view name) const {
  if (auto* h = find_by(hardware_, name, [](const HardwareClass& x) { return x.name; })) return *h;
  throw NotFoundError("unknown hardware class '" + std::string(name) + "'");
}

const Region& Registry::region(std::string_view id) const {
  if (auto* r = find_by(regions_, id, [](const Region& x) { return x.id; })) return *r;
  throw NotFoundError("unknown region '" + std::string(id) + "'");
}

const WorkloadPreset& Registry::preset(std::string_view name) const {
  if (auto* p = find_by(presets_, name, [](const WorkloadPreset& x) { return x.name; })) return *p;
  throw NotFoundError("unknown preset '" + std::string(name) + "'");
}

bool Registry::has_preset(std::string_view name) const {
  return find_by(presets_, name, [](const WorkloadPreset& x) { return x.name; }) != nullptr;
}

std::vector<Endpoint> Registry::cohort(std::string_view model_id) const {
  (void)model(model_id);  // throws on unknown model
  std::vector<Endpoint> out;
  for (const auto& e : endpoints_) {
    if (e.id.model == model_id) out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV serialization

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }
std::optional<double> parse_opt_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_number(s);
}
std::string bool_text(bool b) { return b ? "true" : "false"; }

const std::vector<std::string> kEndpointHeader = {
    "provider",     "model",          "sku",
    "precision",    "decoding",       "region",
    "price_input",  "price_output",   "price_cached_input",
    "batch_discount", "advertised_context", "hardware_class",
    "first_party",  "disclosed_quantization"};
const std::vector<std::string> kProviderHeader = {"id", "name", "category"};
const std::vector<std::string> kModelHeader = {"id", "name", "first_party_provider",
                                               "open_weights"};
const std::vector<std::string> kHardwareHeader = {"name", "tdp_watts", "default_pue",
                                                  "sharing_factor"};
const std::vector<std::string> kRegionHeader = {"id", "grid_intensity", "pue_override"};
const std::vector<std::string> kPresetHeader = {"name", "input_ratio", "output_ratio", "w_s",
                                                "w_t",  "w_p",         "w_q",          "w_r"};

// Wraps per-row parsing so errors name the file and line.
template <class Fn>
void for_each_row(const csv::Table& t, Fn fn) {
  for (std::size_t r = 0; r < t.size(); ++r) {
    try {
      fn(r);
    } catch (const ParseError& e) {
      throw ParseError(t.source + " line " + std::to_string(r + 2) + ": " + e.what());
    }
  }
}

}  // namespace

std::map<std::string, std::string> Registry::serialize() const {
  std::map<std::string, std::string> out;
  csv::Table endpoints(kEndpointHeader);
  for (const auto& e : endpoints_) {
    auto row = endpoint_fields(e.id);
    row.insert(row.end(), {format_number(e.price_input), format_number(e.price_output),
                           opt_number(e.price_cached_input), format_number(e.batch_discount),
                           std::to_string(e.advertised_context), e.hardware_class,
                           bool_text(e.first_party), bool_text(e.disclosed_quantization)});
    endpoints.add_row(std::move(row));
  }
  out["endpoints.csv"] = endpoints.to_string();

  csv::Table providers(kProviderHeader);
  for (const auto& p : providers_) {
    providers.add_row({p.id, p.name, std::string(to_string(p.category))});
  }
  out["providers.csv"] = providers.to_string();

  csv::Table models(kModelHeader);
  for (const auto& m : models_) {
    models.add_row({m.id, m.name, m.first_party_provider.value_or(""), bool_text(m.open_weights)});
  }
  out["models.csv"] = models.to_string();

  csv::Table hardware(kHardwareHeader);
  for (const auto& h : hardware_) {
    hardware.add_row({h.name, format_number(h.tdp_watts), format_number(h.default_pue),
                      format_number(h.sharing_factor)});
  }
  out["hardware.csv"] = hardware.to_string();

  csv::Table regions(kRegionHeader);
  for (const auto& r : regions_) {
    regions.add_row({r.id, format_number(r.grid_intensity), opt_number(r.pue_override)});
  }
  out["regions.csv"] = regions.to_string();

  csv::Table presets(kPresetHeader);
  for (const auto& p : presets_) {
    std::vector<std::string> row = {p.name, format_number(p.input_ratio),
                                    format_number(p.output_ratio)};
    for (auto f : kFactors) row.push_back(format_number(p.weights[f]));
    presets.add_row(std::move(row));
  }
  out["presets.csv"] = presets.to_string();
  return out;
}

void Registry::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : serialize()) csv::write_file(dir / name, text);
}

Registry Registry::load(const std::filesystem::path& dir) {
  auto load_table = [&](const char* name, const std::vector<std::string>& header) {
    auto t = csv::read(dir / name);
    t.expect_header(header);
    return t;
  };

  std::vector<Provider> providers;
  {
    auto t = load_table("providers.csv", kProviderHeader);
    for_each_row(t, [&](std::size_t r) {
      const auto& row = t.rows()[r];
      providers.push_back({row[0], row[1], parse_category(row[2])});
    });
  }
  std::vector<ModelFamily> models;
  {
    auto t = load_table("models.csv", kModelHeader);
    for_each_row(t, [&](std::size_t r) {
      const auto& row = t.rows()[r];
      ModelFamily m{row[0], row[1], std::nullopt, parse_bool(row[3])};
      if (!row[2].empty()) m.first_party_provider = row[2];
      models.push_back(std::move(m));
    });
  }
  std::vector<HardwareClass> hardware;
  if (std::filesystem::exists(dir / "hardware.csv")) {
    auto t = load_table("hardware.csv", kHardwareHeader);
    for_each_row(t, [&](std::size_t r) {
      const auto& row = t.rows()[r];
      hardware.push_back({row[0], parse_number(row[1]), parse_number(row[2]),
                          row[3].empty() ? 1.0 : parse_number(row[3])});
    });
  } else {
    hardware = builtin_hardware_table();
  }
  std::vector<Region> regions;
  {
    auto t = load_table("regions.csv", kRegionHeader);
    for_each_row(t, [&](std::size_t r) {
      const auto& row = t.rows()[r];
      regions.push_back({row[0], parse_number(row[1]), parse_opt_number(row[2])});
    });
  }
  std::vector<WorkloadPreset> presets;
  if (std::filesystem::exists(dir / "presets.csv")) {
    auto t = load_table("presets.csv", kPresetHeader);
    for_each_row(t, [&](std::size_t r) {
      const auto& row = t.rows()[r];
      WorkloadPreset p{row[0], parse_number(row[1]), parse_number(row[2]), {}};
      for (std::size_t i = 0; i < kFactorCount; ++i) p.weights.values[i] = parse_number(row[3 + i]);
      presets.push_back(std::move(p));
    });
  } else {
    presets = builtin_presets();
  }
  std::vector<Endpoint> endpoints;
  {
    auto t = load_table("endpoints.csv", kEndpointHeader);
    for_each_row(t, [&](std::size_t r) {
      const auto& row = t.rows()[r];
      Endpoint e;
      e.id = EndpointId{row[0], row[1], row[2], parse_precision(row[3]), parse_decoding(row[4]),
                        row[5]};
      e.price_input = parse_number(row[6]);
      e.price_output = parse_number(row[7]);
      e.price_cached_input = parse_opt_number(row[8]);
      e.batch_discount = row[9].empty() ? 0.0 : parse_number(row[9]);
      e.advertised_context = parse_int(row[10]);
      e.hardware_class = row[11];
      e.first_party = parse_bool(row[12]);
      e.disclosed_quantization = parse_bool(row[13]);
      endpoints.push_back(std::move(e));
    });
  }
  return Registry(std::move(providers), std::move(models), std::move(hardware),
                  std::move(regions), std::move(endpoints), std::move(presets));
}

}  // namespace epbench
