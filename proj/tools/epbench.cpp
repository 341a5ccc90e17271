// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epbench/analysis.hpp"
#include "epbench/csv.hpp"
#include "epbench/pipeline.hpp"
#include "epbench/service.hpp"
#include "epbench/sim.hpp"
#include "epbench/store.hpp"

namespace fs = std::filesystem;
using namespace epbench;

namespace {

struct Options {
  std::string snapshot;
  std::string registry;
  std::string out = ".";
};

Registry load_registry(const Options& o) {
  if (!o.registry.empty()) return Registry::load(o.registry);
  if (!o.snapshot.empty()) return import_snapshot(o.snapshot).registry;
  throw ValidationError("need --registry or --snapshot (or TA_SNAPSHOT)");
}

Leaderboard load_board(const Options& o) {
  if (o.snapshot.empty()) throw ValidationError("need --snapshot (or TA_SNAPSHOT)");
  if (!o.registry.empty()) {
    auto registry = Registry::load(o.registry);
    auto snapshot = import_snapshot(o.snapshot, registry);
    return Leaderboard(std::move(registry), std::move(snapshot));
  }
  auto loaded = import_snapshot(o.snapshot);
  return Leaderboard(std::move(loaded.registry), std::move(loaded.snapshot));
}

void print(const csv::Table& t) {
  std::vector<std::size_t> width(t.header().size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  };
  widen(t.header());
  for (const auto& r : t.rows()) widen(r);
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::cout << (i ? "  " : "") << row[i];
      if (i + 1 < row.size()) std::cout << std::string(width[i] - row[i].size(), ' ');
    }
    std::cout << "\n";
  };
  line(t.header());
  for (const auto& r : t.rows()) line(r);
}

void emit(const Options& o, const std::string& name, const csv::Table& table) {
  fs::create_directories(o.out);
  csv::write(fs::path(o.out) / name, table);
}

// Rounds halves away from zero, so 3.25 prints as 3.3.
std::string fixed(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, std::round(v * scale) / scale);
  return buf;
}

// Human-readable view of the within-model table; the CSV keeps canonical numbers.
csv::Table within_model_display(const WithinModelRange& r) {
  csv::Table t({"axis", "min", "max", "ratio/gap"});
  for (const auto& row : r.rows) {
    const int digits = std::abs(row.max) < 1.0 ? 3 : std::abs(row.max) < 100.0 ? 2 : 1;
    const auto gap = row.gap_kind == GapKind::Ratio ? fixed(row.gap, 1) + "x"
                                                    : fixed(row.gap, 1) + " pts";
    t.add_row({row.axis, fixed(row.min, digits), fixed(row.max, digits), gap});
  }
  return t;
}

std::vector<std::string> fidelity_suites(const Leaderboard& board) {
  const auto& c = board.config();
  return {c.headline_suite, c.aime_suite, c.code_suite};
}

// Every analysis CSV for one snapshot.
void write_all(const Leaderboard& board, const Options& o, const std::string& model) {
  emit(o, "within_model.csv", to_table(within_model(board, model)));
  emit(o, "loo.csv", to_table(leave_one_out(board, model)));
  const auto suites = fidelity_suites(board);
  emit(o, "fingerprint_by_sku.csv", to_table(fidelity_groups(board, model, suites), suites));
  emit(o, "overlap.csv", to_table(overlap_matrix(board, kOverlapPresets)));
  emit(o, "ablation.csv", to_table(ablation_report(board, "chat")));
  emit(o, "sensitivity.csv", to_table(sensitivity_report(board, kOverlapPresets)));
  std::vector<BootstrapCI> cis;
  const auto top = board.rank("chat", "full");
  for (std::size_t i = 0; i < std::min<std::size_t>(20, top.size()); ++i) {
    cis.push_back(bootstrap_ci(board, top[i].endpoint, "chat", 200, 0));
  }
  emit(o, "bootstrap.csv", to_table(cis));
  emit(o, "registry_summary.csv", to_table(registry_summary(board.registry())));
  emit(o, "tdp_table.csv", to_table(board.registry().hardware()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Endpoint-level inference benchmark: simulation, scoring, analyses and the read API.\n"
      "Analysis subcommands replace the reproduction scripts of the same name\n"
      "(within_model.py, fingerprint_by_sku.py, preset_overlap.py, factor_ablation.py,\n"
      "registry_summary.py, tdp_table.py, sensitivity.py, bootstrap.py)."};
  app.require_subcommand(1);
  Options o;
  if (const char* env = std::getenv("TA_SNAPSHOT")) o.snapshot = env;
  app.add_option("--snapshot", o.snapshot, "Snapshot directory (default $TA_SNAPSHOT)");
  app.add_option("--registry", o.registry, "Registry directory (default: bundled with the snapshot)");
  app.add_option("--out", o.out, "Directory for CSV output");

  std::function<void()> run;

  std::string model = "gpt-oss-120b";
  auto* within = app.add_subcommand("within-model", "Cross-endpoint ranges on one model (within_model.py)");
  within->add_option("--model", model, "Model id")->required();
  within->callback([&] {
    run = [&] {
      const auto board = load_board(o);
      const auto r = within_model(board, model);
      emit(o, "within_model.csv", to_table(r));
      std::cout << r.model << " (" << r.n_endpoints << " endpoints)\n";
      print(within_model_display(r));
    };
  });

  std::string loo_model = "gpt-oss-120b";
  auto* loo = app.add_subcommand("leave-one-out", "Stability of within-model ratios to single drops");
  loo->add_option("--model", loo_model, "Model id");
  loo->callback([&] {
    run = [&] {
      const auto t = to_table(leave_one_out(load_board(o), loo_model));
      emit(o, "loo.csv", t);
      print(t);
    };
  });

  std::string sku_model = "gpt-oss-120b";
  auto* sku = app.add_subcommand("fingerprint-by-sku", "Fidelity by SKU class (fingerprint_by_sku.py)");
  sku->add_option("--model", sku_model, "Model id");
  sku->callback([&] {
    run = [&] {
      const auto board = load_board(o);
      const auto suites = fidelity_suites(board);
      const auto t = to_table(fidelity_groups(board, sku_model, suites), suites);
      emit(o, "fingerprint_by_sku.csv", t);
      print(t);
    };
  });

  std::size_t k = 10;
  std::string overlap_scope = "full";
  auto* overlap = app.add_subcommand("preset-overlap", "Top-k overlap between presets (preset_overlap.py)");
  overlap->add_option("--k", k, "List length")->check(CLI::PositiveNumber);
  overlap->add_option("--scope", overlap_scope, "full or cohort:<model>");
  overlap->callback([&] {
    run = [&] {
      const auto t = to_table(overlap_matrix(load_board(o), kOverlapPresets, k, overlap_scope));
      emit(o, "overlap.csv", t);
      print(t);
    };
  });

  std::string ablation_preset = "chat";
  auto* ablation = app.add_subcommand("factor-ablation", "Zero one factor at a time (factor_ablation.py)");
  ablation->add_option("--preset", ablation_preset, "Preset name")->required();
  ablation->callback([&] {
    run = [&] {
      const auto t = to_table(ablation_report(load_board(o), ablation_preset));
      emit(o, "ablation.csv", t);
      print(t);
    };
  });

  auto* summary = app.add_subcommand("registry-summary", "Endpoints per provider category (registry_summary.py)");
  summary->callback([&] {
    run = [&] {
      const auto t = to_table(registry_summary(load_registry(o)));
      emit(o, "registry_summary.csv", t);
      print(t);
    };
  });

  auto* tdp = app.add_subcommand("tdp-table", "Hardware TDP and PUE table (tdp_table.py)");
  tdp->callback([&] {
    run = [&] {
      const auto hw = o.registry.empty() && o.snapshot.empty() ? builtin_hardware_table()
                                                               : load_registry(o).hardware();
      const auto t = to_table(hw);
      emit(o, "tdp_table.csv", t);
      print(t);
    };
  });

  double delta = 0.10;
  bool one_sign = false;
  auto* sensitivity = app.add_subcommand("sensitivity", "Single-factor weight perturbations (sensitivity.py)");
  sensitivity->add_option("--delta", delta, "Perturbation in weight units");
  sensitivity->add_flag("--positive-only", one_sign, "Only the +delta perturbations");
  sensitivity->callback([&] {
    run = [&] {
      const auto t = to_table(sensitivity_report(load_board(o), kOverlapPresets, delta, !one_sign));
      emit(o, "sensitivity.csv", t);
      print(t);
    };
  });

  std::vector<std::string> endpoints;
  std::string boot_preset = "chat";
  std::string boot_scope = "full";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::size_t top = 0;
  auto* boot = app.add_subcommand("bootstrap", "Bootstrap intervals on composite scores (bootstrap.py)");
  boot->add_option("--endpoint", endpoints, "Endpoint id (provider/model/sku/precision/decoding/region)");
  boot->add_option("--top", top, "Bootstrap the preset's top N instead");
  boot->add_option("--preset", boot_preset, "Preset name")->required();
  boot->add_option("--scope", boot_scope, "full or cohort:<model>");
  boot->add_option("--n", n, "Resamples")->check(CLI::PositiveNumber);
  boot->add_option("--seed", seed, "Seed");
  boot->callback([&] {
    if (endpoints.empty() && top == 0) throw CLI::ValidationError("bootstrap", "need --endpoint or --top");
    run = [&] {
      const auto board = load_board(o);
      std::vector<EndpointId> ids;
      for (const auto& e : endpoints) ids.push_back(EndpointId::parse(e));
      if (top > 0) {
        const auto ranked = board.rank(boot_preset, boot_scope);
        for (std::size_t i = 0; i < std::min(top, ranked.size()); ++i) ids.push_back(ranked[i].endpoint);
      }
      std::vector<BootstrapCI> cis;
      for (const auto& id : ids) cis.push_back(bootstrap_ci(board, id, boot_preset, n, seed, boot_scope));
      const auto t = to_table(cis);
      emit(o, "bootstrap.csv", t);
      print(t);
    };
  });

  std::string fleet_path, families_path, version = "sim";
  int days = 1;
  bool virtual_clock = false;
  bool analyze = false;
  std::uint64_t sim_seed = 1;
  std::string start = "2026-05-01T00:00:00.000000Z";
  auto* sim = app.add_subcommand("simulate", "Probe, eval and fingerprint the simulated fleet, then score");
  sim->add_option("--fleet", fleet_path, "sim_fleet.csv")->required();
  sim->add_option("--families", families_path, "sim_families.csv (default: next to the fleet)");
  sim->add_option("--days", days, "Virtual days to run")->check(CLI::PositiveNumber);
  sim->add_option("--version", version, "Snapshot version label");
  sim->add_option("--seed", sim_seed, "Seed for prompts and tasks");
  sim->add_option("--start", start, "Start timestamp (ISO-8601 UTC)");
  sim->add_flag("--virtual-clock", virtual_clock, "Do not sleep to match event timestamps");
  sim->add_flag("--analyze", analyze, "Also write every analysis CSV into the snapshot directory");
  sim->callback([&] {
    run = [&] {
      if (o.registry.empty()) throw ValidationError("simulate needs --registry");
      const auto registry = Registry::load(o.registry);
      if (families_path.empty()) {
        const auto sibling = fs::path(fleet_path).parent_path() / "sim_families.csv";
        if (fs::exists(sibling)) families_path = sibling.string();
      }
      SimOptions sim_options;
      sim_options.real_time = !virtual_clock;
      const SimFleet fleet(load_fleet_csv(fleet_path),
                           families_path.empty() ? std::vector<FamilyProfile>{}
                                                 : load_families_csv(families_path),
                           sim_options);
      SimulationOptions opts;
      opts.start = parse_timestamp(start);
      opts.days = days;
      opts.version = version;
      opts.seed = sim_seed;
      const PipelineConfig config;
      auto snapshot = simulate(registry, fleet, config, opts);
      const auto dir = export_snapshot(snapshot, registry, o.out);
      std::cout << "snapshot " << dir.string() << ": " << snapshot.probe_records.size()
                << " probes, " << snapshot.eval_runs.size() << " eval runs, "
                << snapshot.composite_scores.size() << " composite scores\n";
      if (analyze) {
        const Leaderboard board(registry, std::move(snapshot));
        Options a = o;
        a.out = (dir / "analysis").string();
        write_all(board, a, model);
        std::cout << "analyses " << a.out << "\n";
      }
    };
  });

  auto* reproduce = app.add_subcommand("reproduce", "Write every analysis CSV for a snapshot");
  reproduce->add_option("--model", model, "Model for the within-model analyses");
  reproduce->callback([&] { run = [&] { write_all(load_board(o), o, model); }; });

  std::string listen = "127.0.0.1:8080";
  auto* srv = app.add_subcommand("serve", "Serve the read-side JSON API");
  srv->add_option("--listen", listen, "host:port");
  srv->callback([&] {
    run = [&] {
      ApiService service(load_leaderboard(o.snapshot));
      std::cerr << "serving " << o.snapshot << " on " << listen << "\n";
      serve(service, listen);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    run();
  } catch (const std::exception& e) {
    std::cerr << "epbench: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
