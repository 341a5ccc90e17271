// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "epbench/energy.hpp"
#include "epbench/pipeline.hpp"
#include "epbench/registry.hpp"
#include "epbench/service.hpp"

namespace epbench::testing {

inline std::filesystem::path fixture_dir() { return EPBENCH_FIXTURE_DIR; }
inline std::filesystem::path fixture_snapshot() { return fixture_dir() / "snapshot" / "v1.0"; }

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("epbench-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline EndpointId eid(std::string provider, std::string model = "m",
                      Precision precision = Precision::BF16, std::string region = "us-east",
                      std::string sku = "base") {
  return {std::move(provider), std::move(model), std::move(sku), precision,
          Decoding::Standard, std::move(region)};
}

inline Endpoint make_endpoint(EndpointId id, double price_in = 0.1, double price_out = 0.5,
                              std::string hardware = "NVIDIA H100 SXM5") {
  Endpoint e;
  e.id = std::move(id);
  e.price_input = price_in;
  e.price_output = price_out;
  e.advertised_context = 131072;
  e.hardware_class = std::move(hardware);
  return e;
}

/// A registry around `endpoints` with generated providers and open-weight
/// models plus the built-in hardware, region and preset tables.
inline Registry make_registry(std::vector<Endpoint> endpoints) {
  std::set<std::string> providers, models;
  for (const auto& e : endpoints) {
    providers.insert(e.id.provider);
    models.insert(e.id.model);
  }
  std::vector<Provider> ps;
  for (const auto& p : providers) ps.push_back({p, p, ProviderCategory::ServerlessGpu});
  std::vector<ModelFamily> ms;
  for (const auto& m : models) ms.push_back({m, m, std::nullopt, true});
  return Registry(ps, ms, builtin_hardware_table(), builtin_regions(), std::move(endpoints),
                  builtin_presets());
}

/// Measurements planted for one endpoint of a synthetic board.
struct Planted {
  Endpoint endpoint;
  double ttft = 0.2;
  double speed = 100.0;
  double accuracy = 0.8;
  int n_probes = 10;
};

inline Timestamp board_as_of() { return parse_timestamp("2026-05-01T00:00:00.000000Z"); }

/// Raw snapshot whose probes and eval runs are all identical per endpoint.
inline Snapshot planted_raw(const std::vector<Planted>& planted, const PipelineConfig& config) {
  Snapshot raw;
  raw.version = "test";
  raw.as_of = board_as_of();
  for (const auto& p : planted) {
    for (int i = 0; i < p.n_probes; ++i) {
      ProbeRecord r;
      r.endpoint = p.endpoint.id;
      r.conditions = config.conditions;
      r.request_time = raw.as_of - std::chrono::minutes(5 * (i + 1));
      r.ttft = p.ttft;
      r.output_tokens = 32;
      r.inter_token_gaps.assign(31, 1.0 / p.speed);
      r.total_time = p.ttft + 32.0 / p.speed;
      r.response_hash = std::string(64, '0');
      r.prompt_set_day = date_of(r.request_time);
      raw.probe_records.push_back(r);
    }
    for (const auto& suite : config.quality_suites) {
      EvalRun run;
      run.endpoint = p.endpoint.id;
      run.suite = suite;
      run.window = {raw.as_of - std::chrono::hours(2), raw.as_of - std::chrono::hours(1)};
      run.n_tasks = 100;
      run.n_solved = static_cast<std::int64_t>(std::llround(p.accuracy * 100));
      run.accuracy = static_cast<double>(run.n_solved) / 100.0;
      run.tokens_to_solution = 1000.0;
      run.input_tokens = 10000;
      run.output_tokens = 20000;
      run.wall_clock = 60.0;
      run.dollar_cost = (run.input_tokens * p.endpoint.price_input +
                         run.output_tokens * p.endpoint.price_output) / 1e6;
      raw.eval_runs.push_back(run);
    }
  }
  return raw;
}

inline std::shared_ptr<const Leaderboard> planted_board(const std::vector<Planted>& planted) {
  std::vector<Endpoint> eps;
  for (const auto& p : planted) eps.push_back(p.endpoint);
  Registry registry = make_registry(eps);
  PipelineConfig config;
  Snapshot derived = derive(registry, planted_raw(planted, config), config);
  return std::make_shared<const Leaderboard>(std::move(registry), std::move(derived));
}

/// The committed fixture, imported once per process.
inline std::shared_ptr<const Leaderboard> fixture_board_ptr() {
  static const std::shared_ptr<const Leaderboard> board = load_leaderboard(fixture_snapshot());
  return board;
}
inline const Leaderboard& fixture_board() { return *fixture_board_ptr(); }

}  // namespace epbench::testing
