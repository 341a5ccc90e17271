// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <vector>

#include "epbench/energy.hpp"
#include "epbench/fingerprint.hpp"
#include "epbench/probe.hpp"
#include "epbench/scoring.hpp"

using namespace epbench;

namespace {

Distribution random_distribution(Rng& rng, int support) {
  Distribution d;
  double total = 0.0;
  for (int i = 0; i < support; ++i) {
    const double w = 0.01 + rng.uniform();
    d.push_back({static_cast<std::int32_t>(rng.index(4096)), w});
    total += w;
  }
  for (auto& tp : d) tp.prob /= total;
  return d;
}

void BM_JoulesPerToken(benchmark::State& state) {
  const HardwareClass hw{"Cerebras WSE-3", 23000, 1.20, 1.0};
  EnergyAssumptions a;
  double tps = 2988;
  for (auto _ : state) {
    benchmark::DoNotOptimize(joules_per_token(hw, a, tps));
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_JoulesPerToken);

void BM_SymKl(benchmark::State& state) {
  Rng rng(1);
  const auto p = random_distribution(rng, static_cast<int>(state.range(0)));
  const auto q = random_distribution(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sym_kl(p, q));
}
BENCHMARK(BM_SymKl)->Arg(8)->Arg(20);

void BM_Summarize(benchmark::State& state) {
  Rng rng(2);
  std::vector<ProbeRecord> records(static_cast<std::size_t>(state.range(0)));
  Timestamp t = parse_timestamp("2026-05-01T00:00:00.000000Z");
  for (auto& r : records) {
    r.endpoint = {"p", "m", "base", Precision::BF16, Decoding::Standard, "us-east"};
    r.request_time = t;
    t += std::chrono::minutes(5);
    r.ttft = 0.1 + rng.uniform();
    r.inter_token_gaps.assign(31, 0.01 + 0.001 * rng.uniform());
    r.output_tokens = 32;
    r.total_time = r.ttft + 0.35;
  }
  for (auto _ : state) benchmark::DoNotOptimize(summarize(records));
}
BENCHMARK(BM_Summarize)->Arg(288)->Arg(2880);

void BM_Composite(benchmark::State& state) {
  Rng rng(3);
  const auto presets = builtin_presets();
  std::vector<FactorVector> fvs(static_cast<std::size_t>(state.range(0)));
  for (auto& f : fvs) {
    f.preset = presets.front().name;
    for (auto& v : f.normalized.values) v = rng.uniform();
  }
  for (auto _ : state) {
    std::vector<CompositeScore> scores;
    scores.reserve(fvs.size());
    for (const auto& f : fvs) scores.push_back(composite(f, presets.front()));
    assign_ranks(scores);
    benchmark::DoNotOptimize(scores.data());
  }
}
BENCHMARK(BM_Composite)->Arg(78)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
