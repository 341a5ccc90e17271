// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "epbench/pipeline.hpp"
#include "epbench/sim.hpp"
#include "helpers.hpp"

using namespace epbench;
using namespace epbench::testing;

TEST_SUITE("pipeline") {
  TEST_CASE("fixture derived tables reproduce from its raw tables") {
    const auto& board = fixture_board();
    Snapshot raw;
    raw.version = board.snapshot().version;
    raw.as_of = board.snapshot().as_of;
    raw.registry_hash = board.snapshot().registry_hash;
    raw.probe_records = board.snapshot().probe_records;
    raw.eval_runs = board.snapshot().eval_runs;
    raw.fingerprints = board.snapshot().fingerprints;
    const auto config = PipelineConfig::from_settings(board.snapshot().settings);
    const auto again = derive(board.registry(), raw, config);
    const auto want = snapshot_files(board.snapshot());
    const auto got = snapshot_files(again);
    REQUIRE(got.size() == want.size());
    for (const auto& [name, text] : want) CHECK_MESSAGE(got.at(name) == text, name);
  }

  TEST_CASE("settings round-trip") {
    PipelineConfig c;
    c.window_hours = 12;
    c.fidelity_z = 0.1;
    c.use_ttfv = true;
    c.cache_hit = 0.25;
    c.suite_weights = {{"mmlu-pro", 0.6}, {"math-500", 0.4}};
    const auto back = PipelineConfig::from_settings(c.to_settings());
    CHECK(back.to_settings() == c.to_settings());
    CHECK(back.use_ttfv);
    CHECK(back.cache_hit == 0.25);
    CHECK(PipelineConfig::from_settings({}).to_settings() == PipelineConfig{}.to_settings());
  }

  TEST_CASE("invalid configs are rejected") {
    PipelineConfig c;
    c.window_hours = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = PipelineConfig{};
    c.quality_suites.clear();
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }

  TEST_CASE("latest run per suite skips context sweeps") {
    const auto id = eid("p");
    const Timestamp t0 = board_as_of();
    auto run = [&](std::string suite, int hours_ago, std::int64_t ctx, double acc) {
      EvalRun r;
      r.endpoint = id;
      r.suite = std::move(suite);
      r.window = {t0 - std::chrono::hours(hours_ago + 1), t0 - std::chrono::hours(hours_ago)};
      r.context_length = ctx;
      r.accuracy = acc;
      return r;
    };
    const std::vector<EvalRun> runs = {run("math-500", 5, 0, 0.5), run("math-500", 1, 0, 0.7),
                                       run("math-500", 0, 32000, 0.1), run("ifbench", 3, 0, 0.6)};
    const auto latest = latest_runs(runs, id);
    REQUIRE(latest.size() == 2);
    CHECK(latest.at("math-500").accuracy == 0.7);
    CHECK(latest.at("ifbench").accuracy == 0.6);
    CHECK(latest_runs(runs, eid("q")).empty());
  }

  TEST_CASE("planted board recovers planted factors") {
    const auto board = planted_board({{make_endpoint(eid("a")), 0.2, 100, 0.8},
                                      {make_endpoint(eid("b")), 0.4, 50, 0.6}});
    const auto* a = board->measures(eid("a"));
    REQUIRE(a);
    REQUIRE(a->latency);
    CHECK(a->latency->ttft_p50 == doctest::Approx(0.2));
    CHECK(a->latency->output_speed == doctest::Approx(100));
    REQUIRE(a->quality);
    CHECK(a->quality->q == doctest::Approx(80));
    const auto top = board->rank("chat", "full");
    REQUIRE(top.size() == 2);
    CHECK(top[0].endpoint == eid("a"));
  }

  TEST_CASE("a short simulation yields a consistent snapshot") {
    const Registry registry = Registry::load(fixture_dir() / "registry");
    const SimFleet fleet(load_fleet_csv(fixture_dir() / "sim_fleet.csv"),
                         load_families_csv(fixture_dir() / "sim_families.csv"));
    SimulationOptions o;
    o.start = board_as_of();
    o.cadence_seconds = 3600;
    o.tasks_per_suite = 5;
    o.tasks_per_context_level = 2;
    o.context_levels = {32000};
    const auto snap = simulate(registry, fleet, PipelineConfig{}, o);
    CHECK_NOTHROW(snap.validate(registry));
    CHECK(snap.as_of == board_as_of() + std::chrono::hours(24));
    CHECK_FALSE(snap.probe_records.empty());
    CHECK_FALSE(snap.composite_scores.empty());
    const auto again = simulate(registry, fleet, PipelineConfig{}, o);
    CHECK(snapshot_files(again) == snapshot_files(snap));
  }
}
