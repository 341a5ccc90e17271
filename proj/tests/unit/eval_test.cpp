// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "epbench/eval.hpp"
#include "epbench/sim.hpp"
#include "helpers.hpp"

using namespace epbench;
using namespace epbench::testing;

namespace {

SimFleet fleet_with(double base, double penalty, int answer_tokens = 64, int thinking = 0,
                    std::int64_t cliff = 0) {
  FamilyProfile fam;
  fam.model = "m";
  fam.base_success = base;
  fam.answer_tokens = answer_tokens;
  SimEndpointSpec s;
  s.endpoint_id = eid("p");
  s.accuracy_penalty = penalty;
  s.thinking_tokens = thinking;
  s.context_cliff = cliff;
  s.tokens_per_sec = 500;
  s.seed = 17;
  return spawn_fleet({s}, {fam});
}

EvalRun run_with(double accuracy, const std::string& suite) {
  EvalRun r;
  r.suite = suite;
  r.n_tasks = 10;
  r.n_solved = static_cast<std::int64_t>(std::llround(accuracy * 10));
  r.accuracy = accuracy;
  return r;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("accuracy follows the planted success rate") {
    const SimFleet fleet = fleet_with(0.80, 0.0);
    const auto tasks = make_synthetic_suite({"gsm8k", 100, 1});
    const auto run = run_eval_suite(fleet, make_endpoint(eid("p")), tasks);
    CHECK(run.n_tasks == 100);
    CHECK(std::abs(run.accuracy - 0.80) <= 0.08);
    CHECK(run.accuracy * 100 == doctest::Approx(static_cast<double>(run.n_solved)));
    CHECK_NOTHROW(run.validate());
  }

  TEST_CASE("penalty equal to base success solves nothing") {
    const SimFleet fleet = fleet_with(0.6, 0.6);
    const auto run = run_eval_suite(fleet, make_endpoint(eid("p")), make_synthetic_suite({"gsm8k", 40, 2}));
    CHECK(run.accuracy == 0.0);
    CHECK(std::isnan(run.tokens_to_solution));
  }

  TEST_CASE("tokens to solution averages solved reasoning tasks") {
    const SimFleet fleet = fleet_with(1.0, 0.0, 290);
    SyntheticSuiteSpec spec{"math-500", 10, 3};
    spec.is_reasoning = true;
    const auto run = run_eval_suite(fleet, make_endpoint(eid("p")), make_synthetic_suite(spec));
    CHECK(run.accuracy == 1.0);
    CHECK(run.tokens_to_solution >= 0.9 * 290 - 1);
    CHECK(run.tokens_to_solution <= 1.1 * 290 + 1);
  }

  TEST_CASE("thinking tokens count toward tokens to solution") {
    const SimFleet fleet = fleet_with(1.0, 0.0, 100, 400);
    SyntheticSuiteSpec spec{"aime-2025", 10, 3};
    spec.is_reasoning = true;
    const auto run = run_eval_suite(fleet, make_endpoint(eid("p")), make_synthetic_suite(spec));
    CHECK(run.thinking_tokens == 4000);
    CHECK(run.tokens_to_solution == doctest::Approx(500).epsilon(0.05));
  }

  TEST_CASE("dollar cost matches registry prices exactly") {
    const SimFleet fleet = fleet_with(0.7, 0.0);
    const Endpoint ep = make_endpoint(eid("p"), 0.35, 0.75);
    const auto run = run_eval_suite(fleet, ep, make_synthetic_suite({"gsm8k", 30, 4}));
    const double expected =
        (static_cast<double>(run.input_tokens) * 0.35 + static_cast<double>(run.output_tokens) * 0.75) / 1e6;
    CHECK(std::abs(run.dollar_cost - expected) <= 1e-9);
    CHECK(run.input_tokens > 0);
    CHECK(run.output_tokens > 0);
  }

  TEST_CASE("parallel lanes give the same aggregate") {
    const SimFleet fleet = fleet_with(0.7, 0.0);
    const auto tasks = make_synthetic_suite({"gsm8k", 30, 5});
    const auto serial = run_eval_suite(fleet, make_endpoint(eid("p")), tasks);
    EvalOptions opts;
    opts.parallelism = 4;
    const auto parallel = run_eval_suite(fleet, make_endpoint(eid("p")), tasks, opts);
    CHECK(serial.n_solved == parallel.n_solved);
    CHECK(serial.output_tokens == parallel.output_tokens);
    CHECK(parallel.wall_clock < serial.wall_clock);
  }

  TEST_CASE("run preconditions") {
    const SimFleet fleet = fleet_with(0.7, 0.0);
    CHECK_THROWS_AS(run_eval_suite(fleet, make_endpoint(eid("p")), {}), ValidationError);
    auto tasks = make_synthetic_suite({"gsm8k", 4, 1});
    tasks[1].suite = "other";
    CHECK_THROWS_AS(run_eval_suite(fleet, make_endpoint(eid("p")), tasks), ValidationError);
    CHECK_THROWS_AS(run_eval_suite(fleet, make_endpoint(eid("q")), make_synthetic_suite({"gsm8k", 4, 1})),
                    Error);
  }

  TEST_CASE("verifiers") {
    EvalTask t{"t", "s", "p", 0, Verifier::ExactMatch, "42", false};
    CHECK(verify(t, "the answer is 42"));
    CHECK_FALSE(verify(t, "42 is the answer"));
    t.verifier = Verifier::NumericMatch;
    CHECK(verify(t, "so 42.0"));
    CHECK_FALSE(verify(t, "so 43"));
    t.verifier = Verifier::Contains;
    t.reference_answer = "Hello   World";
    CHECK(verify(t, "well, hello world again"));
    CHECK_FALSE(verify(t, "hello there world"));
    for (auto v : {Verifier::ExactMatch, Verifier::NumericMatch, Verifier::Contains}) {
      CHECK(parse_verifier(to_string(v)) == v);
    }
  }

  TEST_CASE("largest passing level") {
    const std::vector<std::int64_t> levels = {32000, 64000, 90000, 130000};
    CHECK(largest_passing_level(levels, std::vector<double>{1.0, 0.95, 0.90, 0.5}) == 90000);
    CHECK(largest_passing_level(levels, std::vector<double>{1.0, 1.0, 1.0, 1.0}) == 130000);
    CHECK(largest_passing_level(levels, std::vector<double>{0.1, 0.89, 0.5, 0.0}) == 0);
    CHECK_THROWS_AS(largest_passing_level({}, {}), ValidationError);
    const std::vector<std::int64_t> unsorted = {2, 1};
    CHECK_THROWS_AS(largest_passing_level(unsorted, std::vector<double>{1, 1}), ValidationError);
  }

  TEST_CASE("adding a higher passing level never lowers the result") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::int64_t> levels;
      std::vector<double> acc;
      const int n = 1 + static_cast<int>(rng.index(6));
      for (int i = 0; i < n; ++i) {
        levels.push_back(1000 * (i + 1));
        acc.push_back(rng.uniform());
      }
      const auto before = largest_passing_level(levels, acc);
      levels.push_back(1000 * (n + 1));
      acc.push_back(0.9 + 0.1 * rng.uniform());
      CHECK(largest_passing_level(levels, acc) >= before);
    }
  }

  TEST_CASE("effective context finds the planted cliff") {
    const SimFleet fleet = fleet_with(1.0, 0.0, 8, 0, 100000);
    auto family = [](std::int64_t level) {
      SyntheticSuiteSpec spec{"ruler", 20, 9};
      spec.context_length = level;
      spec.verifier = Verifier::ExactMatch;
      return make_synthetic_suite(spec);
    };
    const std::vector<std::int64_t> levels = {32000, 64000, 90000, 130000};
    const auto res = effective_context(fleet, make_endpoint(eid("p")), family, levels);
    CHECK(res.tokens == 90000);
    REQUIRE(res.runs.size() == 4);
    CHECK(res.runs[2].accuracy == 1.0);
    CHECK(res.runs[3].accuracy < 0.9);
    CHECK(res.runs[3].context_length == 130000);
  }

  TEST_CASE("synthetic context tasks hit their length") {
    SyntheticSuiteSpec spec{"ruler", 3, 1};
    spec.context_length = 1000;
    for (const auto& t : make_synthetic_suite(spec)) {
      CHECK(count_tokens(t.prompt) == 1000);
      CHECK(t.context_length == 1000);
      CHECK_NOTHROW(t.validate());
    }
  }

  TEST_CASE("quality composite examples") {
    const std::vector<EvalRun> perfect = {run_with(1.0, "a"), run_with(1.0, "b")};
    const std::vector<std::string> suites = {"a", "b"};
    CHECK(quality_composite(perfect, uniform_suite_weights(suites)).q == doctest::Approx(100));
    const std::vector<EvalRun> mixed = {run_with(0.6, "a"), run_with(0.8, "b")};
    const auto q = quality_composite(mixed, {{"a", 0.5}, {"b", 0.5}});
    CHECK(q.q == doctest::Approx(70));
    CHECK(q.breakdown.at("a") == 0.6);
    CHECK_THROWS_AS(quality_composite(mixed, {{"a", 0.5}, {"c", 0.5}}), ValidationError);
    CHECK_THROWS_AS(quality_composite(mixed, {{"a", 0.5}, {"b", 0.4}}), ValidationError);
  }

  TEST_CASE("quality composite is linear in accuracies") {
    Rng rng(6);
    const std::map<std::string, double> w = {{"a", 0.2}, {"b", 0.3}, {"c", 0.5}};
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<EvalRun> runs;
      for (const auto& [suite, _] : w) runs.push_back(run_with(rng.uniform(), suite));
      const double c = rng.uniform();
      auto scaled = runs;
      for (auto& r : scaled) r.accuracy *= c;
      CHECK(quality_composite(scaled, w).q ==
            doctest::Approx(c * quality_composite(runs, w).q).epsilon(1e-12));
    }
  }

  TEST_CASE("task files round-trip") {
    TempDir tmp;
    SyntheticSuiteSpec spec{"math-500", 5, 2};
    spec.is_reasoning = true;
    const auto tasks = make_synthetic_suite(spec);
    save_eval_tasks_csv(tmp.path() / "eval_tasks.csv", tasks);
    const auto back = load_eval_tasks_csv(tmp.path() / "eval_tasks.csv");
    REQUIRE(back.size() == tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      CHECK(back[i].id == tasks[i].id);
      CHECK(back[i].prompt == tasks[i].prompt);
      CHECK(back[i].reference_answer == tasks[i].reference_answer);
      CHECK(back[i].is_reasoning);
    }
  }
}
