// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "epbench/probe.hpp"
#include "epbench/sim.hpp"
#include "helpers.hpp"

using namespace epbench;
using namespace epbench::testing;

namespace {

SimEndpointSpec spec_for(const EndpointId& id, std::uint64_t seed = 1) {
  SimEndpointSpec s;
  s.endpoint_id = id;
  s.ttft_median = 0.25;
  s.ttft_log_sigma = 0.3;
  s.tokens_per_sec = 200.0;
  s.jitter_cv = 0.2;
  s.seed = seed;
  return s;
}

StreamRequest request(std::string prompt, std::uint64_t seed = 0, int top_k = 0) {
  StreamRequest r;
  r.prompt = std::move(prompt);
  r.max_tokens = 64;
  r.seed = seed;
  r.logprobs_top_k = top_k;
  return r;
}

bool same_events(const std::vector<StreamEvent>& a, const std::vector<StreamEvent>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].kind != b[i].kind || a[i].time != b[i].time || a[i].token != b[i].token ||
        a[i].text != b[i].text || a[i].top_logprobs.size() != b[i].top_logprobs.size()) {
      return false;
    }
    for (std::size_t k = 0; k < a[i].top_logprobs.size(); ++k) {
      if (a[i].top_logprobs[k].token != b[i].top_logprobs[k].token ||
          a[i].top_logprobs[k].logprob != b[i].top_logprobs[k].logprob) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("fleet of nineteen") {
    std::vector<SimEndpointSpec> specs;
    for (int i = 0; i < 19; ++i) specs.push_back(spec_for(eid("p" + std::to_string(i), "gpt-oss-120b")));
    CHECK(spawn_fleet(specs).size() == 19);
  }

  TEST_CASE("empty fleet rejects requests") {
    const SimFleet fleet = spawn_fleet({});
    CHECK(fleet.size() == 0);
    CHECK_THROWS_AS(serve_stream(fleet, eid("p"), request("hello")), NotFoundError);
  }

  TEST_CASE("duplicate ids and bad specs are rejected") {
    CHECK_THROWS_AS(spawn_fleet({spec_for(eid("p")), spec_for(eid("p"))}), ValidationError);
    auto s = spec_for(eid("p"));
    s.tokens_per_sec = 0;
    CHECK_THROWS_AS(spawn_fleet({s}), ValidationError);
    s = spec_for(eid("p"));
    s.accuracy_penalty = 1.0;
    CHECK_THROWS_AS(spawn_fleet({s}), ValidationError);
  }

  TEST_CASE("only temperature zero is supported") {
    const SimFleet fleet = spawn_fleet({spec_for(eid("p"))});
    auto r = request("hello");
    r.temperature = 0.7;
    CHECK_THROWS_AS(serve_stream(fleet, eid("p"), r), ValidationError);
  }

  TEST_CASE("identical fleets answer identically") {
    const std::vector<SimEndpointSpec> specs = {spec_for(eid("a")), spec_for(eid("b"), 2)};
    const SimFleet one = spawn_fleet(specs);
    const SimFleet two = spawn_fleet(specs);
    for (std::uint64_t n = 0; n < 20; ++n) {
      for (const auto& s : specs) {
        const auto r = request("prompt " + std::to_string(n % 3), n, 5);
        CHECK(same_events(serve_stream(one, s.endpoint_id, r), serve_stream(two, s.endpoint_id, r)));
      }
    }
  }

  TEST_CASE("different request seeds vary timing") {
    const SimFleet fleet = spawn_fleet({spec_for(eid("a"))});
    const auto a = serve_stream(fleet, eid("a"), request("x", 1));
    const auto b = serve_stream(fleet, eid("a"), request("x", 2));
    CHECK(a.front().time != b.front().time);
  }

  TEST_CASE("timestamps strictly increase and top-k mass is at most one") {
    const SimFleet fleet = spawn_fleet({spec_for(eid("a"))});
    for (std::uint64_t n = 0; n < 10; ++n) {
      const auto events = serve_stream(fleet, eid("a"), request("hello world", n, 20));
      REQUIRE(events.size() == 65);
      CHECK(events.back().kind == EventKind::Done);
      for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i].time > events[i - 1].time);
      for (const auto& ev : events) {
        if (ev.kind != EventKind::Token) continue;
        double mass = 0.0;
        for (const auto& lp : ev.top_logprobs) mass += std::exp(lp.logprob);
        CHECK(mass <= 1.0 + 1e-12);
      }
    }
  }

  TEST_CASE("epsilon zero reproduces the reference exactly") {
    const SimFleet fleet = spawn_fleet({spec_for(eid("a", "fam"))});
    for (int pos = 0; pos < 16; ++pos) {
      CHECK(fleet.endpoint_distribution(eid("a", "fam"), "some prompt", pos) ==
            fleet.reference_distribution("fam", "some prompt", pos));
    }
  }

  TEST_CASE("perturbed distributions differ and stay normalized") {
    auto s = spec_for(eid("a", "fam"));
    s.perturbation_epsilon = 0.3;
    const SimFleet fleet = spawn_fleet({s});
    for (int pos = 0; pos < 16; ++pos) {
      const auto d = fleet.endpoint_distribution(eid("a", "fam"), "some prompt", pos);
      CHECK_FALSE(d == fleet.reference_distribution("fam", "some prompt", pos));
      double mass = 0.0;
      for (const auto& tp : d) {
        CHECK(tp.prob > 0.0);
        mass += tp.prob;
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i - 1].prob >= d[i].prob);
    }
  }

  TEST_CASE("error rate one always errors") {
    auto s = spec_for(eid("a"));
    s.error_rate = 1.0;
    const SimFleet fleet = spawn_fleet({s});
    for (std::uint64_t n = 0; n < 50; ++n) {
      const auto events = serve_stream(fleet, eid("a"), request("x", n));
      REQUIRE(events.size() == 1);
      CHECK(events.front().kind == EventKind::Error);
    }
  }

  TEST_CASE("ttft median and speed are recovered from probes") {
    SimEndpointSpec s = spec_for(eid("a"));
    s.ttft_median = 0.25;
    s.tokens_per_sec = 400.0;
    const SimFleet fleet = spawn_fleet({s});
    std::vector<double> ttfts;
    double tokens = 0.0, decode = 0.0;
    for (std::uint64_t n = 0; n < 500; ++n) {
      const auto rec = run_probe(fleet, eid("a"), default_conditions(), "probe prompt", 60.0,
                                 {static_cast<double>(n) * 300.0, n, 256, {}});
      REQUIRE(rec.status == ProbeStatus::Ok);
      ttfts.push_back(rec.ttft);
      tokens += static_cast<double>(rec.output_tokens);
      decode += rec.total_time - rec.ttft;
    }
    std::sort(ttfts.begin(), ttfts.end());
    CHECK(std::abs(nearest_rank(ttfts, 0.5) / 0.25 - 1.0) < 0.05);
    CHECK(std::abs(tokens / decode / 400.0 - 1.0) < 0.05);
  }

  TEST_CASE("thinking segment precedes visible tokens") {
    auto s = spec_for(eid("a"));
    s.thinking_tokens = 10;
    const SimFleet fleet = spawn_fleet({s});
    const auto events = serve_stream(fleet, eid("a"), request("x"));
    for (int i = 0; i < 10; ++i) CHECK(events[static_cast<std::size_t>(i)].thinking);
    CHECK_FALSE(events[10].thinking);
  }

  TEST_CASE("synthetic tasks are answered per family success") {
    FamilyProfile fam;
    fam.model = "fam";
    fam.base_success = 1.0;
    auto s = spec_for(eid("a", "fam"));
    const SimFleet fleet = spawn_fleet({s}, {fam});
    const auto task = solve_task("[suite:gsm8k] Compute 12 + 30 .");
    REQUIRE(task);
    CHECK(task->suite == "gsm8k");
    CHECK(task->answer == "42");
    const auto events = serve_stream(fleet, eid("a", "fam"), request("[suite:gsm8k] Compute 12 + 30 ."));
    std::string last;
    for (const auto& ev : events) {
      if (ev.kind == EventKind::Token) last = ev.text;
    }
    CHECK(last == "42");
    CHECK_FALSE(solve_task("just chatting"));
  }

  TEST_CASE("fleet and family files round-trip") {
    TempDir tmp;
    std::vector<SimEndpointSpec> specs = {spec_for(eid("a")), spec_for(eid("b"), 7)};
    specs[1].perturbation_epsilon = 0.125;
    specs[1].context_cliff = 90000;
    specs[1].supports_logprobs = false;
    save_fleet_csv(tmp.path() / "fleet.csv", specs);
    const auto back = load_fleet_csv(tmp.path() / "fleet.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[1].endpoint_id == specs[1].endpoint_id);
    CHECK(back[1].perturbation_epsilon == 0.125);
    CHECK(back[1].context_cliff == 90000);
    CHECK_FALSE(back[1].supports_logprobs);
    CHECK(back[1].seed == 7);

    FamilyProfile fam;
    fam.model = "fam";
    fam.base_success = 0.7;
    fam.suite_success = {{"aime-2025", 0.5}};
    save_families_csv(tmp.path() / "families.csv", {fam});
    const auto fams = load_families_csv(tmp.path() / "families.csv");
    REQUIRE(fams.size() == 1);
    CHECK(fams[0].success("aime-2025") == 0.5);
    CHECK(fams[0].success("other") == 0.7);
  }
}
