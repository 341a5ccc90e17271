// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "epbench/csv.hpp"
#include "epbench/scoring.hpp"
#include "helpers.hpp"

using namespace epbench;
using namespace epbench::testing;

namespace {

const WorkloadPreset& preset(const std::string& name) {
  static const auto presets = builtin_presets();
  for (const auto& p : presets) {
    if (p.name == name) return p;
  }
  throw NotFoundError(name);
}

EndpointFactors factors(const EndpointId& id, double speed, double ttft, double quality,
                        double reliability) {
  return {id, speed, ttft, quality, reliability};
}

}  // namespace

TEST_SUITE("scoring") {
  TEST_CASE("blended price examples") {
    const Endpoint e = make_endpoint(eid("p"), 0.1, 0.5);
    CHECK(blended_price(e, preset("chat")) == doctest::Approx(0.20));
    const Endpoint flat = make_endpoint(eid("p"), 0.7, 0.7);
    CHECK(blended_price(flat, 1, 1) == doctest::Approx(0.7));
    CHECK(blended_price(e, preset("rag")) < blended_price(e, preset("chat")));
  }

  TEST_CASE("cache hits use the cached-input price") {
    Endpoint e = make_endpoint(eid("p"), 1.0, 2.0);
    e.price_cached_input = 0.25;
    CHECK(blended_price(e, 1, 1, 1.0) == doctest::Approx(0.5 * 0.25 + 0.5 * 2.0));
    CHECK(blended_price(e, 1, 1, 0.5) == doctest::Approx(0.5 * 0.625 + 0.5 * 2.0));
  }

  TEST_CASE("min-max normalization") {
    CHECK(minmax_normalize(std::vector<double>{248, 2988}, Orientation::HigherBetter) ==
          std::vector<double>{0.0, 1.0});
    CHECK(minmax_normalize(std::vector<double>{5}, Orientation::HigherBetter) == std::vector<double>{1.0});
    CHECK(minmax_normalize(std::vector<double>{0.18, 0.36}, Orientation::LowerBetter) ==
          std::vector<double>{1.0, 0.0});
    CHECK(minmax_normalize(std::vector<double>{3, 3, 3}, Orientation::LowerBetter) ==
          std::vector<double>{1.0, 1.0, 1.0});
    const auto mid = minmax_normalize(std::vector<double>{0, 5, 10}, Orientation::HigherBetter);
    CHECK(mid[1] == 0.5);
    CHECK(orientation(Factor::Ttft) == Orientation::LowerBetter);
    CHECK(orientation(Factor::Price) == Orientation::LowerBetter);
    CHECK(orientation(Factor::Speed) == Orientation::HigherBetter);
  }

  TEST_CASE("normalized values stay in the unit interval") {
    Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v;
      for (std::size_t i = 0, n = 1 + rng.index(20); i < n; ++i) v.push_back(1000 * rng.normal());
      for (auto o : {Orientation::HigherBetter, Orientation::LowerBetter}) {
        for (double x : minmax_normalize(v, o)) {
          CHECK(x >= 0.0);
          CHECK(x <= 1.0);
        }
      }
    }
  }

  TEST_CASE("composite examples") {
    for (const auto& p : builtin_presets()) {
      FactorVector fv;
      fv.preset = p.name;
      fv.normalized.values = {1, 1, 1, 1, 1};
      CHECK(composite(fv, p).score == doctest::Approx(1.0).epsilon(1e-12));
    }
    FactorVector half;
    half.preset = "chat";
    half.normalized.values = {0.5, 0.5, 0.5, 0.5, 0.5};
    CHECK(composite(half, preset("chat")).score == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(composite(half, preset("rag")), ValidationError);
  }

  TEST_CASE("composite is monotone in each factor") {
    Rng rng(15);
    for (int trial = 0; trial < 200; ++trial) {
      FactorVector fv;
      fv.preset = "chat";
      for (auto& x : fv.normalized.values) x = rng.uniform();
      const double base = composite(fv, preset("chat")).score;
      for (auto f : kFactors) {
        FactorVector up = fv;
        up.normalized[f] = std::min(1.0, up.normalized[f] + 0.1);
        CHECK(composite(up, preset("chat")).score >= base);
      }
    }
  }

  TEST_CASE("reliability definition") {
    LatencySummary s;
    s.completion_rate = 1.0;
    s.ttft_p50 = 0.2;
    s.ttft_p99 = 0.2;
    CHECK(reliability(s) == 1.0);
    s.ttft_p99 = 0.2 * 5.5;
    CHECK(reliability(s) == doctest::Approx(0.5));
    s.ttft_p99 = 0.2 * 20;
    CHECK(reliability(s) == 0.0);
    s.completion_rate = 0.9;
    s.ttft_p99 = 0.4;
    CHECK(reliability(s) == doctest::Approx(0.9 * (1 - 1.0 / 9)));
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
      s.completion_rate = rng.uniform();
      s.ttft_p50 = 0.01 + rng.uniform();
      s.ttft_p99 = s.ttft_p50 * (1 + 20 * rng.uniform());
      const double r = reliability(s);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
  }

  TEST_CASE("headline examples") {
    const auto h = headline(0.18, 1e-7, 2900, 0.78);
    CHECK(std::abs(h.j_ca - 669.23) <= 0.01);
    CHECK(h.c_ca == doctest::Approx(1e-7 * 2900 / 0.78));
    const auto zero = headline(0.18, 1e-7, 2900, 0.0);
    CHECK(zero.j_ca == std::numeric_limits<double>::infinity());
    CHECK(zero.c_ca == std::numeric_limits<double>::infinity());
    CHECK(headline(0.4, 2e-6, 1, 1).j_ca == 0.4);
    const auto doubled = headline(0.18, 1e-7, 5800, 0.78);
    CHECK(doubled.j_ca == doctest::Approx(2 * h.j_ca));
    CHECK(doubled.c_ca == doctest::Approx(2 * h.c_ca));
  }

  TEST_CASE("headline from an eval run") {
    EvalRun run;
    run.accuracy = 0.5;
    run.tokens_to_solution = 1000;
    const auto h = headline(0.2, 3e-7, run);
    CHECK(h.j_ca == doctest::Approx(400));
    CHECK(h.tokens_to_solution == 1000);
    CHECK(h.accuracy == 0.5);
  }

  TEST_CASE("headline monotonicity") {
    Rng rng(22);
    for (int i = 0; i < 300; ++i) {
      const double j = 0.01 + rng.uniform(), p = 1e-7 * (1 + rng.uniform());
      const double t = 100 + 1000 * rng.uniform(), a = 0.05 + 0.9 * rng.uniform();
      const auto h = headline(j, p, t, a);
      CHECK(headline(j, p, t, a + 0.01).j_ca < h.j_ca);
      CHECK(headline(j, p, t, a + 0.01).c_ca < h.c_ca);
      CHECK(headline(j, p, t + 1, a).j_ca > h.j_ca);
      CHECK(headline(j * 1.1, p, t, a).j_ca > h.j_ca);
      CHECK(headline(j, p * 1.1, t, a).c_ca > h.c_ca);
    }
  }

  TEST_CASE("ties rank adjacently in id order") {
    const Registry reg = make_registry({make_endpoint(eid("b")), make_endpoint(eid("a")),
                                        make_endpoint(eid("c"), 0.2, 0.6)});
    const std::vector<EndpointFactors> f = {factors(eid("b"), 100, 0.2, 80, 1),
                                            factors(eid("a"), 100, 0.2, 80, 1),
                                            factors(eid("c"), 100, 0.2, 80, 1)};
    const auto ranked = rank_endpoints(reg, f, preset("chat"), "full");
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].endpoint == eid("a"));
    CHECK(ranked[1].endpoint == eid("b"));
    CHECK(ranked[2].endpoint == eid("c"));
    CHECK(ranked[0].score == ranked[1].score);
    for (int i = 0; i < 3; ++i) CHECK(ranked[static_cast<std::size_t>(i)].rank == i + 1);
  }

  TEST_CASE("reversing every orientation swaps a pair") {
    const Registry reg = make_registry({make_endpoint(eid("a"), 0.1, 0.5), make_endpoint(eid("b"), 0.2, 0.6)});
    const std::vector<EndpointFactors> f = {factors(eid("a"), 200, 0.2, 80, 0.9),
                                            factors(eid("b"), 100, 0.3, 70, 0.8)};
    CHECK(rank_endpoints(reg, f, preset("chat"), "full").front().endpoint == eid("a"));
    const Registry rev = make_registry({make_endpoint(eid("a"), 0.2, 0.6), make_endpoint(eid("b"), 0.1, 0.5)});
    const std::vector<EndpointFactors> g = {factors(eid("a"), 100, 0.3, 70, 0.8),
                                            factors(eid("b"), 200, 0.2, 80, 0.9)};
    CHECK(rank_endpoints(rev, g, preset("chat"), "full").front().endpoint == eid("b"));
  }

  TEST_CASE("ranking is invariant under affine rescaling of one factor") {
    Rng rng(16);
    std::vector<Endpoint> eps;
    std::vector<EndpointFactors> f;
    for (int i = 0; i < 25; ++i) {
      const auto id = eid("p" + std::to_string(i));
      eps.push_back(make_endpoint(id, 0.05 + rng.uniform(), 0.2 + rng.uniform()));
      f.push_back(factors(id, 50 + 500 * rng.uniform(), 0.1 + rng.uniform(), 60 + 30 * rng.uniform(),
                          rng.uniform()));
    }
    const Registry reg = make_registry(eps);
    const auto base = rank_endpoints(reg, f, preset("chat"), "full");
    auto scaled = f;
    for (auto& x : scaled) x.speed = 3.7 * *x.speed + 12.0;
    const auto after = rank_endpoints(reg, scaled, preset("chat"), "full");
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(after[i].endpoint == base[i].endpoint);
      CHECK(after[i].score == doctest::Approx(base[i].score).epsilon(1e-12));
    }
  }

  TEST_CASE("scores equal the dot product") {
    const auto scores = fixture_board().rank("chat", "full");
    const auto& w = fixture_board().registry().preset("chat").weights;
    for (const auto& s : scores) {
      CHECK(std::abs(s.score - w.dot(s.normalized)) <= 1e-12);
      for (double x : s.normalized.values) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
      }
    }
  }

  TEST_CASE("cohort scope normalizes within the model") {
    const auto scores = fixture_board().rank("chat", "cohort:gpt-oss-120b");
    CHECK(scores.size() == 19);
    double lo = 1, hi = 0;
    for (const auto& s : scores) {
      lo = std::min(lo, s.normalized[Factor::Speed]);
      hi = std::max(hi, s.normalized[Factor::Speed]);
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
  }

  TEST_CASE("missing factor names the endpoint") {
    const Registry reg = make_registry({make_endpoint(eid("a")), make_endpoint(eid("b"))});
    std::vector<EndpointFactors> f = {factors(eid("a"), 100, 0.2, 80, 1), factors(eid("b"), 100, 0.2, 80, 1)};
    f[1].quality.reset();
    try {
      rank_endpoints(reg, f, preset("chat"), "full");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(eid("b").key()) != std::string::npos);
    }
  }
}

TEST_SUITE("golden") {
  TEST_CASE("chat ranking matches the independent reference") {
    const auto golden = csv::read(EPBENCH_GOLDEN_DIR "/chat_full_ranking.csv");
    const auto scores = fixture_board().rank("chat", "full");
    REQUIRE(scores.size() == golden.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      CHECK(scores[i].endpoint.key() == golden.at(i, "endpoint"));
      CHECK(scores[i].rank == parse_int(golden.at(i, "rank")));
      CHECK(std::abs(scores[i].score - parse_number(golden.at(i, "score"))) <= 1e-9);
    }
  }

  TEST_CASE("stored composite scores equal a fresh ranking") {
    const auto& board = fixture_board();
    const auto fresh = board.rank("chat", "full");
    std::vector<CompositeScore> stored;
    for (const auto& s : board.snapshot().composite_scores) {
      if (s.preset == "chat" && s.scope == "full") stored.push_back(s);
    }
    REQUIRE(stored.size() == fresh.size());
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      CHECK(stored[i].endpoint == fresh[i].endpoint);
      CHECK(std::abs(stored[i].score - fresh[i].score) <= 1e-9);
    }
  }
}
