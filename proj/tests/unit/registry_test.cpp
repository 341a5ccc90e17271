// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "doctest.h"
#include "epbench/csv.hpp"
#include "epbench/registry.hpp"
#include "helpers.hpp"

using namespace epbench;
using namespace epbench::testing;

namespace {

const Registry& fixture_registry() {
  static const Registry r = Registry::load(fixture_dir() / "registry");
  return r;
}

void copy_registry(const std::filesystem::path& dir) {
  fixture_registry().save(dir);
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("registry") {
  TEST_CASE("endpoint id key round-trips") {
    const EndpointId id = eid("cerebras", "gpt-oss-120b", Precision::FP8, "us-west", "fast");
    CHECK(id.key() == "cerebras/gpt-oss-120b/fast/FP8/standard/us-west");
    CHECK(EndpointId::parse(id.key()) == id);
    CHECK_THROWS_AS(EndpointId::parse("a/b/c"), ParseError);
    CHECK_THROWS_AS(EndpointId::parse("a/b/c/FP4/standard/r"), ParseError);
    CHECK(eid("a") < eid("b"));
  }

  TEST_CASE("enum labels round-trip") {
    for (auto p : {Precision::BF16, Precision::FP8, Precision::INT8, Precision::FP16, Precision::Other}) {
      CHECK(parse_precision(to_string(p)) == p);
    }
    for (auto d : {Decoding::Standard, Decoding::Speculative, Decoding::Other}) {
      CHECK(parse_decoding(to_string(d)) == d);
    }
    for (auto c : kProviderCategories) CHECK(parse_category(to_string(c)) == c);
    for (auto f : kFactors) CHECK(parse_factor(to_string(f)) == f);
    CHECK(kProviderCategories.size() == 8);
  }

  TEST_CASE("built-in presets match the catalog") {
    const auto presets = builtin_presets();
    REQUIRE(presets.size() == 10);
    std::map<std::string, WorkloadPreset> by_name;
    for (const auto& p : presets) {
      CHECK(std::abs(p.weights.sum() - 1.0) <= 1e-9);
      CHECK_NOTHROW(p.validate());
      by_name[p.name] = p;
    }
    const auto& chat = by_name.at("chat");
    CHECK(chat.input_ratio == 3);
    CHECK(chat.output_ratio == 1);
    CHECK(chat.weights.values == std::array<double, 5>{0.20, 0.30, 0.20, 0.20, 0.10});
    CHECK(by_name.at("batch").weights[Factor::Ttft] == 0.00);
    CHECK(by_name.at("batch").weights[Factor::Price] == 0.65);
    CHECK(by_name.at("rag").input_ratio == 20);
    CHECK(by_name.at("reasoning").output_ratio == 5);
  }

  TEST_CASE("preset validation") {
    WorkloadPreset p = builtin_presets().front();
    p.weights[Factor::Speed] += 0.1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = builtin_presets().front();
    p.input_ratio = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    CHECK(builtin_presets().front().input_share() == doctest::Approx(0.75));
  }

  TEST_CASE("fixture registry counts") {
    const Registry& r = fixture_registry();
    CHECK(r.endpoints().size() == 78);
    CHECK(r.providers().size() == 33);
    CHECK(r.models().size() == 12);
    CHECK(r.cohort("gpt-oss-120b").size() == 19);
    CHECK(r.cohort("llama-3.3-70b").size() == 16);
    CHECK_THROWS_AS(r.cohort("no-such-model"), NotFoundError);
  }

  TEST_CASE("cohorts partition the registry and are ordered") {
    const Registry& r = fixture_registry();
    std::size_t total = 0;
    for (const auto& m : r.models()) {
      const auto c = r.cohort(m.id);
      total += c.size();
      for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i - 1].id.key() < c[i].id.key());
      for (const auto& e : c) CHECK(e.id.model == m.id);
    }
    CHECK(total == r.endpoints().size());
  }

  TEST_CASE("single-endpoint cohort") {
    const Registry r = make_registry({make_endpoint(eid("p", "solo"))});
    REQUIRE(r.cohort("solo").size() == 1);
    CHECK(r.cohort("solo").front().id == eid("p", "solo"));
  }

  TEST_CASE("save then load round-trips") {
    TempDir tmp;
    fixture_registry().save(tmp.path());
    const Registry back = Registry::load(tmp.path());
    CHECK(back.serialize() == fixture_registry().serialize());
    CHECK(back.hash() == fixture_registry().hash());
    CHECK(back.hash().size() == 64);
  }

  TEST_CASE("empty endpoints file loads") {
    TempDir tmp;
    copy_registry(tmp.path());
    const auto header = csv::read(tmp.path() / "endpoints.csv").header();
    csv::write(tmp.path() / "endpoints.csv", csv::Table(header));
    const Registry r = Registry::load(tmp.path());
    CHECK(r.endpoints().empty());
    CHECK(r.providers().size() == 33);
    CHECK(r.models().size() == 12);
  }

  TEST_CASE("dangling hardware class is named") {
    TempDir tmp;
    copy_registry(tmp.path());
    std::string text = csv::read_file(tmp.path() / "endpoints.csv");
    const auto pos = text.find("Cerebras WSE-3");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("Cerebras WSE-3").size(), "X900");
    csv::write_file(tmp.path() / "endpoints.csv", text);
    CHECK_THROWS_AS(Registry::load(tmp.path()), ReferenceError);
    CHECK(error_of([&] { Registry::load(tmp.path()); }).find("X900") != std::string::npos);
  }

  TEST_CASE("malformed file is a parse error") {
    TempDir tmp;
    copy_registry(tmp.path());
    csv::write_file(tmp.path() / "providers.csv", "id,name,category\nx,X,not_a_category\n");
    CHECK_THROWS_AS(Registry::load(tmp.path()), ParseError);
    csv::write_file(tmp.path() / "providers.csv", "id,name\nx,X\n");
    CHECK_THROWS_AS(Registry::load(tmp.path()), ParseError);
  }

  TEST_CASE("duplicate endpoint tuple is rejected") {
    const Endpoint e = make_endpoint(eid("p"));
    CHECK_THROWS_AS(make_registry({e, e}), ValidationError);
  }

  TEST_CASE("invariant violations name the rule") {
    Endpoint e = make_endpoint(eid("p"), 1.0, 2.0);
    e.price_cached_input = 1.5;
    CHECK_THROWS_AS(make_registry({e}), ValidationError);
    e.price_cached_input = 0.5;
    CHECK_NOTHROW(make_registry({e}));

    Endpoint neg = make_endpoint(eid("p"), -1.0, 2.0);
    CHECK_THROWS_AS(make_registry({neg}), ValidationError);

    std::vector<ModelFamily> closed = {{"m", "M", std::nullopt, false}};
    CHECK_THROWS_AS(Registry({{"p", "P", ProviderCategory::FrontierLab}}, closed,
                             builtin_hardware_table(), builtin_regions(),
                             {make_endpoint(eid("p"))}, builtin_presets()),
                    ValidationError);

    auto hw = builtin_hardware_table();
    hw.front().default_pue = 0.9;
    CHECK_THROWS_AS(Registry({{"p", "P", ProviderCategory::FrontierLab}},
                             {{"m", "M", std::nullopt, true}}, hw, builtin_regions(), {},
                             builtin_presets()),
                    ValidationError);
  }

  TEST_CASE("lookups throw NotFoundError") {
    const Registry r = make_registry({make_endpoint(eid("p"))});
    CHECK(r.find_endpoint(eid("q")) == nullptr);
    CHECK_THROWS_AS(r.endpoint(eid("q")), NotFoundError);
    CHECK_THROWS_AS(r.preset("nope"), NotFoundError);
    CHECK_THROWS_AS(r.region("mars"), NotFoundError);
    CHECK(r.has_preset("chat"));
    CHECK(r.endpoint(eid("p")).cached_input_price() == 0.1);
  }
}
