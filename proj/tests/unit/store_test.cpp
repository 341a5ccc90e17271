// SPDX-License-Identifier: Apache-2.0
#include <thread>
#include <vector>

#include "doctest.h"
#include "epbench/csv.hpp"
#include "epbench/store.hpp"
#include "helpers.hpp"

using namespace epbench;
using namespace epbench::testing;

namespace {

ProbeRecord probe_at(const EndpointId& id, Timestamp t, double ttft = 0.2) {
  ProbeRecord r;
  r.endpoint = id;
  r.request_time = t;
  r.ttft = ttft;
  r.output_tokens = 3;
  r.inter_token_gaps = {0.01, 0.01};
  r.total_time = ttft + 0.03;
  r.response_hash = sha256_hex("x");
  r.prompt_set_day = date_of(t);
  return r;
}

}  // namespace

TEST_SUITE("store") {
  TEST_CASE("append is visible to queries") {
    Store store;
    const Timestamp t0 = board_as_of();
    CHECK(store.count<ProbeRecord>() == 0);
    CHECK(store.query_window<ProbeRecord>(eid("p"), {t0, t0 + std::chrono::hours(1)}).empty());
    store.append(probe_at(eid("p"), t0));
    CHECK(store.count<ProbeRecord>() == 1);
    CHECK(store.records<ProbeRecord>().front().endpoint == eid("p"));
  }

  TEST_CASE("invalid records are rejected") {
    Store store;
    auto bad = probe_at(eid("p"), board_as_of());
    bad.total_time = 0.0;
    CHECK_THROWS_AS(store.append(bad), ValidationError);
    CHECK(store.count<ProbeRecord>() == 0);
    EvalRun run;
    run.n_tasks = 0;
    CHECK_THROWS_AS(store.append(run), ValidationError);
  }

  TEST_CASE("a day of appends comes back from the window") {
    Store store;
    const Timestamp t0 = board_as_of();
    for (int i = 0; i < 288; ++i) store.append(probe_at(eid("p"), t0 + std::chrono::minutes(5 * i)));
    CHECK(store.query_window<ProbeRecord>(eid("p"), {t0, t0 + std::chrono::hours(24)}).size() == 288);
  }

  TEST_CASE("window end is exclusive") {
    Store store;
    const Timestamp t0 = board_as_of();
    store.append(probe_at(eid("p"), t0));
    store.append(probe_at(eid("p"), t0 + std::chrono::hours(1)));
    CHECK(store.query_window<ProbeRecord>(eid("p"), {t0, t0 + std::chrono::hours(1)}).size() == 1);
  }

  TEST_CASE("interleaved keys match a brute-force filter") {
    Store store;
    Rng rng(10);
    const Timestamp t0 = board_as_of();
    std::vector<ProbeRecord> all;
    const std::vector<ProbeConditions> conds = {default_conditions(), {1000, 10, "us-east"}};
    for (int i = 0; i < 300; ++i) {
      auto r = probe_at(eid("p" + std::to_string(rng.index(3))), t0 + std::chrono::seconds(rng.index(7200)),
                        0.1 + rng.uniform());
      r.conditions = conds[rng.index(2)];
      store.append(r);
      all.push_back(r);
    }
    const TimeWindow w{t0 + std::chrono::minutes(20), t0 + std::chrono::minutes(90)};
    for (int p = 0; p < 3; ++p) {
      for (const auto& c : conds) {
        const auto id = eid("p" + std::to_string(p));
        std::vector<double> want;
        for (const auto& r : all) {
          if (r.endpoint == id && r.conditions == c && w.contains(r.request_time)) want.push_back(r.ttft);
        }
        std::vector<double> got;
        for (const auto& r : store.query_window<ProbeRecord>(id, w, c)) got.push_back(r.ttft);
        CHECK(got == want);
      }
    }
  }

  TEST_CASE("concurrent appenders lose nothing") {
    Store store;
    const Timestamp t0 = board_as_of();
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&, t] {
        for (int i = 0; i < 250; ++i) {
          store.append(probe_at(eid("p" + std::to_string(t)), t0 + std::chrono::seconds(i)));
        }
      });
    }
    for (auto& th : threads) th.join();
    CHECK(store.count<ProbeRecord>() == 1000);
    for (int t = 0; t < 4; ++t) {
      const auto rs = store.query_window<ProbeRecord>(eid("p" + std::to_string(t)),
                                                      {t0, t0 + std::chrono::hours(1)});
      REQUIRE(rs.size() == 250);
      for (std::size_t i = 1; i < rs.size(); ++i) CHECK(rs[i - 1].request_time < rs[i].request_time);
    }
  }

  TEST_CASE("logs replay on reopen") {
    TempDir tmp;
    const Timestamp t0 = board_as_of();
    {
      Store store(tmp.path());
      for (int i = 0; i < 5; ++i) store.append(probe_at(eid("p"), t0 + std::chrono::seconds(i), 0.1 * (i + 1)));
    }
    Store again(tmp.path());
    const auto rs = again.records<ProbeRecord>();
    REQUIRE(rs.size() == 5);
    CHECK(rs[3].ttft == doctest::Approx(0.4));
    again.append(probe_at(eid("p"), t0 + std::chrono::seconds(9)));
    CHECK(Store(tmp.path()).count<ProbeRecord>() == 6);
  }

  TEST_CASE("snapshot cuts at as_of") {
    const Registry reg = make_registry({make_endpoint(eid("p"))});
    Store store;
    const Timestamp t0 = board_as_of();
    store.append(probe_at(eid("p"), t0 - std::chrono::hours(1)));
    store.append(probe_at(eid("p"), t0));
    store.append(probe_at(eid("p"), t0 + std::chrono::seconds(1)));
    const auto snap = store.snapshot("v", t0, reg);
    CHECK(snap.probe_records.size() == 2);
    CHECK(snap.registry_hash == reg.hash());
    CHECK_NOTHROW(snap.validate(reg));
  }

  TEST_CASE("fixture export and import round-trip byte for byte") {
    TempDir tmp;
    const auto loaded = import_snapshot(fixture_snapshot());
    const auto dir = export_snapshot(loaded.snapshot, loaded.registry, tmp.path());
    CHECK(dir == tmp.path() / "v1.0");
    for (const auto& [name, text] : snapshot_files(loaded.snapshot)) {
      CHECK_MESSAGE(csv::read_file(dir / name) == csv::read_file(fixture_snapshot() / name), name);
      CHECK(text == csv::read_file(fixture_snapshot() / name));
    }
    const auto again = import_snapshot(dir);
    CHECK(snapshot_files(again.snapshot) == snapshot_files(loaded.snapshot));
    CHECK(again.snapshot.as_of == loaded.snapshot.as_of);
    CHECK(again.snapshot.settings == loaded.snapshot.settings);
  }

  TEST_CASE("import against a foreign registry fails") {
    const Registry other = make_registry({make_endpoint(eid("p"))});
    CHECK_THROWS_AS(import_snapshot(fixture_snapshot(), other), ValidationError);
  }

  TEST_CASE("tampered bundled registry fails the hash check") {
    TempDir tmp;
    const auto loaded = import_snapshot(fixture_snapshot());
    const auto dir = export_snapshot(loaded.snapshot, loaded.registry, tmp.path());
    const auto file = dir / "registry" / "regions.csv";
    std::string text = csv::read_file(file);
    text.replace(text.find("380"), 3, "381");
    csv::write_file(file, text);
    CHECK_THROWS_AS(import_snapshot(dir), ValidationError);
  }

  TEST_CASE("records newer than as_of fail validation") {
    const Registry reg = make_registry({make_endpoint(eid("p"))});
    Snapshot s;
    s.as_of = board_as_of();
    s.registry_hash = reg.hash();
    s.probe_records.push_back(probe_at(eid("p"), s.as_of + std::chrono::seconds(1)));
    CHECK_THROWS_AS(s.validate(reg), ValidationError);
    s.probe_records = {probe_at(eid("q"), s.as_of)};
    CHECK_THROWS_AS(s.validate(reg), ReferenceError);
  }

  TEST_CASE("every table codec round-trips the fixture") {
    const auto& s = fixture_board().snapshot();
    CHECK(tables::probe_records(tables::parse_probe_records(tables::probe_records(s.probe_records))).to_string() ==
          tables::probe_records(s.probe_records).to_string());
    CHECK(tables::eval_runs(tables::parse_eval_runs(tables::eval_runs(s.eval_runs))).to_string() ==
          tables::eval_runs(s.eval_runs).to_string());
    CHECK(tables::fidelity(tables::parse_fidelity(tables::fidelity(s.fidelity))).to_string() ==
          tables::fidelity(s.fidelity).to_string());
    CHECK(tables::headline(tables::parse_headline(tables::headline(s.headline))).to_string() ==
          tables::headline(s.headline).to_string());
    CHECK(tables::energy_estimates(tables::parse_energy_estimates(tables::energy_estimates(s.energy_estimates)))
              .to_string() == tables::energy_estimates(s.energy_estimates).to_string());
  }
}
