// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epbench/common.hpp"
#include "epbench/csv.hpp"
#include "epbench/energy.hpp"
#include "epbench/eval.hpp"
#include "epbench/fingerprint.hpp"
#include "epbench/probe.hpp"
#include "epbench/registry.hpp"
#include "epbench/scoring.hpp"

namespace epbench {

/// The measurement tables of a leaderboard release.
struct Snapshot {
  std::string version;
  Timestamp as_of{};
  std::string registry_hash;
  /// Pipeline settings the derived tables were computed with.
  std::map<std::string, std::string> settings;

  std::vector<ProbeRecord> probe_records;
  std::vector<LatencySummary> latency_summaries;
  std::vector<EvalRun> eval_runs;
  std::vector<Fingerprint> fingerprints;
  std::vector<FidelityResult> fidelity;
  std::vector<EnergyEstimate> energy_estimates;
  std::vector<CompositeScore> composite_scores;
  std::vector<HeadlineMetrics> headline;

  /// Every endpoint resolves, the registry hash matches and no record is
  /// newer than as_of.
  void validate(const Registry& registry) const;
};

/// Canonical CSV codecs, one per snapshot table.
namespace tables {
csv::Table probe_records(const std::vector<ProbeRecord>& v);
csv::Table latency_summaries(const std::vector<LatencySummary>& v);
csv::Table eval_runs(const std::vector<EvalRun>& v);
csv::Table fingerprints(const std::vector<Fingerprint>& v);
csv::Table fidelity(const std::vector<FidelityResult>& v);
csv::Table energy_estimates(const std::vector<EnergyEstimate>& v);
csv::Table composite_scores(const std::vector<CompositeScore>& v);
csv::Table headline(const std::vector<HeadlineMetrics>& v);

std::vector<ProbeRecord> parse_probe_records(const csv::Table& t);
std::vector<LatencySummary> parse_latency_summaries(const csv::Table& t);
std::vector<EvalRun> parse_eval_runs(const csv::Table& t);
std::vector<Fingerprint> parse_fingerprints(const csv::Table& t);
std::vector<FidelityResult> parse_fidelity(const csv::Table& t);
std::vector<EnergyEstimate> parse_energy_estimates(const csv::Table& t);
std::vector<CompositeScore> parse_composite_scores(const csv::Table& t);
std::vector<HeadlineMetrics> parse_headline(const csv::Table& t);
}  // namespace tables

/// File name -> canonical CSV text for the eight tables.
std::map<std::string, std::string> snapshot_files(const Snapshot& snapshot);

/// Writes root/<version>/ with the eight tables, manifest.json and a copy of
/// the registry. Returns the snapshot directory.
std::filesystem::path export_snapshot(const Snapshot& snapshot, const Registry& registry,
                                      const std::filesystem::path& root);

struct LoadedSnapshot {
  Registry registry;
  Snapshot snapshot;
};

/// Reads a snapshot directory and its bundled registry. Throws
/// ValidationError when the registry does not hash to the manifest's value.
LoadedSnapshot import_snapshot(const std::filesystem::path& dir);
/// Reads a snapshot against an externally loaded registry.
Snapshot import_snapshot(const std::filesystem::path& dir, const Registry& registry);

/// Append-only record store. Each record kind has its own lock and, when
/// opened on a directory, its own NDJSON log that is replayed on open.
class Store {
 public:
  Store();
  explicit Store(const std::filesystem::path& dir);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Validates, persists and indexes one record.
  void append(const ProbeRecord& r);
  void append(const LatencySummary& r);
  void append(const EvalRun& r);
  void append(const Fingerprint& r);
  void append(const FidelityResult& r);
  void append(const EnergyEstimate& r);
  void append(const CompositeScore& r);
  void append(const HeadlineMetrics& r);

  /// Every record of kind R, in append order.
  template <class R>
  std::vector<R> records() const;

  /// Records of kind R for `endpoint` (and `conditions`, for probe kinds)
  /// timestamped within the half-open window, in append order.
  template <class R>
  std::vector<R> query_window(const EndpointId& endpoint, const TimeWindow& window,
                              const std::optional<ProbeConditions>& conditions = {}) const;

  template <class R>
  std::size_t count() const;

  /// Copies everything timestamped at or before as_of into a snapshot.
  Snapshot snapshot(const std::string& version, Timestamp as_of, const Registry& registry,
                    std::map<std::string, std::string> settings = {}) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// The timestamp a record is ordered and windowed by.
Timestamp record_time(const ProbeRecord& r);
Timestamp record_time(const LatencySummary& r);
Timestamp record_time(const EvalRun& r);
Timestamp record_time(const Fingerprint& r);
Timestamp record_time(const FidelityResult& r);
Timestamp record_time(const EnergyEstimate& r);
Timestamp record_time(const CompositeScore& r);
Timestamp record_time(const HeadlineMetrics& r);

}  // namespace epbench
