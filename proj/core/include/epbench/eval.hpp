// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "epbench/client.hpp"
#include "epbench/common.hpp"
#include "epbench/registry.hpp"

namespace epbench {

enum class Verifier { ExactMatch, NumericMatch, Contains };
std::string_view to_string(Verifier v);
Verifier parse_verifier(std::string_view s);

struct EvalTask {
  std::string id;
  std::string suite;
  std::string prompt;
  std::int64_t context_length = 0;
  Verifier verifier = Verifier::ExactMatch;
  std::string reference_answer;
  bool is_reasoning = false;

  void validate() const;
};

/// Applies the task's verifier to a response's visible text. The response's
/// answer is its last whitespace-delimited word for exact and numeric
/// matching; `contains` compares case-insensitively on whitespace-normalized
/// text.
bool verify(const EvalTask& task, std::string_view response_text);

struct EvalRun {
  EndpointId endpoint;
  std::string suite;
  TimeWindow window;
  double accuracy = 0.0;
  /// Mean output tokens (thinking included) over solved reasoning tasks;
  /// NaN when none were solved.
  double tokens_to_solution = 0.0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;    // billed output, thinking included
  std::int64_t thinking_tokens = 0;  // subset of output_tokens
  double wall_clock = 0.0;           // seconds
  double dollar_cost = 0.0;
  std::int64_t n_tasks = 0;
  std::int64_t n_solved = 0;
  std::int64_t eval_errors = 0;
  std::int64_t context_length = 0;   // 0 unless the run is one level of a context sweep

  void validate() const;
};

struct EvalOptions {
  double issued_at = 0.0;  // stream-clock seconds for the first task
  int parallelism = 1;     // concurrent lanes; tasks are assigned round-robin
  int max_tokens = 32768;
};

/// Runs one suite against an endpoint at temperature 0. A failed task counts
/// as unsolved; throws Error when every task fails.
EvalRun run_eval_suite(const EndpointClient& client, const Endpoint& endpoint,
                       std::span<const EvalTask> tasks, const EvalOptions& options = {});

inline constexpr double kEffectiveContextThreshold = 0.90;

/// Largest level whose accuracy is at least 0.90, or 0. `levels` must be
/// ascending and paired with `accuracies`.
std::int64_t largest_passing_level(std::span<const std::int64_t> levels,
                                   std::span<const double> accuracies);

struct EffectiveContextResult {
  std::int64_t tokens = 0;
  std::vector<EvalRun> runs;  // one per level
};

/// Sweeps a context-parameterized eval over ascending levels.
EffectiveContextResult effective_context(
    const EndpointClient& client, const Endpoint& endpoint,
    const std::function<std::vector<EvalTask>(std::int64_t level)>& task_family,
    std::span<const std::int64_t> levels, const EvalOptions& options = {});

struct QualityScore {
  EndpointId endpoint;
  double q = 0.0;  // 0-100
  std::map<std::string, double> breakdown;  // suite -> accuracy
};

/// q = 100 * sum(weight * accuracy) over the configured suites.
QualityScore quality_composite(std::span<const EvalRun> runs,
                               const std::map<std::string, double>& suite_weights);

/// Equal weights over `suites`.
std::map<std::string, double> uniform_suite_weights(std::span<const std::string> suites);

/// Synthetic verifiable tasks standing in for a public suite. Arithmetic
/// prompts when context_length is 0, key-lookup prompts padded to
/// context_length tokens otherwise.
struct SyntheticSuiteSpec {
  std::string suite;
  std::size_t n_tasks = 50;
  std::uint64_t seed = 0;
  std::int64_t context_length = 0;
  bool is_reasoning = false;
  Verifier verifier = Verifier::NumericMatch;
};
std::vector<EvalTask> make_synthetic_suite(const SyntheticSuiteSpec& spec);

std::vector<EvalTask> load_eval_tasks_csv(const std::filesystem::path& path);
void save_eval_tasks_csv(const std::filesystem::path& path, std::span<const EvalTask> tasks);

}  // namespace epbench
