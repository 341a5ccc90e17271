// SPDX-License-Identifier: Apache-2.0
#include "epbench/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <limits>
#include <set>

#include "epbench/csv.hpp"
#include "epbench/probe.hpp"

namespace epbench {

std::string_view to_string(Verifier v) {
  switch (v) {
    case Verifier::ExactMatch: return "exact_match";
    case Verifier::NumericMatch: return "numeric_match";
    case Verifier::Contains: return "contains";
  }
  return "exact_match";
}

Verifier parse_verifier(std::string_view s) {
  if (s == "exact_match") return Verifier::ExactMatch;
  if (s == "numeric_match") return Verifier::NumericMatch;
  if (s == "contains") return Verifier::Contains;
  throw ParseError("unknown verifier '" + std::string(s) + "'");
}

void EvalTask::validate() const {
  if (id.empty() || suite.empty()) throw ValidationError("eval task needs an id and a suite");
  if (reference_answer.empty()) {
    throw ValidationError("eval task '" + id + "': reference_answer is empty");
  }
  if (context_length < 0 || context_length > count_tokens(prompt)) {
    throw ValidationError("eval task '" + id + "': context_length exceeds the prompt length");
  }
}

namespace {

std::string normalize_ws_lower(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string_view last_word(std::string_view s) {
  const auto end = s.find_last_not_of(" \t\r\n");
  if (end == std::string_view::npos) return {};
  const auto start = s.find_last_of(" \t\r\n", end);
  return s.substr(start == std::string_view::npos ? 0 : start + 1,
                  end - (start == std::string_view::npos ? 0 : start + 1) + 1);
}

}  // namespace

bool verify(const EvalTask& task, std::string_view response_text) {
  switch (task.verifier) {
    case Verifier::ExactMatch:
      return last_word(response_text) == task.reference_answer;
    case Verifier::NumericMatch: {
      try {
        const double got = parse_number(last_word(response_text));
        const double want = parse_number(task.reference_answer);
        return std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want));
      } catch (const ParseError&) {
        return false;
      }
    }
    case Verifier::Contains:
      return normalize_ws_lower(response_text).find(normalize_ws_lower(task.reference_answer)) !=
             std::string::npos;
  }
  return false;
}

void EvalRun::validate() const {
  const std::string who = "eval run '" + endpoint.key() + "' " + suite + ": ";
  if (n_tasks < 1) throw ValidationError(who + "n_tasks must be >= 1");
  if (n_solved < 0 || n_solved > n_tasks) throw ValidationError(who + "n_solved out of range");
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw ValidationError(who + "accuracy not in [0,1]");
  if (std::abs(accuracy * static_cast<double>(n_tasks) - static_cast<double>(n_solved)) > 1e-6) {
    throw ValidationError(who + "accuracy * n_tasks must equal the solved count");
  }
  if (thinking_tokens > output_tokens) {
    throw ValidationError(who + "thinking_tokens exceed output_tokens");
  }
  if (!(dollar_cost >= 0.0)) throw ValidationError(who + "dollar_cost must be >= 0");
}

namespace {

struct TaskOutcome {
  bool solved = false;
  bool error = false;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t thinking_tokens = 0;
  double duration = 0.0;
};

TaskOutcome run_task(const EndpointClient& client, const EndpointId& endpoint,
                     const EvalTask& task, double issued_at, int max_tokens) {
  TaskOutcome out;
  StreamRequest req;
  req.prompt = task.prompt;
  req.input_tokens = count_tokens(task.prompt);
  req.max_tokens = max_tokens;
  req.seed = hash64(task.id);
  req.issued_at = issued_at;
  out.input_tokens = req.input_tokens;

  std::string visible;
  double last_time = issued_at;
  bool done = false;
  try {
    client.stream(endpoint, req, [&](const StreamEvent& ev) {
      last_time = ev.time;
      if (ev.kind == EventKind::Error) {
        out.error = true;
        return false;
      }
      if (ev.kind == EventKind::Done) {
        done = true;
        return false;
      }
      ++out.output_tokens;
      if (ev.thinking) {
        ++out.thinking_tokens;
      } else {
        if (!visible.empty()) visible += ' ';
        visible += ev.text;
      }
      return true;
    });
  } catch (const std::exception&) {
    out.error = true;
  }
  if (!done && !out.error) out.error = true;
  out.duration = last_time - issued_at;
  out.solved = !out.error && verify(task, visible);
  return out;
}

}  // namespace

EvalRun run_eval_suite(const EndpointClient& client, const Endpoint& endpoint,
                       std::span<const EvalTask> tasks, const EvalOptions& options) {
  if (tasks.empty()) throw ValidationError("run_eval_suite: no tasks");
  const std::string& suite = tasks.front().suite;
  for (const auto& t : tasks) {
    if (t.suite != suite) throw ValidationError("run_eval_suite: tasks span several suites");
  }
  const int lanes = std::max(1, options.parallelism);

  std::vector<TaskOutcome> outcomes(tasks.size());
  std::vector<double> lane_end(static_cast<std::size_t>(lanes), options.issued_at);
  auto run_lane = [&](int lane) {
    double clock = options.issued_at;
    for (std::size_t i = static_cast<std::size_t>(lane); i < tasks.size();
         i += static_cast<std::size_t>(lanes)) {
      outcomes[i] = run_task(client, endpoint.id, tasks[i], clock, options.max_tokens);
      clock += outcomes[i].duration;
    }
    lane_end[static_cast<std::size_t>(lane)] = clock;
  };
  if (lanes == 1) {
    run_lane(0);
  } else {
    std::vector<std::future<void>> running;
    for (int l = 0; l < lanes; ++l) running.push_back(std::async(std::launch::async, run_lane, l));
    for (auto& f : running) f.get();
  }

  EvalRun run;
  run.endpoint = endpoint.id;
  run.suite = suite;
  run.n_tasks = static_cast<std::int64_t>(tasks.size());
  run.context_length = tasks.front().context_length;
  double solution_tokens = 0.0;
  std::int64_t solved_reasoning = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& o = outcomes[i];
    run.input_tokens += o.input_tokens;
    run.output_tokens += o.output_tokens;
    run.thinking_tokens += o.thinking_tokens;
    if (o.error) ++run.eval_errors;
    if (o.solved) {
      ++run.n_solved;
      if (tasks[i].is_reasoning) {
        solution_tokens += static_cast<double>(o.output_tokens);
        ++solved_reasoning;
      }
    }
  }
  if (run.eval_errors == run.n_tasks) {
    throw Error("eval run failed: every task of suite '" + suite + "' errored on '" +
                endpoint.id.key() + "'");
  }
  run.accuracy = static_cast<double>(run.n_solved) / static_cast<double>(run.n_tasks);
  run.tokens_to_solution = solved_reasoning
                               ? solution_tokens / static_cast<double>(solved_reasoning)
                               : std::numeric_limits<double>::quiet_NaN();
  run.wall_clock = *std::max_element(lane_end.begin(), lane_end.end()) - options.issued_at;
  run.window = {timestamp_from_seconds(options.issued_at),
                timestamp_from_seconds(options.issued_at + run.wall_clock) +
                    std::chrono::microseconds{1}};
  run.dollar_cost = (static_cast<double>(run.input_tokens) * endpoint.price_input +
                     static_cast<double>(run.output_tokens) * endpoint.price_output) /
                    1e6;
  return run;
}

std::int64_t largest_passing_level(std::span<const std::int64_t> levels,
                                   std::span<const double> accuracies) {
  if (levels.empty()) throw ValidationError("effective_context: no levels");
  if (levels.size() != accuracies.size()) {
    throw ValidationError("effective_context: levels and accuracies differ in length");
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] <= levels[i - 1]) throw ValidationError("effective_context: levels must ascend");
  }
  std::int64_t best = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (accuracies[i] >= kEffectiveContextThreshold) best = levels[i];
  }
  return best;
}

EffectiveContextResult effective_context(
    const EndpointClient& client, const Endpoint& endpoint,
    const std::function<std::vector<EvalTask>(std::int64_t level)>& task_family,
    std::span<const std::int64_t> levels, const EvalOptions& options) {
  if (levels.empty()) throw ValidationError("effective_context: no levels");
  EffectiveContextResult result;
  std::vector<double> acc;
  EvalOptions opts = options;
  for (const auto level : levels) {
    const auto tasks = task_family(level);
    auto run = run_eval_suite(client, endpoint, tasks, opts);
    run.context_length = level;
    opts.issued_at += run.wall_clock;
    acc.push_back(run.accuracy);
    result.runs.push_back(std::move(run));
  }
  result.tokens = largest_passing_level(levels, acc);
  return result;
}

QualityScore quality_composite(std::span<const EvalRun> runs,
                               const std::map<std::string, double>& suite_weights) {
  if (suite_weights.empty()) throw ValidationError("quality_composite: no suites configured");
  double wsum = 0.0;
  for (const auto& [_, w] : suite_weights) {
    if (!(w >= 0.0)) throw ValidationError("quality_composite: negative suite weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) {
    throw ValidationError("quality_composite: suite weights must sum to 1");
  }
  QualityScore score;
  if (!runs.empty()) score.endpoint = runs.front().endpoint;
  for (const auto& [suite, w] : suite_weights) {
    const EvalRun* found = nullptr;
    for (const auto& r : runs) {
      if (r.suite != suite) continue;
      if (found) throw ValidationError("quality_composite: several runs for suite '" + suite + "'");
      found = &r;
    }
    if (!found) throw ValidationError("quality_composite: missing run for suite '" + suite + "'");
    score.breakdown[suite] = found->accuracy;
    score.q += w * found->accuracy;
  }
  score.q *= 100.0;
  return score;
}

std::map<std::string, double> uniform_suite_weights(std::span<const std::string> suites) {
  std::map<std::string, double> w;
  for (const auto& s : suites) w[s] = 1.0 / static_cast<double>(suites.size());
  return w;
}

std::vector<EvalTask> make_synthetic_suite(const SyntheticSuiteSpec& spec) {
  Rng rng(mix64(spec.seed, hash64(spec.suite)));
  std::vector<EvalTask> tasks;
  tasks.reserve(spec.n_tasks);
  const std::string tag = "[suite:" + spec.suite + "]";
  for (std::size_t i = 0; i < spec.n_tasks; ++i) {
    EvalTask t;
    t.id = spec.suite + (spec.context_length ? "@" + std::to_string(spec.context_length) : "") +
           "-" + std::to_string(i);
    t.suite = spec.suite;
    t.context_length = spec.context_length;
    t.is_reasoning = spec.is_reasoning;
    t.verifier = spec.verifier;
    if (spec.context_length == 0) {
      static constexpr char kOps[] = {'+', '-', '*'};
      const long long a = 10 + static_cast<long long>(rng.index(990));
      const long long b = 10 + static_cast<long long>(rng.index(990));
      const char op = kOps[rng.index(3)];
      const long long r = op == '+' ? a + b : op == '-' ? a - b : a * b;
      t.prompt = tag + " Compute " + std::to_string(a) + " " + op + " " + std::to_string(b) + " .";
      t.reference_answer = std::to_string(r);
    } else {
      // tag + filler + "key-N = V" (3 words) + "Question: value of key-N ?" (5 words)
      const std::int64_t filler = std::max<std::int64_t>(0, spec.context_length - 9);
      const std::string key = "key-" + std::to_string(i);
      const std::string value = std::to_string(100000 + rng.index(900000));
      const auto split = static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(filler) + 1));
      const std::uint64_t fill_seed = rng.next();
      t.prompt = tag;
      if (split > 0) t.prompt += " " + make_prompt(split, fill_seed);
      t.prompt += " " + key + " = " + value;
      if (filler - split > 0) t.prompt += " " + make_prompt(filler - split, fill_seed ^ 1);
      t.prompt += " Question: value of " + key + " ?";
      t.reference_answer = value;
      t.context_length = count_tokens(t.prompt);
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

namespace {
const std::vector<std::string> kTaskHeader = {"id",       "suite",            "prompt",
                                              "context_length", "verifier", "reference_answer",
                                              "is_reasoning"};
}

std::vector<EvalTask> load_eval_tasks_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  t.expect_header(kTaskHeader);
  std::vector<EvalTask> tasks;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const auto& row = t.rows()[r];
    try {
      EvalTask task{row[0], row[1], row[2], parse_int(row[3]), parse_verifier(row[4]), row[5],
                    parse_bool(row[6])};
      task.validate();
      tasks.push_back(std::move(task));
    } catch (const Error& e) {
      throw ParseError(t.source + " line " + std::to_string(r + 2) + ": " + e.what());
    }
  }
  return tasks;
}

void save_eval_tasks_csv(const std::filesystem::path& path, std::span<const EvalTask> tasks) {
  csv::Table t(kTaskHeader);
  for (const auto& task : tasks) {
    t.add_row({task.id, task.suite, task.prompt, std::to_string(task.context_length),
               std::string(to_string(task.verifier)), task.reference_answer,
               task.is_reasoning ? "true" : "false"});
  }
  csv::write(path, t);
}

}  // namespace epbench
