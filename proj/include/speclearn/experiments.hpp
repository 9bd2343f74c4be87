#pragma once

#include "speclearn/belief.hpp"
#include "speclearn/domains.hpp"
#include "speclearn/inference.hpp"
#include "speclearn/io.hpp"
#include "speclearn/planner.hpp"
#include "speclearn/reward_machine.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace speclearn {

enum class Protocol { Active, Random, Batch };

std::string to_string(Protocol p);
/// "active", "random" or "batch" (case-insensitive).
Protocol protocol_from_string(const std::string& s);

enum class PlannerKind { QLearning, Exact };

struct ProtocolConfig
{
  Protocol protocol = Protocol::Active;
  std::size_t n_demos_initial = 2;
  std::size_t n_query = 1;
  DomainSpec domain = DomainSpec::synthetic(5, 5);
  /// Ground truth for every run; sampled per run when empty.
  std::optional<TemplateFormula> ground_truth;
  GroundTruthOptions sampler;
  InferenceConfig inference;
  QLearningConfig planner;
  PlannerKind planner_kind = PlannerKind::QLearning;
  CompileOptions compile;

  void validate() const;
};

/// Independent stream `stream` of a master seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

struct RunRecord
{
  std::size_t run_id = 0;
  std::uint64_t seed = 0;
  Protocol protocol = Protocol::Active;
  std::size_t n_query = 0;
  std::string ground_truth;
  /// Round 0 follows the initial demonstrations; one more round per query or extra demo.
  std::vector<double> entropy;
  std::vector<double> similarity;
  /// Labels the teacher gave to learner-generated executions (empty for Batch).
  std::vector<bool> query_labels;
  Dataset dataset;
  Belief final_belief;
  double wall_seconds = 0.0;

  double final_entropy() const { return entropy.back(); }
  double final_similarity() const { return similarity.back(); }

  /// Wall time is left out when `with_timing` is false so records compare byte for byte.
  json to_json(bool with_timing = true) const;
};

/// Runs one protocol end to end. Everything random is derived from `seed`, and the
/// three protocols draw the same ground truth and initial demonstrations for a seed.
RunRecord run_protocol(const ProtocolConfig& cfg, std::uint64_t seed, std::size_t run_id = 0);

RunRecord run_active(ProtocolConfig cfg, std::uint64_t seed, std::size_t run_id = 0);
RunRecord run_random(ProtocolConfig cfg, std::uint64_t seed, std::size_t run_id = 0);
RunRecord run_batch(ProtocolConfig cfg, std::uint64_t seed, std::size_t run_id = 0);

/// Uniformly random execution: each step picks among the actions that change the
/// environment state (all actions if none do) until completion or the horizon.
Trace random_execution(const EnvironmentMDP& env, Rng& rng);

/// Shaped-reward query execution for the current belief, or nullopt when the machine
/// has no reachable terminal state.
std::optional<Trace> plan_query(const EnvironmentMDP& env, const Belief& b, const ProtocolConfig& cfg,
                                std::uint64_t seed);

/// Minimum-regret execution for the current belief.
Trace plan_min_regret(const EnvironmentMDP& env, const Belief& b, const ProtocolConfig& cfg, std::uint64_t seed);

struct Interval
{
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

double mean(const std::vector<double>& xs);
double median(const std::vector<double>& xs);

/// Percentile bootstrap interval of `stat` with `resamples` draws.
Interval bootstrap_ci(const std::vector<double>& xs, const std::function<double(const std::vector<double>&)>& stat,
                      std::size_t resamples, std::uint64_t seed, double level = 0.95);

struct SweepConfig
{
  std::vector<Protocol> protocols{Protocol::Active, Protocol::Random, Protocol::Batch};
  std::vector<std::size_t> n_query{1, 3, 6};
  std::size_t runs = 30;
  std::uint64_t seed = 7;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::size_t bootstrap_resamples = 1000;
  ProtocolConfig base;
};

struct CellSummary
{
  Protocol protocol = Protocol::Active;
  std::size_t n_query = 0;
  std::size_t total_executions = 0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  Interval mean_entropy;
  Interval median_similarity;
};

struct SweepResult
{
  std::vector<RunRecord> records;  // cell order, then run order
  std::vector<CellSummary> cells;
  std::vector<std::string> failures;

  const CellSummary& cell(Protocol p, std::size_t n_query) const;

  std::string summary_csv() const;
  /// Per-cell, per-round mean entropy and median similarity keyed by n_query and by
  /// total executions.
  json plot_data() const;
};

/// Run i of every cell uses master seed derive_seed(seed, i), so protocols are compared
/// on identical ground truths and initial demonstrations. Runs that throw are counted
/// and left out of the aggregates.
SweepResult sweep(const SweepConfig& cfg);

/// raw.jsonl, summary.csv, plot.json and timing.csv under `dir` (created if missing).
/// Only timing.csv depends on the machine; the rest is a pure function of the config.
void write_sweep(const SweepResult& r, const std::string& dir);

}  // namespace speclearn
