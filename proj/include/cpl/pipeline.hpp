#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpl/env.hpp"
#include "cpl/json_io.hpp"
#include "cpl/mcts.hpp"
#include "cpl/policy.hpp"
#include "cpl/prefdata.hpp"
#include "cpl/train.hpp"
#include "cpl/value_model.hpp"

namespace cpl {

struct ExperimentConfig {
  std::string env = "arith";
  Difficulty difficulty = Difficulty::Easy;
  std::size_t n_train = 200;
  std::size_t n_heldout = 100;
  int rounds = 2;
  double round1_fraction = 1.0;  // share of the training pool searched in round 1
  std::vector<SearchConfig> search = default_search();  // per round; the last entry repeats
  TrainConfig sft = TrainConfig::sft_defaults();
  TrainConfig apo = TrainConfig::apo_defaults();
  int value_epochs = 100;
  double value_lr = 0.1;
  PairStrategy pair_strategy = PairStrategy::AllPlansOneSolution;
  std::size_t sft_per_problem = 4;
  std::size_t response_pairs_per_problem = 4;
  bool baselines = true;          // Step-DPO and Instance-DPO on round-1 data
  bool strategy_ablation = true;  // all four pair strategies on round-1 data
  std::size_t feature_dim = kDefaultFeatureDim;
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  /// Round 1 at 200 simulations, later rounds at 100.
  static std::vector<SearchConfig> default_search();

  const SearchConfig& search_for(int round) const;
  int max_depth() const { return search.front().max_depth; }

  /// Throws ConfigError on invalid values.
  void validate() const;
  Json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const Json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Tree generation fans out over `workers` threads. Each tree's search seed
/// is derived from config.rng_seed and the problem id, so results do not
/// depend on scheduling.
std::vector<PlanTree> generate_trees(const Environment& env, std::span<const Problem> problems,
                                     const StepProposer& proposer, const ValueParams& value,
                                     const SearchConfig& config, std::size_t workers = 1);

/// Greedy argmax rollout from the empty state to a terminal state.
State greedy_rollout(const Environment& env, const Problem& p, const PolicyParams& policy);

/// Mean correct-verdict rate of greedy rollouts. Throws PreconditionError on
/// an empty problem set.
double evaluate_policy(const Environment& env, const PolicyParams& policy, std::span<const Problem> problems);

/// Everything extracted from one round's trees.
struct RoundData {
  std::vector<SftTrajectory> sft;
  std::map<PairStrategy, std::vector<PreferencePair>> pairs;
  std::vector<ResponsePair> responses;
  std::vector<ValueLabel> value_labels;
  DatasetStats stats;  // computed with the configured strategy's pairs
};

RoundData collect_round_data(std::span<const PlanTree> trees, const ExperimentConfig& cfg, int round);

struct RoundReport {
  int round = 0;
  std::size_t n_problems = 0;
  std::size_t solved_trees = 0;  // trees containing at least one correct path
  DatasetStats stats;
  LossReport sft_loss;
  LossReport apo_loss;
  std::vector<double> value_loss;
  std::map<std::string, double> accuracy;           // variant -> held-out accuracy
  std::map<std::string, double> strategy_accuracy;  // pair strategy -> held-out accuracy
  std::map<std::string, std::string> artifacts;     // name -> path relative to the output directory

  Json to_json() const;
};

struct RoundOutput {
  PolicyParams apo_policy;
  ValueParams value;
  RoundReport report;
};

/// One generate / SFT / Step-APO / value-fit iteration. `gen_policy` and
/// `gen_value` drive the search; SFT always starts from `base`. Artifacts are
/// written under out_dir/round-<n>. Throws DegenerateRoundError when no tree
/// holds a correct path.
RoundOutput run_round(const ExperimentConfig& cfg, int round, const Environment& env,
                      std::span<const Problem> train, std::span<const Problem> heldout, const PolicyParams& base,
                      const PolicyParams& gen_policy, const ValueParams& gen_value,
                      const std::filesystem::path& out_dir);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RoundReport> rounds;
  std::map<std::string, std::string> artifacts;

  Json to_json() const;
  /// Markdown comparison of variants across rounds.
  std::string comparison_table() const;
  std::string strategy_table() const;
};

/// Runs every round, then writes report.json, stats.md and manifest.json.
/// Round failures are rethrown with the round index prefixed.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// ---- Artifact manifest -------------------------------------------------------

std::string sha256_file(const std::filesystem::path& path);

/// manifest.json: {artifacts: [{path, bytes, sha256}]} with paths relative to dir.
void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& relative_paths);
/// Names of artifacts that are missing or whose hash changed.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace cpl
