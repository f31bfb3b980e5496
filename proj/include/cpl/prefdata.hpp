#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cpl/env.hpp"
#include "cpl/features.hpp"
#include "cpl/mcts.hpp"
#include "cpl/value_model.hpp"

namespace cpl {

inline constexpr int kDataFormatVersion = 1;

enum class PairStrategy { AllPlansOneSolution, OnePlanOneSolution, AllPlansAllSolutions, OnePlanAllSolutions };

/// Accepts "all-plans-one-solution" style names and "AllPlans_OneSolution".
/// Throws ConfigError otherwise.
PairStrategy parse_pair_strategy(std::string_view s);
std::string_view to_string(PairStrategy s);
inline constexpr PairStrategy kAllPairStrategies[] = {
    PairStrategy::OnePlanOneSolution, PairStrategy::AllPlansOneSolution, PairStrategy::AllPlansAllSolutions,
    PairStrategy::OnePlanAllSolutions};

/// Two visited siblings under one parent state, chosen with V > 0 and
/// rejected with V < 0 (solution pairs: correct vs incorrect verdict).
struct PreferencePair {
  std::string problem_id;
  std::string state_key;
  std::vector<std::string> candidates;  // full candidate universe at the parent
  std::size_t chosen_idx = 0;
  std::size_t rejected_idx = 0;
  double v_chosen = 0.0;
  double v_rejected = 0.0;
  StepKind kind = StepKind::Plan;

  bool operator==(const PreferencePair&) const = default;
};

struct SftStep {
  std::string state_key;
  std::vector<std::string> candidates;
  std::size_t chosen_idx = 0;

  bool operator==(const SftStep&) const = default;
};

/// Root-to-terminal path ending in a correct answer.
struct SftTrajectory {
  std::string problem_id;
  std::vector<SftStep> steps;

  bool operator==(const SftTrajectory&) const = default;
};

/// A correct and an incorrect complete response to the same problem.
struct ResponsePair {
  std::string problem_id;
  std::vector<SftStep> chosen;
  std::vector<SftStep> rejected;

  bool operator==(const ResponsePair&) const = default;
};

struct DatasetStats {
  double avg_depth = 0.0;
  double pos_neg_ratio = 0.0;  // positives / negatives
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t plan_pair_count = 0;
  std::size_t solution_pair_count = 0;

  bool operator==(const DatasetStats&) const = default;
};

/// Up to max_per_problem distinct correct root-to-terminal paths per tree,
/// drawn uniformly with a per-problem stream derived from `seed`.
std::vector<SftTrajectory> extract_sft(std::span<const PlanTree> trees, std::size_t max_per_problem,
                                       std::uint64_t seed);

std::vector<PreferencePair> extract_pairs(const PlanTree& tree, PairStrategy strategy, std::uint64_t seed);

/// Random (correct, incorrect) complete-path pairs, at most max_pairs per tree.
std::vector<ResponsePair> extract_response_pairs(const PlanTree& tree, std::size_t max_pairs, std::uint64_t seed);

/// One label per node with N >= 1; the target is the node's V.
std::vector<ValueLabel> extract_value_labels(const PlanTree& tree);

DatasetStats compute_stats(std::span<const PlanTree> trees, std::span<const PreferencePair> pairs);
DatasetStats compute_stats(std::span<const DumpedTree> trees, std::span<const PreferencePair> pairs);

/// "1:3.16" style negatives-per-positive rendering.
std::string format_pos_neg(const DatasetStats& s);

/// Markdown table with columns Round | Avg Depth | Pos:Neg | Plan Pairs | Solution Pairs.
std::string render_stats_table(const std::map<int, DatasetStats>& rounds);

// ---- Persistence (line-delimited JSON, each row carries format_version) ----

Json pair_to_json(const PreferencePair& p);
PreferencePair pair_from_json(const Json& j);
std::size_t save_pairs(std::span<const PreferencePair> pairs, const std::filesystem::path& path);
/// Throws ParseError naming the malformed line.
std::vector<PreferencePair> load_pairs(const std::filesystem::path& path);

std::size_t save_sft(std::span<const SftTrajectory> trajs, const std::filesystem::path& path);
std::vector<SftTrajectory> load_sft(const std::filesystem::path& path);

std::size_t save_response_pairs(std::span<const ResponsePair> pairs, const std::filesystem::path& path);
std::vector<ResponsePair> load_response_pairs(const std::filesystem::path& path);

std::size_t save_value_labels(std::span<const ValueLabel> labels, const std::filesystem::path& path);
/// Labels store the state key; states are rebuilt through `resolver`.
class ExampleResolver;
std::vector<ValueLabel> load_value_labels(const std::filesystem::path& path, const ExampleResolver& resolver);

// ---- Resolution into training examples -----------------------------------

struct StepExample {
  std::vector<FeatureVector> features;  // one per candidate
  std::size_t chosen = 0;
};

struct PairExample {
  std::vector<FeatureVector> features;
  std::size_t chosen = 0;
  std::size_t rejected = 0;
  double v_chosen = 0.0;
  double v_rejected = 0.0;
  StepKind kind = StepKind::Plan;
};

struct ResponseExample {
  std::vector<StepExample> chosen;
  std::vector<StepExample> rejected;
};

/// Rebuilds states from their keys by replaying display strings through the
/// environment, and checks persisted candidate lists against the live ones.
class ExampleResolver {
 public:
  ExampleResolver(const Environment& env, std::span<const Problem> problems, std::size_t feature_dim);

  const Problem& problem(const std::string& id) const;
  /// Throws ParseError if the key names an unknown problem or an illegal step.
  State state(const std::string& key) const;

  StepExample resolve(const SftStep& step) const;
  PairExample resolve(const PreferencePair& pair) const;
  ResponseExample resolve(const ResponsePair& pair) const;

  std::vector<StepExample> resolve_all(std::span<const SftTrajectory> trajs) const;
  std::vector<PairExample> resolve_all(std::span<const PreferencePair> pairs) const;
  std::vector<ResponseExample> resolve_all(std::span<const ResponsePair> pairs) const;

  std::size_t feature_dim() const { return dim_; }

 private:
  std::vector<FeatureVector> features_at(const std::string& key, std::span<const std::string> displays) const;

  const Environment& env_;
  std::unordered_map<std::string, Problem> problems_;
  std::size_t dim_;
};

}  // namespace cpl
