#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpl/env.hpp"
#include "cpl/error.hpp"
#include "cpl/json_io.hpp"
#include "cpl/policy.hpp"
#include "cpl/rng.hpp"
#include "cpl/value_model.hpp"

namespace cpl {

struct SearchConfig {
  double c_puct = 1.5;
  int n_simulations = 64;
  int root_children = 5;
  int inner_children = 3;
  int max_depth = 6;
  double temperature = 0.7;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError on non-positive counts, c_puct or temperature.
  void validate() const;
};

struct TreeNode {
  State state;
  int parent = -1;
  std::optional<StepAction> incoming_action;
  std::vector<int> children;
  std::vector<double> priors;  // aligned with children, sums to 1

  /// Full candidate universe seen at expansion, and each child's position in it.
  std::vector<StepAction> candidates;
  std::vector<std::size_t> child_candidate;

  int N = 0;
  double V = 0.0;
  double Q_edge = 0.0;
  bool expanded = false;
  std::optional<Verdict> terminal_verdict;

  int leaf_visits = 0;  // times this node was the evaluated leaf
  double leaf_value_sum = 0.0;
};

struct PlanTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  Problem problem;
  SearchConfig config;

  const TreeNode& root() const { return nodes.front(); }
};

/// Source of child steps during expansion.
struct Expansion {
  std::vector<StepAction> candidates;
  std::vector<std::size_t> chosen;  // indices into candidates, distinct
  std::vector<double> priors;       // aligned with chosen, sums to 1
  bool enumerated = true;           // chosen steps come from the environment's candidate universe
};

class StepProposer {
 public:
  virtual ~StepProposer() = default;
  virtual Expansion propose(const Problem& p, const State& s, std::size_t k, double temperature, Rng& rng) const = 0;
};

/// Samples distinct candidates from the built-in softmax policy. Priors are
/// pi(a|s) at temperature 1, renormalized over the sampled children.
class PolicyProposer final : public StepProposer {
 public:
  PolicyProposer(const Environment& env, PolicySnapshot policy) : env_(env), policy_(std::move(policy)) {}
  Expansion propose(const Problem& p, const State& s, std::size_t k, double temperature, Rng& rng) const override;

 private:
  const Environment& env_;
  PolicySnapshot policy_;
};

class SearchError : public Error {
 public:
  SearchError(int simulation, const std::string& what)
      : Error("simulation " + std::to_string(simulation) + ": " + what), simulation_(simulation) {}
  int simulation() const { return simulation_; }

 private:
  int simulation_;
};

/// PUCT score Q + c * prior * sqrt(N_parent) / (1 + N_child). Unvisited
/// children use Q = 0.
double puct_score(double q, double prior, int parent_visits, int child_visits, double c_puct);

/// Argmax of the PUCT score over the node's children, lowest index on ties.
/// Throws PreconditionError for unexpanded nodes or priors not summing to 1.
std::size_t select_child(const PlanTree& tree, const TreeNode& node, double c_puct, std::span<const double> priors);

/// Creates children from the proposer: root_children at the root, else
/// inner_children. Throws PreconditionError on expanded or terminal nodes.
void expand(PlanTree& tree, int node, const Environment& env, const StepProposer& proposer, Rng& rng);

/// Terminal states return the verdict reward (and cache the verdict);
/// others return the value model's prediction.
double evaluate(PlanTree& tree, int node, const Environment& env, const ValueParams& value);

/// Bottom-up update along a root-to-leaf path of node ids.
void backup(PlanTree& tree, std::span<const int> path, double leaf_value);

/// Called at every selection step with the node, its priors and the pick.
using SelectionObserver = std::function<void(const PlanTree&, int node, std::size_t chosen)>;

PlanTree run_search(const Environment& env, const Problem& problem, const StepProposer& proposer,
                    const ValueParams& value, const SearchConfig& config, const SelectionObserver& observer = {});

PlanTree run_search(const Environment& env, const Problem& problem, const PolicyParams& policy,
                    const ValueParams& value, const SearchConfig& config);

// ---- Dumps -----------------------------------------------------------------

/// Pre-order node list: {id, parent_id, action_display, action_kind, N, V,
/// Q_edge, terminal, correct?}, wrapped as {problem_id, nodes}.
Json tree_to_json(const PlanTree& tree);
std::string dump_tree(const PlanTree& tree);

/// Flat view of a dumped tree, used for stats and for re-verification.
struct DumpedNode {
  int id = 0;
  int parent_id = -1;
  std::string action_display;
  std::string action_kind;
  int N = 0;
  double V = 0.0;
  double Q_edge = 0.0;
  bool terminal = false;
  std::optional<bool> correct;
};

struct DumpedTree {
  std::string problem_id;
  std::vector<DumpedNode> nodes;  // pre-order
};

DumpedTree parse_tree_dump(const Json& j);

}  // namespace cpl
