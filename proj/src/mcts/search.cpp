#include <cmath>
#include <limits>
#include <numeric>

#include "cpl/mcts.hpp"

namespace cpl {

namespace {

constexpr double kPriorSumTolerance = 1e-9;

bool node_terminal(const PlanTree& tree, const TreeNode& n) {
  return n.state.phase == Phase::Solved || n.state.depth >= tree.config.max_depth;
}

}  // namespace

void SearchConfig::validate() const {
  if (n_simulations < 1 || root_children < 1 || inner_children < 1 || max_depth < 1) {
    throw ConfigError("search counts must all be >= 1");
  }
  if (!(c_puct > 0.0)) throw ConfigError("c_puct must be > 0");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
}

Expansion PolicyProposer::propose(const Problem& p, const State& s, std::size_t k, double temperature,
                                  Rng& rng) const {
  Expansion e;
  e.candidates = env_.candidate_actions(p, s);
  const auto& params = policy_.params();
  const auto z = logits(params, featurize_all(s, e.candidates, params.feature_dim));
  e.chosen = sample_distinct(z, k, temperature, rng);
  const auto lp = log_softmax(z);
  double total = 0.0;
  for (const auto c : e.chosen) total += std::exp(lp[c]);
  for (const auto c : e.chosen) e.priors.push_back(std::exp(lp[c]) / total);
  return e;
}

double puct_score(double q, double prior, int parent_visits, int child_visits, double c_puct) {
  return q + c_puct * prior * std::sqrt(static_cast<double>(parent_visits)) / (1.0 + child_visits);
}

std::size_t select_child(const PlanTree& tree, const TreeNode& node, double c_puct, std::span<const double> priors) {
  if (!node.expanded || node.children.empty()) throw PreconditionError("select_child on an unexpanded node");
  if (priors.size() != node.children.size()) throw PreconditionError("select_child: one prior per child required");
  const double sum = std::accumulate(priors.begin(), priors.end(), 0.0);
  if (std::abs(sum - 1.0) > kPriorSumTolerance) throw PreconditionError("select_child: priors must sum to 1");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const auto& child = tree.nodes[static_cast<std::size_t>(node.children[i])];
    const double q = child.N > 0 ? child.Q_edge : 0.0;
    const double score = puct_score(q, priors[i], node.N, child.N, c_puct);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

void expand(PlanTree& tree, int node_id, const Environment& env, const StepProposer& proposer, Rng& rng) {
  auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
  if (node.expanded) throw PreconditionError("node " + std::to_string(node_id) + " is already expanded");
  if (node_terminal(tree, node)) throw PreconditionError("cannot expand terminal node " + std::to_string(node_id));
  const std::size_t k =
      static_cast<std::size_t>(node_id == 0 ? tree.config.root_children : tree.config.inner_children);
  Expansion e = proposer.propose(tree.problem, node.state, k, tree.config.temperature, rng);
  if (e.chosen.empty()) throw Error("proposer returned no steps at node " + std::to_string(node_id));

  std::vector<TreeNode> fresh;
  fresh.reserve(e.chosen.size());
  for (const auto c : e.chosen) {
    TreeNode child;
    child.state = e.enumerated ? env.apply(tree.problem, node.state, e.candidates[c])
                               : env.apply_unchecked(node.state, e.candidates[c]);
    child.parent = node_id;
    child.incoming_action = child.state.trace.back();
    fresh.push_back(std::move(child));
  }
  // `node` may dangle once nodes grows.
  const int first = static_cast<int>(tree.nodes.size());
  for (auto& f : fresh) tree.nodes.push_back(std::move(f));
  auto& parent = tree.nodes[static_cast<std::size_t>(node_id)];
  for (std::size_t i = 0; i < e.chosen.size(); ++i) parent.children.push_back(first + static_cast<int>(i));
  parent.priors = std::move(e.priors);
  parent.child_candidate = std::move(e.chosen);
  parent.candidates = std::move(e.candidates);
  parent.expanded = true;
}

double evaluate(PlanTree& tree, int node_id, const Environment& env, const ValueParams& value) {
  auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
  if (env.is_terminal(node.state)) {
    if (!node.terminal_verdict) node.terminal_verdict = env.verify(tree.problem, node.state);
    return node.terminal_verdict->reward;
  }
  return predict(value, node.state);
}

void backup(PlanTree& tree, std::span<const int> path, double leaf_value) {
  if (path.empty()) throw PreconditionError("backup requires a non-empty path");
  if (!(leaf_value >= -1.0 && leaf_value <= 1.0)) throw PreconditionError("leaf value outside [-1, 1]");

  auto& leaf = tree.nodes[static_cast<std::size_t>(path.back())];
  leaf.N += 1;
  leaf.leaf_visits += 1;
  leaf.leaf_value_sum += leaf_value;
  if (leaf.terminal_verdict) {
    leaf.V = leaf_value;
  } else {
    // Weighted mean over visited children once there are any, else the
    // node's own evaluations.
    double num = 0.0;
    int den = 0;
    for (const int c : leaf.children) {
      const auto& ch = tree.nodes[static_cast<std::size_t>(c)];
      if (ch.N > 0) {
        num += ch.N * ch.Q_edge;
        den += ch.N;
      }
    }
    leaf.V = den > 0 ? num / den : leaf.leaf_value_sum / leaf.leaf_visits;
  }

  for (std::size_t i = path.size() - 1; i-- > 0;) {
    auto& child = tree.nodes[static_cast<std::size_t>(path[i + 1])];
    auto& node = tree.nodes[static_cast<std::size_t>(path[i])];
    constexpr double kStepReward = 0.0;
    child.Q_edge = kStepReward + child.V;
    node.N += 1;
    double num = 0.0;
    int den = 0;
    for (const int c : node.children) {
      const auto& ch = tree.nodes[static_cast<std::size_t>(c)];
      if (ch.N > 0) {
        num += ch.N * ch.Q_edge;
        den += ch.N;
      }
    }
    node.V = num / den;
  }
}

PlanTree run_search(const Environment& env, const Problem& problem, const StepProposer& proposer,
                    const ValueParams& value, const SearchConfig& config, const SelectionObserver& observer) {
  config.validate();
  if (config.max_depth != env.max_depth()) {
    throw ConfigError("search max_depth " + std::to_string(config.max_depth) + " != environment max_depth " +
                      std::to_string(env.max_depth()));
  }
  PlanTree tree;
  tree.problem = problem;
  tree.config = config;
  TreeNode root;
  root.state = initial_state(problem);
  tree.nodes.push_back(std::move(root));

  Rng rng(config.rng_seed);
  std::vector<int> path;
  for (int sim = 0; sim < config.n_simulations; ++sim) {
    try {
      path.assign(1, 0);
      int node = 0;
      while (tree.nodes[static_cast<std::size_t>(node)].expanded &&
             !env.is_terminal(tree.nodes[static_cast<std::size_t>(node)].state)) {
        const auto& n = tree.nodes[static_cast<std::size_t>(node)];
        const std::size_t pick = select_child(tree, n, config.c_puct, n.priors);
        if (observer) observer(tree, node, pick);
        node = n.children[pick];
        path.push_back(node);
      }
      if (!env.is_terminal(tree.nodes[static_cast<std::size_t>(node)].state)) {
        expand(tree, node, env, proposer, rng);
      }
      const double leaf_value = evaluate(tree, node, env, value);
      backup(tree, path, leaf_value);
    } catch (const SearchError&) {
      throw;
    } catch (const Error& e) {
      throw SearchError(sim, e.what());
    }
  }
  return tree;
}

PlanTree run_search(const Environment& env, const Problem& problem, const PolicyParams& policy,
                    const ValueParams& value, const SearchConfig& config) {
  const PolicyProposer proposer(env, PolicySnapshot(policy));
  return run_search(env, problem, proposer, value, config);
}

}  // namespace cpl
