#include <algorithm>
#include <cctype>
#include <string>

#include "cpl/error.hpp"
#include "cpl/hash.hpp"
#include "cpl/prefdata.hpp"
#include "cpl/rng.hpp"

namespace cpl {

namespace {

std::string normalize_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> displays(const std::vector<StepAction>& actions) {
  std::vector<std::string> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(a.display);
  return out;
}

bool is_visited_terminal(const TreeNode& n) { return n.N >= 1 && n.terminal_verdict.has_value(); }

/// Node ids from the root's first child down to `leaf`.
std::vector<int> path_to(const PlanTree& tree, int leaf) {
  std::vector<int> path;
  for (int id = leaf; id > 0; id = tree.nodes[static_cast<std::size_t>(id)].parent) path.push_back(id);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<SftStep> steps_along(const PlanTree& tree, int leaf) {
  std::vector<SftStep> steps;
  for (int id : path_to(tree, leaf)) {
    const auto& child = tree.nodes[static_cast<std::size_t>(id)];
    const auto& parent = tree.nodes[static_cast<std::size_t>(child.parent)];
    auto pos = std::find(parent.children.begin(), parent.children.end(), id) - parent.children.begin();
    steps.push_back({state_key(parent.state), displays(parent.candidates),
                     parent.child_candidate[static_cast<std::size_t>(pos)]});
  }
  return steps;
}

std::vector<int> terminals(const PlanTree& tree, bool correct) {
  std::vector<int> out;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (is_visited_terminal(n) && n.terminal_verdict->correct == correct) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

PairStrategy parse_pair_strategy(std::string_view s) {
  const std::string n = normalize_name(s);
  if (n == "allplansonesolution") return PairStrategy::AllPlansOneSolution;
  if (n == "oneplanonesolution") return PairStrategy::OnePlanOneSolution;
  if (n == "allplansallsolutions") return PairStrategy::AllPlansAllSolutions;
  if (n == "oneplanallsolutions") return PairStrategy::OnePlanAllSolutions;
  throw ConfigError("unknown pair strategy '" + std::string(s) + "'");
}

std::string_view to_string(PairStrategy s) {
  switch (s) {
    case PairStrategy::AllPlansOneSolution: return "all-plans-one-solution";
    case PairStrategy::OnePlanOneSolution: return "one-plan-one-solution";
    case PairStrategy::AllPlansAllSolutions: return "all-plans-all-solutions";
    case PairStrategy::OnePlanAllSolutions: return "one-plan-all-solutions";
  }
  return "?";
}

std::vector<SftTrajectory> extract_sft(std::span<const PlanTree> trees, std::size_t max_per_problem,
                                       std::uint64_t seed) {
  std::vector<SftTrajectory> out;
  for (const auto& tree : trees) {
    auto leaves = terminals(tree, true);
    Rng rng(derive_seed(derive_seed(seed, "sft"), tree.problem.id));
    rng.shuffle(leaves);
    if (leaves.size() > max_per_problem) leaves.resize(max_per_problem);
    for (int leaf : leaves) out.push_back({tree.problem.id, steps_along(tree, leaf)});
  }
  return out;
}

std::vector<PreferencePair> extract_pairs(const PlanTree& tree, PairStrategy strategy, std::uint64_t seed) {
  const bool all_plans =
      strategy == PairStrategy::AllPlansOneSolution || strategy == PairStrategy::AllPlansAllSolutions;
  const bool all_solutions =
      strategy == PairStrategy::AllPlansAllSolutions || strategy == PairStrategy::OnePlanAllSolutions;
  Rng rng(derive_seed(derive_seed(seed, "pairs"), tree.problem.id));

  std::vector<PreferencePair> out;
  for (const auto& parent : tree.nodes) {
    if (!parent.expanded || parent.children.empty()) continue;
    const std::string key = state_key(parent.state);
    const auto cands = displays(parent.candidates);

    // Positions within parent.children.
    std::vector<std::size_t> plan_pos, plan_neg, sol_pos, sol_neg;
    for (std::size_t i = 0; i < parent.children.size(); ++i) {
      const auto& c = tree.nodes[static_cast<std::size_t>(parent.children[i])];
      if (c.N < 1 || c.V == 0.0) continue;
      if (c.incoming_action->kind == StepKind::Plan) {
        (c.V > 0.0 ? plan_pos : plan_neg).push_back(i);
      } else {
        bool correct = c.terminal_verdict ? c.terminal_verdict->correct : c.V > 0.0;
        (correct ? sol_pos : sol_neg).push_back(i);
      }
    }

    auto emit = [&](std::size_t w, std::size_t l, StepKind kind) {
      const auto& cw = tree.nodes[static_cast<std::size_t>(parent.children[w])];
      const auto& cl = tree.nodes[static_cast<std::size_t>(parent.children[l])];
      out.push_back({tree.problem.id, key, cands, parent.child_candidate[w], parent.child_candidate[l], cw.V, cl.V,
                     kind});
    };
    auto v_of = [&](std::size_t i) { return tree.nodes[static_cast<std::size_t>(parent.children[i])].V; };

    if (!plan_pos.empty() && !plan_neg.empty()) {
      if (all_plans) {
        for (auto w : plan_pos)
          for (auto l : plan_neg) emit(w, l, StepKind::Plan);
      } else {
        // max_element / min_element keep the first of equal values.
        auto w = *std::max_element(plan_pos.begin(), plan_pos.end(),
                                   [&](std::size_t a, std::size_t b) { return v_of(a) < v_of(b); });
        auto l = *std::min_element(plan_neg.begin(), plan_neg.end(),
                                   [&](std::size_t a, std::size_t b) { return v_of(a) < v_of(b); });
        emit(w, l, StepKind::Plan);
      }
    }
    if (!sol_pos.empty() && !sol_neg.empty()) {
      if (all_solutions) {
        for (auto w : sol_pos)
          for (auto l : sol_neg) emit(w, l, StepKind::Solution);
      } else {
        emit(sol_pos[rng.below(sol_pos.size())], sol_neg[rng.below(sol_neg.size())], StepKind::Solution);
      }
    }
  }
  return out;
}

std::vector<ResponsePair> extract_response_pairs(const PlanTree& tree, std::size_t max_pairs, std::uint64_t seed) {
  const auto good = terminals(tree, true);
  const auto bad = terminals(tree, false);
  std::vector<ResponsePair> out;
  if (good.empty() || bad.empty() || max_pairs == 0) return out;

  std::vector<std::pair<int, int>> combos;
  for (int g : good)
    for (int b : bad) combos.emplace_back(g, b);
  Rng rng(derive_seed(derive_seed(seed, "responses"), tree.problem.id));
  rng.shuffle(combos);
  if (combos.size() > max_pairs) combos.resize(max_pairs);
  for (auto [g, b] : combos) out.push_back({tree.problem.id, steps_along(tree, g), steps_along(tree, b)});
  return out;
}

std::vector<ValueLabel> extract_value_labels(const PlanTree& tree) {
  std::vector<ValueLabel> out;
  for (const auto& n : tree.nodes) {
    if (n.N >= 1) out.push_back({n.state, std::clamp(n.V, -1.0, 1.0)});
  }
  return out;
}

}  // namespace cpl
