#include <algorithm>

#include "cpl/env.hpp"
#include "cpl/error.hpp"

namespace cpl {

Environment::Environment(int max_depth) : max_depth_(max_depth) {
  if (max_depth < 2) throw ConfigError("max_depth must be >= 2");
}

std::vector<StepAction> Environment::candidate_actions(const Problem& p, const State& s) const {
  if (s.problem_id != p.id) throw PreconditionError("state belongs to problem '" + s.problem_id + "', not '" + p.id + "'");
  if (is_terminal(s)) throw PreconditionError("candidate_actions called on a terminal state");
  return enumerate(p, s);
}

State Environment::apply(const Problem& p, const State& s, const StepAction& a) const {
  if (is_terminal(s)) throw InvalidTransition("cannot apply '" + a.display + "' to a terminal state");
  const auto candidates = enumerate(p, s);
  const auto it = std::find_if(candidates.begin(), candidates.end(), [&](const StepAction& c) {
    return c.display == a.display && c.kind == a.kind && c.payload == a.payload;
  });
  if (it == candidates.end()) {
    throw InvalidTransition("'" + a.display + "' is not a candidate at " + state_key(s));
  }
  return apply_unchecked(s, *it);
}

State Environment::apply_unchecked(const State& s, const StepAction& a) const {
  if (is_terminal(s)) throw InvalidTransition("cannot apply '" + a.display + "' to a terminal state");
  State next = s;
  next.trace.push_back(a);
  next.depth = s.depth + 1;
  next.phase = a.kind == StepKind::Solution ? Phase::Solved : Phase::Planning;
  return next;
}

bool Environment::is_terminal(const State& s) const { return s.phase == Phase::Solved || s.depth >= max_depth_; }

Verdict Environment::verify(const Problem& p, const State& s) const {
  if (!is_terminal(s)) throw PreconditionError("verify called on a non-terminal state");
  // Depth-capped traces without an answer count as failures.
  if (s.phase != Phase::Solved || s.trace.empty()) return {false, -1.0};
  const bool ok = s.trace.back().payload == p.ground_truth;
  return {ok, ok ? 1.0 : -1.0};
}

std::unique_ptr<Environment> make_environment(std::string_view name, int max_depth) {
  if (name == "arith") return std::make_unique<ArithChainEnv>(max_depth);
  if (name == "grid") return std::make_unique<GridPlanEnv>(max_depth);
  throw ConfigError("unknown environment '" + std::string(name) + "' (expected arith|grid)");
}

}  // namespace cpl
