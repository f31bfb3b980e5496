#include <algorithm>

#include "cpl/error.hpp"
#include "cpl/prefdata.hpp"

namespace cpl {

ExampleResolver::ExampleResolver(const Environment& env, std::span<const Problem> problems,
                                 std::size_t feature_dim)
    : env_(env), dim_(feature_dim) {
  for (const auto& p : problems) problems_.emplace(p.id, p);
}

const Problem& ExampleResolver::problem(const std::string& id) const {
  auto it = problems_.find(id);
  if (it == problems_.end()) throw ParseError("unknown problem '" + id + "'");
  return it->second;
}

State ExampleResolver::state(const std::string& key) const {
  auto [id, steps] = split_state_key(key);
  const Problem& p = problem(id);
  State s = initial_state(p);
  for (const auto& display : steps) {
    if (env_.is_terminal(s)) throw ParseError("state key continues past a terminal state: " + key);
    const auto cands = env_.candidate_actions(p, s);
    auto it = std::find_if(cands.begin(), cands.end(), [&](const StepAction& a) { return a.display == display; });
    if (it == cands.end()) throw ParseError("step '" + display + "' is not a candidate in " + key);
    s = env_.apply(p, s, *it);
  }
  return s;
}

std::vector<FeatureVector> ExampleResolver::features_at(const std::string& key,
                                                        std::span<const std::string> displays) const {
  const State s = state(key);
  if (env_.is_terminal(s)) throw ParseError("state is terminal: " + key);
  const auto cands = env_.candidate_actions(problem(s.problem_id), s);
  const bool same = cands.size() == displays.size() &&
                    std::equal(cands.begin(), cands.end(), displays.begin(),
                               [](const StepAction& a, const std::string& d) { return a.display == d; });
  if (!same) throw ParseError("candidate list does not match the environment at " + key);
  return featurize_all(s, cands, dim_);
}

StepExample ExampleResolver::resolve(const SftStep& step) const {
  return {features_at(step.state_key, step.candidates), step.chosen_idx};
}

PairExample ExampleResolver::resolve(const PreferencePair& pair) const {
  return {features_at(pair.state_key, pair.candidates), pair.chosen_idx, pair.rejected_idx,
          pair.v_chosen, pair.v_rejected, pair.kind};
}

ResponseExample ExampleResolver::resolve(const ResponsePair& pair) const {
  ResponseExample out;
  for (const auto& s : pair.chosen) out.chosen.push_back(resolve(s));
  for (const auto& s : pair.rejected) out.rejected.push_back(resolve(s));
  return out;
}

std::vector<StepExample> ExampleResolver::resolve_all(std::span<const SftTrajectory> trajs) const {
  std::vector<StepExample> out;
  for (const auto& t : trajs)
    for (const auto& s : t.steps) out.push_back(resolve(s));
  return out;
}

std::vector<PairExample> ExampleResolver::resolve_all(std::span<const PreferencePair> pairs) const {
  std::vector<PairExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(resolve(p));
  return out;
}

std::vector<ResponseExample> ExampleResolver::resolve_all(std::span<const ResponsePair> pairs) const {
  std::vector<ResponseExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(resolve(p));
  return out;
}

}  // namespace cpl
