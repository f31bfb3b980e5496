#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "cpl/error.hpp"
#include "cpl/hash.hpp"
#include "cpl/pipeline.hpp"

namespace cpl {

std::vector<PlanTree> generate_trees(const Environment& env, std::span<const Problem> problems,
                                     const StepProposer& proposer, const ValueParams& value,
                                     const SearchConfig& config, std::size_t workers) {
  std::vector<PlanTree> trees(problems.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&] {
    for (std::size_t i = next++; i < problems.size(); i = next++) {
      try {
        SearchConfig c = config;
        c.rng_seed = derive_seed(config.rng_seed, problems[i].id);
        trees[i] = run_search(env, problems[i], proposer, value, c);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = problems.size();
      }
    }
  };

  workers = std::max<std::size_t>(1, std::min(workers, problems.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return trees;
}

State greedy_rollout(const Environment& env, const Problem& p, const PolicyParams& policy) {
  State s = initial_state(p);
  while (!env.is_terminal(s)) {
    const auto cands = env.candidate_actions(p, s);
    const auto f = featurize_all(s, cands, policy.feature_dim);
    s = env.apply(p, s, cands[argmax(logits(policy, f))]);
  }
  return s;
}

double evaluate_policy(const Environment& env, const PolicyParams& policy, std::span<const Problem> problems) {
  if (problems.empty()) throw PreconditionError("evaluation needs at least one problem");
  std::size_t correct = 0;
  for (const auto& p : problems) {
    if (env.verify(p, greedy_rollout(env, p, policy)).correct) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(problems.size());
}

}  // namespace cpl
