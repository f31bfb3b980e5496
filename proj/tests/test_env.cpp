#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "cpl/env.hpp"
#include "cpl/error.hpp"
#include "cpl/json_io.hpp"
#include "oracles.hpp"

namespace {

using namespace cpl;

const Difficulty kLevels[] = {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard, Difficulty::Expert};

State follow_reference(const Environment& env, const Problem& p) {
  State s = initial_state(p);
  while (!env.is_terminal(s)) {
    auto step = env.reference_step(p, s);
    if (!step) break;
    s = env.apply(p, s, *step);
  }
  return s;
}

TEST(ArithChain, GroundTruthMatchesRecursiveEvaluator) {
  ArithChainEnv env;
  for (auto d : kLevels) {
    for (const auto& p : env.generate(1, 50, d)) {
      const auto& spec = std::get<ArithSpec>(p.spec);
      EXPECT_EQ(p.ground_truth, oracle::eval_quantity(spec, spec.target)) << p.id;
    }
  }
}

TEST(ArithChain, ChainLengthTracksDifficulty) {
  ArithChainEnv env;
  for (auto d : kLevels) {
    for (const auto& p : env.generate(3, 20, d)) {
      const auto& spec = std::get<ArithSpec>(p.spec);
      // Count quantities the target transitively reads, plus the target.
      std::set<int> seen;
      std::vector<int> stack{spec.target};
      while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        if (!seen.insert(i).second) continue;
        for (const auto& o : {spec.quantities[i].lhs, spec.quantities[i].rhs})
          if (o.is_ref()) stack.push_back(o.ref);
      }
      EXPECT_EQ(static_cast<int>(seen.size()), ArithChainEnv::chain_length(d));
      EXPECT_EQ(spec.quantities.size(), seen.size() + ArithChainEnv::kDecoys);
    }
  }
}

TEST(ArithChain, GenerationIsDeterministic) {
  ArithChainEnv env;
  EXPECT_EQ(env.generate(0, 5, Difficulty::Easy), env.generate(0, 5, Difficulty::Easy));
  EXPECT_NE(env.generate(0, 5, Difficulty::Easy), env.generate(1, 5, Difficulty::Easy));
}

TEST(ArithChain, InitialCandidatesHaveValidAndDecoySteps) {
  ArithChainEnv env;
  for (const auto& p : env.generate(0, 20, Difficulty::Easy)) {
    const State s = initial_state(p);
    const auto cands = env.candidate_actions(p, s);
    std::set<std::string> displays;
    bool valid = false, premature = false;
    for (const auto& a : cands) {
      displays.insert(a.display);
      EXPECT_EQ(a.kind, StepKind::Plan);
      if (std::find(a.tags.begin(), a.tags.end(), "premature") != a.tags.end()) premature = true;
    }
    EXPECT_EQ(displays.size(), cands.size());
    const auto ref = env.reference_step(p, s);
    ASSERT_TRUE(ref);
    valid = displays.count(ref->display) > 0;
    EXPECT_TRUE(valid);
    EXPECT_TRUE(premature);  // the chain's second quantity is not ready yet
  }
}

TEST(ArithChain, SolutionCandidatesOnlyAfterDependencies) {
  ArithChainEnv env;
  for (const auto& p : env.generate(4, 30, Difficulty::Medium)) {
    State s = initial_state(p);
    while (!env.is_terminal(s)) {
      const auto cands = env.candidate_actions(p, s);
      const auto ref = env.reference_step(p, s);
      ASSERT_TRUE(ref);
      const bool has_solution =
          std::any_of(cands.begin(), cands.end(), [](const StepAction& a) { return a.kind == StepKind::Solution; });
      EXPECT_EQ(has_solution, ref->kind == StepKind::Solution) << state_key(s);
      if (has_solution) {
        EXPECT_TRUE(std::any_of(cands.begin(), cands.end(),
                                [&](const StepAction& a) { return a.payload == p.ground_truth && a.kind == StepKind::Solution; }));
      }
      s = env.apply(p, s, *ref);
    }
  }
}

TEST(ArithChain, CandidateListsAreDeterministic) {
  ArithChainEnv env;
  const auto p = env.generate(9, 1, Difficulty::Hard).front();
  const State s = initial_state(p);
  EXPECT_EQ(env.candidate_actions(p, s), env.candidate_actions(p, s));
}

TEST(Environment, ReferencePathSolvesEveryProblem) {
  for (const char* name : {"arith", "grid"}) {
    auto env = make_environment(name);
    for (auto d : kLevels) {
      for (const auto& p : env->generate(5, 25, d)) {
        const State s = follow_reference(*env, p);
        ASSERT_TRUE(env->is_terminal(s)) << p.id;
        EXPECT_EQ(s.phase, Phase::Solved) << p.id;
        EXPECT_EQ(env->verify(p, s), (Verdict{true, 1.0})) << p.id;
        EXPECT_LE(s.depth, env->max_depth());
      }
    }
  }
}

TEST(Environment, ApplyIsPureAndTracksDepth) {
  ArithChainEnv env;
  const auto p = env.generate(0, 1, Difficulty::Easy).front();
  const State s0 = initial_state(p);
  const State copy = s0;
  const auto a = env.candidate_actions(p, s0).front();
  const State s1 = env.apply(p, s0, a);
  EXPECT_EQ(s0, copy);
  EXPECT_EQ(s1.depth, 1);
  EXPECT_EQ(s1.trace.size(), 1u);
  EXPECT_EQ(env.apply(p, s0, a), s1);
}

TEST(Environment, ErrorsOnBadTransitions) {
  ArithChainEnv env;
  const auto p = env.generate(0, 1, Difficulty::Easy).front();
  const State s0 = initial_state(p);
  EXPECT_THROW(env.apply(p, s0, StepAction{StepKind::Plan, 99, "compute q99 next", {}}), InvalidTransition);
  EXPECT_THROW(env.verify(p, s0), PreconditionError);

  const State solved = follow_reference(env, p);
  EXPECT_THROW(env.candidate_actions(p, solved), PreconditionError);
  EXPECT_THROW(env.apply(p, solved, solved.trace.back()), InvalidTransition);
}

TEST(Environment, WrongAnswerAndDepthCapAreFailures) {
  ArithChainEnv env(6);
  const auto p = env.generate(2, 1, Difficulty::Easy).front();
  State s = initial_state(p);
  // Reach the answer step, then take a wrong answer.
  while (true) {
    const auto ref = env.reference_step(p, s);
    ASSERT_TRUE(ref);
    if (ref->kind == StepKind::Solution) break;
    s = env.apply(p, s, *ref);
  }
  for (const auto& a : env.candidate_actions(p, s)) {
    if (a.kind == StepKind::Solution && a.payload != p.ground_truth) {
      EXPECT_EQ(env.verify(p, env.apply(p, s, a)), (Verdict{false, -1.0}));
    }
  }
  // Only "review" steps until the cap.
  State capped = initial_state(p);
  while (!env.is_terminal(capped)) {
    const auto cands = env.candidate_actions(p, capped);
    auto it = std::find_if(cands.begin(), cands.end(), [](const StepAction& a) { return a.payload == -1; });
    ASSERT_NE(it, cands.end());
    capped = env.apply(p, capped, *it);
  }
  EXPECT_EQ(capped.depth, 6);
  EXPECT_EQ(capped.phase, Phase::Planning);
  EXPECT_EQ(env.verify(p, capped).reward, -1.0);
}

TEST(GridPlan, GroundTruthMatchesRelaxationOracle) {
  GridPlanEnv env;
  for (auto d : kLevels) {
    for (const auto& p : env.generate(7, 25, d)) {
      const auto& g = std::get<GridSpec>(p.spec);
      EXPECT_EQ(g.rows, GridPlanEnv::grid_size(d));
      EXPECT_EQ(p.ground_truth, oracle::grid_shortest(g, g.start, g.goal)) << p.id;
      for (const auto& w : g.waypoints) EXPECT_GE(oracle::grid_shortest(g, g.start, w), 0);
    }
  }
}

TEST(Environment, UnknownNamesAndLevelsAreConfigErrors) {
  EXPECT_THROW(make_environment("chess"), ConfigError);
  EXPECT_THROW(parse_difficulty("impossible"), ConfigError);
  EXPECT_EQ(parse_difficulty("hard"), Difficulty::Hard);
}

TEST(StateKey, RoundTrips) {
  ArithChainEnv env;
  const auto p = env.generate(0, 1, Difficulty::Medium).front();
  State s = initial_state(p);
  s = env.apply(p, s, env.candidate_actions(p, s)[0]);
  s = env.apply(p, s, env.candidate_actions(p, s)[1]);
  auto [id, steps] = split_state_key(state_key(s));
  EXPECT_EQ(id, p.id);
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0], s.trace[0].display);
  EXPECT_EQ(steps[1], s.trace[1].display);
}

TEST(ProblemIo, RoundTripBothEnvironments) {
  const auto dir = std::filesystem::temp_directory_path() / "cpl_test_env_io";
  for (const char* name : {"arith", "grid"}) {
    auto env = make_environment(name);
    const auto problems = env->generate(3, 10, Difficulty::Medium);
    const auto path = dir / (std::string(name) + ".jsonl");
    EXPECT_EQ(save_problems(problems, path), problems.size());
    EXPECT_EQ(load_problems(path), problems);
  }
}

TEST(ProblemIo, MalformedLineNamesTheLine) {
  const auto path = std::filesystem::temp_directory_path() / "cpl_test_env_io" / "bad.jsonl";
  ArithChainEnv env;
  const auto problems = env.generate(3, 2, Difficulty::Easy);
  save_problems(problems, path);
  write_file(path, read_file(path) + "{\"id\": \"x\", \"env\": \n");
  try {
    load_problems(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

}  // namespace
