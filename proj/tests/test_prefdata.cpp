#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "cpl/error.hpp"
#include "cpl/prefdata.hpp"
#include "oracles.hpp"

namespace {

using namespace cpl;
namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "cpl_prefdata_test";
  fs::create_directories(dir);
  return dir / name;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

std::vector<std::pair<double, double>> value_pairs(const std::vector<PreferencePair>& pairs) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : pairs) out.emplace_back(p.v_chosen, p.v_rejected);
  std::sort(out.begin(), out.end());
  return out;
}

TEST(PairStrategyNames, ParseAndPrint) {
  for (auto s : kAllPairStrategies) EXPECT_EQ(parse_pair_strategy(to_string(s)), s);
  EXPECT_EQ(parse_pair_strategy("AllPlans_OneSolution"), PairStrategy::AllPlansOneSolution);
  EXPECT_EQ(parse_pair_strategy("oneplan-allsolutions"), PairStrategy::OnePlanAllSolutions);
  EXPECT_THROW(parse_pair_strategy("some-plans"), ConfigError);
}

TEST(ExtractPairs, AllPlansPairsEveryPositiveWithEveryNegative) {
  const PlanTree t = oracle::hand_tree({{StepKind::Plan, 0.6, 1}, {StepKind::Plan, 0.2, 1}, {StepKind::Plan, -0.5, 1}});
  const auto pairs = extract_pairs(t, PairStrategy::AllPlansOneSolution, 0);
  const std::vector<std::pair<double, double>> want{{0.2, -0.5}, {0.6, -0.5}};
  EXPECT_EQ(value_pairs(pairs), want);
  for (const auto& p : pairs) {
    EXPECT_EQ(p.kind, StepKind::Plan);
    EXPECT_EQ(p.state_key, state_key(t.root().state));
    EXPECT_EQ(p.candidates.size(), t.root().candidates.size());
  }
}

TEST(ExtractPairs, OnePlanTakesTheExtremes) {
  const PlanTree t = oracle::hand_tree({{StepKind::Plan, 0.6, 1}, {StepKind::Plan, 0.2, 1}, {StepKind::Plan, -0.5, 1}});
  const auto pairs = extract_pairs(t, PairStrategy::OnePlanOneSolution, 0);
  const std::vector<std::pair<double, double>> want{{0.6, -0.5}};
  EXPECT_EQ(value_pairs(pairs), want);
}

TEST(ExtractPairs, OneSolutionPairHasGapTwo) {
  const PlanTree t =
      oracle::hand_tree({{StepKind::Solution, 1.0, 1}, {StepKind::Solution, -1.0, 1}, {StepKind::Solution, -1.0, 2}});
  const auto pairs = extract_pairs(t, PairStrategy::AllPlansOneSolution, 3);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].kind, StepKind::Solution);
  EXPECT_EQ(pairs[0].v_chosen - pairs[0].v_rejected, 2.0);
  EXPECT_EQ(extract_pairs(t, PairStrategy::AllPlansAllSolutions, 3).size(), 2u);
}

TEST(ExtractPairs, ZeroValuedAndUnvisitedChildrenNeverPair) {
  const PlanTree t = oracle::hand_tree(
      {{StepKind::Plan, 0.0, 3}, {StepKind::Plan, 0.0, 0}, {StepKind::Plan, 0.4, 1}, {StepKind::Plan, -0.2, 0}});
  for (auto s : kAllPairStrategies) EXPECT_TRUE(extract_pairs(t, s, 0).empty());
}

TEST(ExtractPairs, MatchesBruteForceOnRandomTrees) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const PlanTree t = oracle::random_hand_tree(rng);
    for (auto s : kAllPairStrategies) {
      const auto pairs = extract_pairs(t, s, static_cast<std::uint64_t>(trial));
      const auto bad = oracle::pair_violations(t, s, pairs);
      ASSERT_TRUE(bad.empty()) << to_string(s) << ": " << bad.front();
      for (const auto& p : pairs) {
        EXPECT_GT(p.v_chosen, 0.0);
        EXPECT_LT(p.v_rejected, 0.0);
      }
      EXPECT_EQ(pairs, extract_pairs(t, s, static_cast<std::uint64_t>(trial)));
    }
  }
}

TEST(ExtractPairs, SearchTreesPassBruteForce) {
  ArithChainEnv env;
  SearchConfig c;
  c.n_simulations = 150;
  for (const auto& p : env.generate(4, 8, Difficulty::Easy)) {
    const PlanTree t = run_search(env, p, PolicyParams::zeros(), ValueParams::zeros(), c);
    for (auto s : kAllPairStrategies) {
      const auto bad = oracle::pair_violations(t, s, extract_pairs(t, s, 1));
      EXPECT_TRUE(bad.empty()) << bad.front();
    }
  }
}

PreferencePair random_pair_record(Rng& rng, int i) {
  PreferencePair p;
  p.problem_id = "arith-" + std::to_string(i);
  p.state_key = p.problem_id + "|compute q" + std::to_string(rng.below(9));
  const std::size_t n = 2 + rng.below(6);
  for (std::size_t k = 0; k < n; ++k) p.candidates.push_back("step \"" + std::to_string(k) + "\" \\ x");
  p.chosen_idx = rng.below(n);
  p.rejected_idx = (p.chosen_idx + 1 + rng.below(n - 1)) % n;
  p.v_chosen = rng.uniform();
  p.v_rejected = -rng.uniform() - 1e-3;
  p.kind = rng.uniform() < 0.5 ? StepKind::Plan : StepKind::Solution;
  return p;
}

TEST(PairIo, RoundTripsThousandPairs) {
  Rng rng(2);
  std::vector<PreferencePair> pairs;
  for (int i = 0; i < 1000; ++i) pairs.push_back(random_pair_record(rng, i));
  const auto path = temp_file("pairs.jsonl");
  EXPECT_EQ(save_pairs(pairs, path), 1000u);
  EXPECT_EQ(load_pairs(path), pairs);
}

TEST(PairIo, EmptyListGivesEmptyFile) {
  const auto path = temp_file("empty.jsonl");
  EXPECT_EQ(save_pairs({}, path), 0u);
  EXPECT_EQ(fs::file_size(path), 0u);
  EXPECT_TRUE(load_pairs(path).empty());
}

TEST(PairIo, TruncatedLineNamesTheLine) {
  Rng rng(3);
  std::vector<PreferencePair> pairs;
  for (int i = 0; i < 3; ++i) pairs.push_back(random_pair_record(rng, i));
  const auto path = temp_file("truncated.jsonl");
  save_pairs(pairs, path);
  std::ifstream in(path);
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  in.close();
  std::ofstream(path) << l1 << '\n' << l2.substr(0, l2.size() / 2) << '\n' << l3 << '\n';
  try {
    load_pairs(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(PairIo, RejectsBadIndices) {
  Rng rng(4);
  Json j = pair_to_json(random_pair_record(rng, 0));
  j["chosen_idx"] = j["rejected_idx"];
  EXPECT_THROW(pair_from_json(j), ParseError);
  j = pair_to_json(random_pair_record(rng, 1));
  j["format_version"] = kDataFormatVersion + 1;
  EXPECT_THROW(pair_from_json(j), ParseError);
}

TEST(Stats, DepthAndRatioByHand) {
  // root -> a -> b -> T(depth 3, correct); b -> c -> d -> T(depth 5, wrong)
  DumpedTree d;
  d.problem_id = "p";
  auto node = [&](int id, int parent, bool terminal, std::optional<bool> correct) {
    DumpedNode n;
    n.id = id;
    n.parent_id = parent;
    n.N = 1;
    n.terminal = terminal;
    n.correct = correct;
    d.nodes.push_back(n);
  };
  node(0, -1, false, {});
  node(1, 0, false, {});
  node(2, 1, false, {});
  node(3, 2, true, true);
  node(4, 2, false, {});
  node(5, 4, false, {});
  node(6, 5, true, false);
  const std::vector<DumpedTree> trees{d};
  const auto s = compute_stats(std::span<const DumpedTree>(trees), {});
  EXPECT_DOUBLE_EQ(s.avg_depth, 4.0);
  EXPECT_EQ(s.positives, 1u);
  EXPECT_EQ(s.negatives, 1u);
  EXPECT_EQ(format_pos_neg(s), "1:1.00");
}

TEST(Stats, CountsMatchSavedFilesAndDumps) {
  ArithChainEnv env;
  SearchConfig c;
  c.n_simulations = 120;
  std::vector<PlanTree> trees;
  std::vector<DumpedTree> dumps;
  std::vector<PreferencePair> pairs;
  for (const auto& p : env.generate(6, 6, Difficulty::Easy)) {
    trees.push_back(run_search(env, p, PolicyParams::zeros(), ValueParams::zeros(), c));
    dumps.push_back(parse_tree_dump(tree_to_json(trees.back())));
    const auto got = extract_pairs(trees.back(), PairStrategy::AllPlansOneSolution, 0);
    pairs.insert(pairs.end(), got.begin(), got.end());
  }
  const auto s = compute_stats(std::span<const PlanTree>(trees), pairs);
  EXPECT_EQ(s, compute_stats(std::span<const DumpedTree>(dumps), pairs));

  std::vector<PreferencePair> plan, sol;
  for (const auto& p : pairs) (p.kind == StepKind::Plan ? plan : sol).push_back(p);
  save_pairs(plan, temp_file("plan.jsonl"));
  save_pairs(sol, temp_file("sol.jsonl"));
  EXPECT_EQ(count_lines(temp_file("plan.jsonl")), s.plan_pair_count);
  EXPECT_EQ(count_lines(temp_file("sol.jsonl")), s.solution_pair_count);
}

TEST(Stats, TableHeader) {
  DatasetStats a;
  a.avg_depth = 4.5;
  a.positives = 10;
  a.negatives = 31;
  a.plan_pair_count = 100;
  a.solution_pair_count = 7;
  const auto table = render_stats_table({{1, a}, {2, a}});
  EXPECT_EQ(table.substr(0, table.find('\n')), "| Round | Avg Depth | Pos:Neg | Plan Pairs | Solution Pairs |");
  EXPECT_NE(table.find("1:3.10"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}

TEST(ExtractSft, CapsAndReplaysToCorrect) {
  ArithChainEnv env;
  SearchConfig c;
  c.n_simulations = 300;
  const auto problems = env.generate(8, 6, Difficulty::Easy);
  std::vector<PlanTree> trees;
  for (const auto& p : problems) trees.push_back(run_search(env, p, PolicyParams::zeros(), ValueParams::zeros(), c));
  const auto trajs = extract_sft(trees, 4, 0);
  const ExampleResolver resolver(env, problems, kDefaultFeatureDim);
  std::map<std::string, int> per_problem;
  std::set<std::vector<std::string>> distinct;
  for (const auto& t : trajs) {
    ++per_problem[t.problem_id];
    ASSERT_FALSE(t.steps.empty());
    const auto& last = t.steps.back();
    State s = resolver.state(last.state_key);
    const Problem& p = resolver.problem(t.problem_id);
    s = env.apply(p, s, env.candidate_actions(p, s)[last.chosen_idx]);
    EXPECT_TRUE(env.verify(p, s).correct);
    std::vector<std::string> path;
    for (const auto& step : t.steps) path.push_back(step.candidates[step.chosen_idx]);
    EXPECT_TRUE(distinct.insert(path).second);
  }
  for (const auto& [id, n] : per_problem) EXPECT_LE(n, 4);
  EXPECT_EQ(trajs, extract_sft(trees, 4, 0));
}

TEST(ExtractSft, NoCorrectLeafGivesNothing) {
  const PlanTree t = oracle::hand_tree({{StepKind::Solution, -1.0, 2}, {StepKind::Plan, 0.3, 1}});
  const std::vector<PlanTree> trees{t};
  EXPECT_TRUE(extract_sft(trees, 4, 0).empty());
}

TEST(Resolver, RebuildsFeaturesAndRejectsBadKeys) {
  ArithChainEnv env;
  const auto problems = env.generate(9, 3, Difficulty::Easy);
  SearchConfig c;
  c.n_simulations = 80;
  const PlanTree t = run_search(env, problems[0], PolicyParams::zeros(), ValueParams::zeros(), c);
  const ExampleResolver resolver(env, problems, kDefaultFeatureDim);
  for (const auto& label : extract_value_labels(t)) EXPECT_GE(label.target, -1.0);
  for (const auto& pair : extract_pairs(t, PairStrategy::AllPlansAllSolutions, 0)) {
    const auto ex = resolver.resolve(pair);
    EXPECT_EQ(ex.features.size(), pair.candidates.size());
    EXPECT_EQ(ex.chosen, pair.chosen_idx);
    EXPECT_EQ(ex.rejected, pair.rejected_idx);
  }
  EXPECT_THROW(resolver.state("nope|x"), ParseError);
  EXPECT_THROW(resolver.state(problems[0].id + "|no such step"), ParseError);
  EXPECT_EQ(resolver.state(problems[0].id), initial_state(problems[0]));
}

TEST(ValueLabels, OnePerVisitedNodeAndRoundTrip) {
  ArithChainEnv env;
  const auto problems = env.generate(10, 1, Difficulty::Easy);
  SearchConfig c;
  c.n_simulations = 60;
  const PlanTree t = run_search(env, problems[0], PolicyParams::zeros(), ValueParams::zeros(), c);
  const auto labels = extract_value_labels(t);
  std::size_t visited = 0;
  for (const auto& n : t.nodes) visited += n.N >= 1;
  EXPECT_EQ(labels.size(), visited);
  const auto path = temp_file("labels.jsonl");
  save_value_labels(labels, path);
  const ExampleResolver resolver(env, problems, kDefaultFeatureDim);
  const auto back = load_value_labels(path, resolver);
  ASSERT_EQ(back.size(), labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_EQ(back[i].state, labels[i].state);
    EXPECT_DOUBLE_EQ(back[i].target, labels[i].target);
  }
}

TEST(ResponsePairs, CorrectVersusIncorrect) {
  ArithChainEnv env;
  const auto problems = env.generate(12, 4, Difficulty::Easy);
  SearchConfig c;
  c.n_simulations = 200;
  const ExampleResolver resolver(env, problems, kDefaultFeatureDim);
  for (const auto& p : problems) {
    const PlanTree t = run_search(env, p, PolicyParams::zeros(), ValueParams::zeros(), c);
    const auto pairs = extract_response_pairs(t, 4, 0);
    EXPECT_LE(pairs.size(), 4u);
    for (const auto& rp : pairs) {
      auto final_verdict = [&](const std::vector<SftStep>& steps) {
        State s = resolver.state(steps.back().state_key);
        s = env.apply(p, s, env.candidate_actions(p, s)[steps.back().chosen_idx]);
        return env.verify(p, s).correct;
      };
      EXPECT_TRUE(final_verdict(rp.chosen));
      EXPECT_FALSE(final_verdict(rp.rejected));
    }
    const auto path = temp_file("responses.jsonl");
    save_response_pairs(pairs, path);
    EXPECT_EQ(load_response_pairs(path), pairs);
  }
}

}  // namespace
