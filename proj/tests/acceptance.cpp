// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. `--only 4` runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpl/error.hpp"
#include "cpl/genadapter.hpp"
#include "cpl/pipeline.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cpl;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1. Gradient oracles --------------------------------------------------------

Outcome gradient_oracles() {
  constexpr std::size_t dim = 64;
  constexpr int instances = 100;
  const auto t0 = Clock::now();
  Rng rng(101);
  auto policy = [&] {
    PolicyParams p = PolicyParams::zeros(dim);
    p.weights = oracle::random_weights(rng, dim, 0.5);
    return p;
  };
  auto check = [&](const std::function<double(const PolicyParams&)>& loss, const SparseVector& grad,
                   const PolicyParams& theta) {
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& w) {
          PolicyParams t = theta;
          t.weights = w;
          return loss(t);
        },
        theta.weights, 1e-5);
    return oracle::relative_error(oracle::densify(grad, dim), fd);
  };

  double worst[4] = {0, 0, 0, 0};
  const TrainConfig cfg;
  for (int i = 0; i < instances; ++i) {
    const PolicyParams theta = policy();
    const PolicySnapshot ref(policy());
    const auto pair = oracle::random_pair(rng, dim);
    worst[0] = std::max(worst[0], check([&](const PolicyParams& t) { return step_apo_loss(pair, t, ref, cfg); },
                                        step_apo_grad(pair, theta, ref, cfg), theta));
    worst[1] = std::max(worst[1], check([&](const PolicyParams& t) { return step_dpo_loss(pair, t, ref, cfg.beta); },
                                        step_dpo_grad(pair, theta, ref, cfg.beta), theta));
    const auto resp = oracle::random_response(rng, dim);
    worst[2] = std::max(worst[2], check([&](const PolicyParams& t) { return dpo_loss(resp, t, ref, cfg.beta); },
                                        dpo_grad(resp, theta, ref, cfg.beta), theta));
    const auto step = oracle::random_step(rng, dim);
    worst[3] = std::max(worst[3], check([&](const PolicyParams& t) { return sft_loss(step, t); },
                                        sft_grad(step, theta), theta));
  }
  const double secs = seconds_since(t0);
  const double max_err = *std::max_element(std::begin(worst), std::end(worst));
  std::ostringstream os;
  os << "max rel err step-apo " << fmt("%.2e", worst[0]) << ", step-dpo " << fmt("%.2e", worst[1]) << ", dpo "
     << fmt("%.2e", worst[2]) << ", sft " << fmt("%.2e", worst[3]) << " (tol 1e-4); " << fmt("%.1f", secs)
     << " s (limit 30)";
  return {max_err < 1e-4 && secs < 30.0, os.str()};
}

// ---- 2. Reduction identity --------------------------------------------------------

Outcome reduction_identity() {
  constexpr std::size_t dim = 256;
  Rng rng(202);
  const TrainConfig cfg;
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    PolicyParams theta = PolicyParams::zeros(dim), ref = PolicyParams::zeros(dim);
    theta.weights = oracle::random_weights(rng, dim, 1.0);
    ref.weights = oracle::random_weights(rng, dim, 1.0);
    auto pair = oracle::random_pair(rng, dim);
    pair.v_rejected = pair.v_chosen;
    const PolicySnapshot snap(ref);
    worst = std::max(worst, std::abs(step_apo_loss(pair, theta, snap, cfg) - step_dpo_loss(pair, theta, snap, cfg.beta)));
  }
  return {worst < 1e-12, "max |apo - dpo| = " + fmt("%.2e", worst) + " over 1000 pairs (tol 1e-12)"};
}

// ---- 3. Spot values ----------------------------------------------------------------

Outcome spot_values() {
  constexpr std::size_t dim = 64;
  Rng rng(303);
  PolicyParams theta = PolicyParams::zeros(dim);
  theta.weights = oracle::random_weights(rng, dim, 0.7);
  const PolicySnapshot same(theta);
  const TrainConfig cfg;

  double worst_sym = 0;
  for (int i = 0; i < 100; ++i) {
    auto pair = oracle::random_pair(rng, dim);
    pair.v_rejected = pair.v_chosen;
    worst_sym = std::max(worst_sym, std::abs(step_apo_loss(pair, theta, same, cfg) - std::log(2.0)));
  }
  auto sol = oracle::random_pair(rng, dim);
  sol.kind = StepKind::Solution;
  sol.v_chosen = 1.0;
  sol.v_rejected = -1.0;
  const double want = -std::log(1.0 / (1.0 + std::exp(0.6)));
  const double got = step_apo_loss(sol, theta, same, cfg);
  const double sol_err = std::abs(got - want);
  return {worst_sym < 1e-12 && sol_err < 1e-9,
          "ln2 case max err " + fmt("%.2e", worst_sym) + " (tol 1e-12); solution pair " + fmt("%.6f", got) +
              " vs " + fmt("%.6f", want) + ", err " + fmt("%.2e", sol_err) + " (tol 1e-9)"};
}

// ---- 4. MCTS invariants --------------------------------------------------------------

struct SearchCheck {
  std::size_t searches = 0;
  std::size_t decisions = 0;
  std::size_t puct_mismatch = 0;
  std::size_t violations = 0;
  std::size_t dump_mismatch = 0;
  std::string first_problem;

  void absorb(const std::vector<std::string>& v) {
    violations += v.size();
    if (!v.empty() && first_problem.empty()) first_problem = v.front();
  }
  std::string summary() const {
    std::ostringstream os;
    os << searches << " searches, " << decisions << " selections; backup/range violations " << violations
       << ", PUCT mismatches " << puct_mismatch << ", dump mismatches " << dump_mismatch;
    if (!first_problem.empty()) os << " (first: " << first_problem << ")";
    return os.str();
  }
  bool ok() const { return searches > 0 && violations == 0 && puct_mismatch == 0 && dump_mismatch == 0; }
};

Outcome mcts_invariants() {
  const auto t0 = Clock::now();
  SearchCheck sc;
  Rng rng(404);
  const Difficulty levels[] = {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard, Difficulty::Expert};
  for (int i = 0; i < 1000; ++i) {
    const bool grid = rng.uniform() < 0.3;
    const auto env = make_environment(grid ? "grid" : "arith", 6);
    const auto problem = env->generate(rng.next(), 1, levels[rng.below(4)]).front();
    PolicyParams policy = PolicyParams::zeros();
    ValueParams value = ValueParams::zeros();
    const double pscale = rng.uniform() < 0.2 ? 0.0 : 2.0 * rng.uniform();
    policy.weights = oracle::random_weights(rng, policy.feature_dim, pscale);
    value.weights = oracle::random_weights(rng, value.feature_dim, 0.5 * rng.uniform());
    SearchConfig c;
    c.n_simulations = 8 + static_cast<int>(rng.below(73));
    c.c_puct = 0.25 + 3.0 * rng.uniform();
    c.temperature = 0.3 + 1.2 * rng.uniform();
    c.root_children = 1 + static_cast<int>(rng.below(6));
    c.inner_children = 1 + static_cast<int>(rng.below(4));
    c.rng_seed = rng.next();

    const PolicyProposer proposer(*env, PolicySnapshot(policy));
    const PlanTree t = run_search(*env, problem, proposer, value, c,
                                  [&](const PlanTree& tree, int node, std::size_t chosen) {
                                    ++sc.decisions;
                                    if (chosen != oracle::puct_argmax(tree, tree.nodes[static_cast<std::size_t>(node)], c.c_puct))
                                      ++sc.puct_mismatch;
                                  });
    ++sc.searches;
    sc.absorb(oracle::tree_violations(t, 1e-9));
    if (dump_tree(t) != dump_tree(run_search(*env, problem, proposer, value, c))) ++sc.dump_mismatch;
  }
  const double secs = seconds_since(t0);
  return {sc.ok() && secs < 120.0, sc.summary() + "; " + fmt("%.1f", secs) + " s (limit 120)"};
}

// ---- 5. Pair extraction -------------------------------------------------------------

Outcome pair_extraction() {
  Rng rng(505);
  std::size_t trees = 0, pairs = 0, bad = 0;
  std::string first;
  for (int i = 0; i < 2000; ++i) {
    const PlanTree t = oracle::random_hand_tree(rng);
    ++trees;
    for (auto s : kAllPairStrategies) {
      const auto got = extract_pairs(t, s, static_cast<std::uint64_t>(i));
      pairs += got.size();
      const auto v = oracle::pair_violations(t, s, got);
      bad += v.size();
      if (!v.empty() && first.empty()) first = std::string(to_string(s)) + ": " + v.front();
    }
  }
  // The worked sibling groups.
  const PlanTree plan = oracle::hand_tree({{StepKind::Plan, 0.6, 1}, {StepKind::Plan, 0.2, 1}, {StepKind::Plan, -0.5, 1}});
  const bool all_plans_two = extract_pairs(plan, PairStrategy::AllPlansOneSolution, 0).size() == 2;
  const auto one = extract_pairs(plan, PairStrategy::OnePlanOneSolution, 0);
  const bool one_plan_ok = one.size() == 1 && one[0].v_chosen == 0.6 && one[0].v_rejected == -0.5;
  const PlanTree sol =
      oracle::hand_tree({{StepKind::Solution, 1.0, 1}, {StepKind::Solution, -1.0, 1}, {StepKind::Solution, -1.0, 1}});
  const auto sp = extract_pairs(sol, PairStrategy::AllPlansOneSolution, 0);
  const bool sol_ok = sp.size() == 1 && sp[0].v_chosen - sp[0].v_rejected == 2.0;

  std::ostringstream os;
  os << trees << " hand-valued trees x 4 strategies, " << pairs << " pairs, " << bad
     << " disagreements with brute force; worked examples " << (all_plans_two && one_plan_ok && sol_ok ? "ok" : "WRONG");
  if (!first.empty()) os << " (first: " << first << ")";
  return {bad == 0 && all_plans_two && one_plan_ok && sol_ok, os.str()};
}

// ---- 6-8. Trend run ---------------------------------------------------------------

/// Configuration of the end-to-end trend experiment: easy chains, 200/100
/// simulations, full training pool in both rounds.
ExperimentConfig trend_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.env = "arith";
  c.difficulty = Difficulty::Easy;
  c.search = ExperimentConfig::default_search();
  c.round1_fraction = 1.0;
  c.n_train = 200;
  c.n_heldout = 100;
  c.rounds = 2;
  c.seed = seed;
  return c;
}

struct TrendRun {
  std::vector<ExperimentReport> reports;
  double seconds = 0;
  std::string error;
};

TrendRun run_trend(int seeds, const fs::path& root) {
  TrendRun out;
  const auto t0 = Clock::now();
  try {
    for (int s = 1; s <= seeds; ++s) {
      const auto dir = root / ("seed-" + std::to_string(s));
      fs::remove_all(dir);
      const auto t = Clock::now();
      out.reports.push_back(run_experiment(trend_config(static_cast<std::uint64_t>(s)), dir));
      const auto& r = out.reports.back().rounds;
      std::cerr << "  seed " << s << ": r1 sft " << r[0].accuracy.at("sft") << " apo " << r[0].accuracy.at("step-apo")
                << " dpo " << r[0].accuracy.at("step-dpo") << " | r2 apo " << r[1].accuracy.at("step-apo") << " ("
                << fmt("%.1f", seconds_since(t)) << " s)\n";
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.seconds = seconds_since(t0);
  return out;
}

double mean_over(const TrendRun& run, const std::function<double(const ExperimentReport&)>& f) {
  double s = 0;
  for (const auto& r : run.reports) s += f(r);
  return run.reports.empty() ? 0.0 : s / static_cast<double>(run.reports.size());
}

Outcome trend(const TrendRun& run, int seeds) {
  if (!run.error.empty()) return {false, "run failed: " + run.error};
  auto acc = [](int round, const char* v) {
    return [=](const ExperimentReport& r) { return r.rounds.at(static_cast<std::size_t>(round - 1)).accuracy.at(v); };
  };
  const double sft1 = mean_over(run, acc(1, "sft"));
  const double apo1 = mean_over(run, acc(1, "step-apo"));
  const double dpo1 = mean_over(run, acc(1, "step-dpo"));
  const double inst1 = mean_over(run, acc(1, "instance-dpo"));
  const double apo2 = mean_over(run, acc(2, "step-apo"));
  const bool a = apo1 >= sft1 + 0.05;
  const bool b = apo1 >= dpo1;
  const bool c = apo2 >= apo1;
  const bool time_ok = run.seconds < 900.0;
  std::ostringstream os;
  os << seeds << " seeds, " << fmt("%.0f", run.seconds) << " s (limit 900); r1 mean acc: sft " << fmt("%.3f", sft1)
     << ", step-apo " << fmt("%.3f", apo1) << ", step-dpo " << fmt("%.3f", dpo1) << ", instance-dpo "
     << fmt("%.3f", inst1) << "; r2 step-apo " << fmt("%.3f", apo2) << " | (a) apo-sft "
     << fmt("%+.1f", 100 * (apo1 - sft1)) << "pp (need >= +5) " << (a ? "ok" : "no") << ", (b) apo>=step-dpo "
     << (b ? "ok" : "no") << ", (c) r2>=r1 " << (c ? "ok" : "no");
  return {a && b && c && time_ok && static_cast<int>(run.reports.size()) == seeds, os.str()};
}

Outcome ablation(const TrendRun& run) {
  if (!run.error.empty()) return {false, "run failed: " + run.error};
  std::ostringstream os;
  std::map<PairStrategy, double> mean;
  for (auto s : kAllPairStrategies) {
    mean[s] = mean_over(run, [&](const ExperimentReport& r) { return r.rounds.at(0).strategy_accuracy.at(std::string(to_string(s))); });
  }
  os << "| Strategy | Mean held-out accuracy |\n|---|---:|\n";
  for (auto s : kAllPairStrategies) os << "| " << to_string(s) << " | " << fmt("%.3f", mean[s]) << " |\n";
  const bool ok = mean[PairStrategy::AllPlansOneSolution] >= mean[PairStrategy::OnePlanOneSolution];
  std::cerr << os.str();
  return {ok, "all-plans-one-solution " + fmt("%.3f", mean[PairStrategy::AllPlansOneSolution]) +
                  " vs one-plan-one-solution " + fmt("%.3f", mean[PairStrategy::OnePlanOneSolution]) +
                  " (table printed above)"};
}

Outcome dataset_stats(const TrendRun& run, const fs::path& root) {
  if (!run.error.empty()) return {false, "run failed: " + run.error};
  std::size_t pos[2] = {0, 0}, neg[2] = {0, 0};
  for (const auto& r : run.reports) {
    for (int k = 0; k < 2; ++k) {
      pos[k] += r.rounds.at(static_cast<std::size_t>(k)).stats.positives;
      neg[k] += r.rounds.at(static_cast<std::size_t>(k)).stats.negatives;
    }
  }
  // The table must come from generated data on disk: the header, then one
  // five-column row per round.
  std::ifstream in(root / "seed-1" / "stats.md");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  const auto hdr = std::find(lines.begin(), lines.end(), "| Round | Avg Depth | Pos:Neg | Plan Pairs | Solution Pairs |");
  bool shape = hdr != lines.end() && lines.end() - hdr >= 4;
  for (int k = 1; shape && k <= 2; ++k) {
    const std::string& row = *(hdr + 1 + k);
    shape = row.rfind("| " + std::to_string(k) + " ", 0) == 0 && std::count(row.begin(), row.end(), '|') == 6;
  }
  std::map<int, DatasetStats> agg;
  for (int k = 0; k < 2; ++k) {
    DatasetStats s;
    s.positives = pos[k];
    s.negatives = neg[k];
    agg[k + 1] = s;
  }
  const double r1 = neg[0] ? static_cast<double>(pos[0]) / static_cast<double>(neg[0]) : 0.0;
  const double r2 = neg[1] ? static_cast<double>(pos[1]) / static_cast<double>(neg[1]) : 0.0;
  return {shape && r2 > r1, std::string("table header ") + (shape ? "ok" : "WRONG") + "; pooled pos:neg round 1 " +
                                format_pos_neg(agg[1]) + ", round 2 " + format_pos_neg(agg[2]) +
                                " (round 2 needs more positives per negative)"};
}

// ---- 9. Adapter conformance ---------------------------------------------------------

Outcome adapter_conformance() {
  MockGenServer server;
  server.start();
  ClientConfig cc;
  cc.endpoint = server.endpoint();
  cc.backoff_s = 0.001;
  const GenClient client(cc);
  SearchCheck sc;
  Rng rng(909);
  const Difficulty levels[] = {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard};
  for (int i = 0; i < 30; ++i) {
    const bool grid = i % 3 == 2;
    const auto env = make_environment(grid ? "grid" : "arith", 6);
    const AdapterProposer adapter(*env, client);
    const auto problem = env->generate(rng.next(), 1, levels[rng.below(3)]).front();
    SearchConfig c;
    c.n_simulations = 20 + static_cast<int>(rng.below(41));
    c.rng_seed = rng.next();
    const PlanTree t = run_search(*env, problem, adapter, ValueParams::zeros(), c,
                                  [&](const PlanTree& tree, int node, std::size_t chosen) {
                                    ++sc.decisions;
                                    if (chosen != oracle::puct_argmax(tree, tree.nodes[static_cast<std::size_t>(node)], c.c_puct))
                                      ++sc.puct_mismatch;
                                  });
    ++sc.searches;
    sc.absorb(oracle::tree_violations(t, 1e-9));
    if (dump_tree(t) != dump_tree(run_search(*env, problem, adapter, ValueParams::zeros(), c))) ++sc.dump_mismatch;
  }
  return {sc.ok(), "mock server at " + server.endpoint() + ": " + sc.summary() + ", " +
                       std::to_string(server.requests_served()) + " requests"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  int seeds = 10;
  std::string work = (fs::temp_directory_path() / "cpl_acceptance").string();
  app.add_option("--only", only, "Run a single criterion (1-9)");
  app.add_option("--seeds", seeds, "Seeds for the trend run")->check(CLI::PositiveNumber);
  app.add_option("--work-dir", work, "Scratch directory for trend-run artifacts");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  };
  auto run = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    if (only && only != id) return;
    try {
      report(id, name, f());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("exception: ") + e.what()});
    }
  };

  run(1, "gradient oracles", gradient_oracles);
  run(2, "reduction identity", reduction_identity);
  run(3, "closed-form spot values", spot_values);
  run(4, "MCTS invariants", mcts_invariants);
  run(5, "pair extraction", pair_extraction);
  if (!only || (only >= 6 && only <= 8)) {
    const TrendRun tr = run_trend(seeds, work);
    run(6, "end-to-end trend", [&] { return trend(tr, seeds); });
    run(7, "data-construction ablation", [&] { return ablation(tr); });
    run(8, "dataset statistics", [&] { return dataset_stats(tr, work); });
  }
  run(9, "adapter conformance", adapter_conformance);
  return failed == 0 ? 0 : 1;
}
