#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "cpl/error.hpp"
#include "cpl/hash.hpp"
#include "cpl/pipeline.hpp"

namespace cpl {

namespace {

const char* const kVariants[] = {"base", "sft", "instance-dpo", "step-dpo", "step-apo"};

std::string fmt(double x, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

Json stats_to_json(const DatasetStats& s) {
  return Json{{"avg_depth", s.avg_depth},
              {"positives", s.positives},
              {"negatives", s.negatives},
              {"pos_neg", format_pos_neg(s)},
              {"pos_neg_ratio", std::isfinite(s.pos_neg_ratio) ? Json(s.pos_neg_ratio) : Json(nullptr)},
              {"plan_pairs", s.plan_pair_count},
              {"solution_pairs", s.solution_pair_count}};
}

Json loss_to_json(const LossReport& r) {
  Json arr = Json::array();
  for (const auto& e : r.epochs) {
    arr.push_back(Json{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"pair_accuracy", e.pair_accuracy},
                       {"grad_norm", e.grad_norm}});
  }
  return arr;
}

std::uint64_t stage_seed(const ExperimentConfig& cfg, std::uint64_t configured, std::string_view stage, int round) {
  return derive_seed(derive_seed(cfg.seed ^ configured, stage), static_cast<std::uint64_t>(round));
}

/// Writes `rows` to out_dir/rel and records the artifact.
template <typename SaveFn>
void artifact(RoundReport& report, const std::filesystem::path& out_dir, const std::string& name,
              const std::string& rel, SaveFn&& save) {
  save(out_dir / rel);
  report.artifacts[name] = rel;
}

}  // namespace

RoundData collect_round_data(std::span<const PlanTree> trees, const ExperimentConfig& cfg, int round) {
  RoundData d;
  const std::uint64_t seed = stage_seed(cfg, 0, "extract", round);
  d.sft = extract_sft(trees, cfg.sft_per_problem, seed);
  for (const auto s : kAllPairStrategies) {
    if (s != cfg.pair_strategy && !(round == 1 && cfg.strategy_ablation)) continue;
    auto& out = d.pairs[s];
    for (const auto& t : trees) {
      auto p = extract_pairs(t, s, seed);
      out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    }
  }
  for (const auto& t : trees) {
    auto r = extract_response_pairs(t, cfg.response_pairs_per_problem, seed);
    d.responses.insert(d.responses.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    auto v = extract_value_labels(t);
    d.value_labels.insert(d.value_labels.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  d.stats = compute_stats(trees, d.pairs[cfg.pair_strategy]);
  return d;
}

RoundOutput run_round(const ExperimentConfig& cfg, int round, const Environment& env,
                      std::span<const Problem> train, std::span<const Problem> heldout, const PolicyParams& base,
                      const PolicyParams& gen_policy, const ValueParams& gen_value,
                      const std::filesystem::path& out_dir) {
  if (round < 1) throw PreconditionError("rounds are numbered from 1");
  const std::string dir = "round-" + std::to_string(round);

  std::size_t n = train.size();
  if (round == 1) n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.round1_fraction * n)));
  const auto problems = train.first(std::min(n, train.size()));

  SearchConfig search = cfg.search_for(round);
  search.rng_seed = stage_seed(cfg, search.rng_seed, "search", round);
  const PolicyProposer proposer(env, PolicySnapshot(gen_policy));
  const auto trees = generate_trees(env, problems, proposer, gen_value, search, cfg.workers);

  RoundOutput out;
  RoundReport& rep = out.report;
  rep.round = round;
  rep.n_problems = problems.size();

  const RoundData data = collect_round_data(trees, cfg, round);
  std::set<std::string> solved;
  for (const auto& t : data.sft) solved.insert(t.problem_id);
  rep.solved_trees = solved.size();
  rep.stats = data.stats;
  if (data.sft.empty()) {
    throw DegenerateRoundError("round " + std::to_string(round) + ": no correct path in any of " +
                               std::to_string(trees.size()) + " trees; try an easier difficulty or more simulations");
  }

  const auto& pairs = data.pairs.at(cfg.pair_strategy);
  artifact(rep, out_dir, "trees", dir + "/trees.jsonl", [&](const auto& p) {
    std::vector<Json> rows;
    for (const auto& t : trees) rows.push_back(tree_to_json(t));
    write_jsonl(p, rows);
  });
  artifact(rep, out_dir, "sft_data", dir + "/sft.jsonl", [&](const auto& p) { save_sft(data.sft, p); });
  artifact(rep, out_dir, "pairs", dir + "/pairs.jsonl", [&](const auto& p) { save_pairs(pairs, p); });
  artifact(rep, out_dir, "response_pairs", dir + "/response_pairs.jsonl",
           [&](const auto& p) { save_response_pairs(data.responses, p); });
  artifact(rep, out_dir, "value_labels", dir + "/value_labels.jsonl",
           [&](const auto& p) { save_value_labels(data.value_labels, p); });

  // Training examples are rebuilt from the persisted form, which also checks
  // that the datasets replay against the environment.
  const ExampleResolver resolver(env, problems, cfg.feature_dim);
  const auto sft_examples = resolver.resolve_all(std::span<const SftTrajectory>(data.sft));

  TrainConfig sft_cfg = cfg.sft;
  sft_cfg.seed = stage_seed(cfg, cfg.sft.seed, "sft", round);
  FitResult sft = sft_fit(base, sft_examples, sft_cfg);
  sft.params.version = static_cast<std::uint64_t>(round);
  rep.sft_loss = sft.report;
  const PolicySnapshot ref(sft.params);

  TrainConfig apo_cfg = cfg.apo;
  apo_cfg.seed = stage_seed(cfg, cfg.apo.seed, "apo", round);
  auto fit_pairs = [&](const std::vector<PreferencePair>& ps, Objective obj) {
    if (ps.empty()) return FitResult{sft.params, {}};
    const auto ex = resolver.resolve_all(std::span<const PreferencePair>(ps));
    return apo_fit(sft.params, ref, ex, apo_cfg, obj);
  };

  FitResult apo = fit_pairs(pairs, Objective::StepApo);
  apo.params.version = static_cast<std::uint64_t>(round);
  rep.apo_loss = apo.report;

  rep.accuracy["base"] = evaluate_policy(env, base, heldout);
  rep.accuracy["sft"] = evaluate_policy(env, sft.params, heldout);
  rep.accuracy["step-apo"] = evaluate_policy(env, apo.params, heldout);

  artifact(rep, out_dir, "policy_sft", dir + "/policy_sft.json", [&](const auto& p) { save_policy(sft.params, p); });
  artifact(rep, out_dir, "policy_step_apo", dir + "/policy_step_apo.json",
           [&](const auto& p) { save_policy(apo.params, p); });
  artifact(rep, out_dir, "sft_loss", dir + "/sft_loss.csv", [&](const auto& p) { sft.report.save_csv(p); });
  artifact(rep, out_dir, "apo_loss", dir + "/apo_loss.csv", [&](const auto& p) { apo.report.save_csv(p); });

  if (round == 1 && cfg.baselines) {
    FitResult step_dpo = fit_pairs(pairs, Objective::StepDpo);
    rep.accuracy["step-dpo"] = evaluate_policy(env, step_dpo.params, heldout);
    artifact(rep, out_dir, "policy_step_dpo", dir + "/policy_step_dpo.json",
             [&](const auto& p) { save_policy(step_dpo.params, p); });

    FitResult dpo{sft.params, {}};
    if (!data.responses.empty()) {
      TrainConfig dpo_cfg = apo_cfg;
      dpo_cfg.seed = stage_seed(cfg, cfg.apo.seed, "dpo", round);
      dpo = dpo_fit(sft.params, ref, resolver.resolve_all(std::span<const ResponsePair>(data.responses)), dpo_cfg);
    }
    rep.accuracy["instance-dpo"] = evaluate_policy(env, dpo.params, heldout);
    artifact(rep, out_dir, "policy_instance_dpo", dir + "/policy_instance_dpo.json",
             [&](const auto& p) { save_policy(dpo.params, p); });
  }

  if (round == 1 && cfg.strategy_ablation) {
    for (const auto s : kAllPairStrategies) {
      const std::string name(to_string(s));
      if (s == cfg.pair_strategy) {
        rep.strategy_accuracy[name] = rep.accuracy["step-apo"];
        continue;
      }
      rep.strategy_accuracy[name] = evaluate_policy(env, fit_pairs(data.pairs.at(s), Objective::StepApo).params, heldout);
    }
  }

  ValueFit vf = fit(ValueParams::zeros(cfg.feature_dim), data.value_labels, cfg.value_epochs, cfg.value_lr);
  vf.params.round = static_cast<std::uint64_t>(round);
  rep.value_loss = vf.loss_history;
  artifact(rep, out_dir, "value", dir + "/value.json", [&](const auto& p) { save_value(vf.params, p); });

  out.apo_policy = std::move(apo.params);
  out.value = std::move(vf.params);
  return out;
}

Json RoundReport::to_json() const {
  return Json{{"round", round},
              {"n_problems", n_problems},
              {"solved_trees", solved_trees},
              {"stats", stats_to_json(stats)},
              {"sft_loss", loss_to_json(sft_loss)},
              {"apo_loss", loss_to_json(apo_loss)},
              {"value_loss_final", value_loss.empty() ? Json(nullptr) : Json(value_loss.back())},
              {"accuracy", accuracy},
              {"strategy_accuracy", strategy_accuracy},
              {"artifacts", artifacts}};
}

Json ExperimentReport::to_json() const {
  Json rs = Json::array();
  for (const auto& r : rounds) rs.push_back(r.to_json());
  return Json{{"config", config.to_json()}, {"rounds", rs}, {"artifacts", artifacts}};
}

std::string ExperimentReport::comparison_table() const {
  std::ostringstream os;
  os << "| Variant |";
  for (const auto& r : rounds) os << " Round " << r.round << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < rounds.size(); ++i) os << "---:|";
  os << "\n";
  for (const char* v : kVariants) {
    os << "| " << v << " |";
    for (const auto& r : rounds) {
      auto it = r.accuracy.find(v);
      os << ' ' << (it == r.accuracy.end() ? std::string("-") : fmt(it->second)) << " |";
    }
    os << "\n";
  }
  return os.str();
}

std::string ExperimentReport::strategy_table() const {
  std::ostringstream os;
  os << "| Pair Strategy | Accuracy |\n|---|---:|\n";
  if (rounds.empty()) return os.str();
  for (const auto s : kAllPairStrategies) {
    auto it = rounds.front().strategy_accuracy.find(std::string(to_string(s)));
    if (it != rounds.front().strategy_accuracy.end()) os << "| " << it->first << " | " << fmt(it->second) << " |\n";
  }
  return os.str();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto env = make_environment(cfg.env, cfg.max_depth());
  const auto train = env->generate(derive_seed(cfg.seed, "train"), cfg.n_train, cfg.difficulty);
  const auto heldout = env->generate(derive_seed(cfg.seed, "heldout"), cfg.n_heldout, cfg.difficulty);
  std::set<std::string> ids;
  for (const auto& p : train) ids.insert(p.id);
  for (const auto& p : heldout) {
    if (ids.count(p.id)) throw Error("held-out problem " + p.id + " also appears in the training pool");
  }

  ExperimentReport report;
  report.config = cfg;
  save_problems(train, out_dir / "problems_train.jsonl");
  save_problems(heldout, out_dir / "problems_heldout.jsonl");
  report.artifacts["problems_train"] = "problems_train.jsonl";
  report.artifacts["problems_heldout"] = "problems_heldout.jsonl";

  const PolicyParams base = PolicyParams::zeros(cfg.feature_dim);
  PolicyParams policy = base;
  ValueParams value = ValueParams::zeros(cfg.feature_dim);
  for (int r = 1; r <= cfg.rounds; ++r) {
    const std::string prefix = "round " + std::to_string(r) + ": ";
    try {
      RoundOutput o = run_round(cfg, r, *env, train, heldout, base, policy, value, out_dir);
      policy = std::move(o.apo_policy);
      value = std::move(o.value);
      report.rounds.push_back(std::move(o.report));
    } catch (const DegenerateRoundError&) {
      throw;
    } catch (const ConfigError& e) {
      throw ConfigError(prefix + e.what());
    } catch (const DivergenceError& e) {
      throw DivergenceError(prefix + e.what(), e.epoch(), e.batch());
    } catch (const Error& e) {
      throw Error(prefix + e.what());
    }
  }

  std::map<int, DatasetStats> stats;
  for (const auto& r : report.rounds) stats[r.round] = r.stats;
  write_file(out_dir / "stats.md", "## Generated data\n\n" + render_stats_table(stats) + "\n## Held-out accuracy\n\n" +
                                       report.comparison_table() + "\n## Pair strategies (round 1)\n\n" +
                                       report.strategy_table());
  report.artifacts["stats"] = "stats.md";
  write_file(out_dir / "report.json", report.to_json().dump(2) + "\n");

  std::vector<std::string> all;
  for (const auto& [_, rel] : report.artifacts) all.push_back(rel);
  for (const auto& r : report.rounds)
    for (const auto& [_, rel] : r.artifacts) all.push_back(rel);
  all.push_back("report.json");
  write_manifest(out_dir, all);
  return report;
}

}  // namespace cpl
