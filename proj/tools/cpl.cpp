// Command-line front end: data generation, training stages, evaluation and
// the full multi-round run.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpl/error.hpp"
#include "cpl/genadapter.hpp"
#include "cpl/hash.hpp"
#include "cpl/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cpl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

/// Records written files and emits manifest.json on finish().
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  fs::path add(const std::string& rel) {
    files_.push_back(rel);
    return dir_ / rel;
  }
  void finish() const { write_manifest(dir_, files_); }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

PolicyParams policy_or_zero(const std::string& path, std::size_t dim) {
  return path.empty() ? PolicyParams::zeros(dim) : load_policy(path);
}

ValueParams value_or_zero(const std::string& path, std::size_t dim) {
  return path.empty() ? ValueParams::zeros(dim) : load_value(path);
}

void print_loss(const LossReport& r) { std::cout << r.to_csv(); }

int cmd_gen(const Globals& g, int round, const std::string& policy_path, const std::string& value_path,
            const std::string& endpoint) {
  ExperimentConfig cfg = load_config(g);
  cfg.strategy_ablation = true;  // write every strategy's pair file
  const auto env = make_environment(cfg.env, cfg.max_depth());
  const auto train = env->generate(derive_seed(cfg.seed, "train"), cfg.n_train, cfg.difficulty);
  const auto heldout = env->generate(derive_seed(cfg.seed, "heldout"), cfg.n_heldout, cfg.difficulty);

  Outputs out(g.out_dir);
  save_problems(train, out.add("problems_train.jsonl"));
  save_problems(heldout, out.add("problems_heldout.jsonl"));

  SearchConfig search = cfg.search_for(round);
  search.rng_seed = derive_seed(derive_seed(cfg.seed ^ search.rng_seed, "search"), static_cast<std::uint64_t>(round));
  const ValueParams value = value_or_zero(value_path, cfg.feature_dim);

  std::vector<PlanTree> trees;
  if (endpoint.empty()) {
    const PolicyProposer proposer(*env, PolicySnapshot(policy_or_zero(policy_path, cfg.feature_dim)));
    trees = generate_trees(*env, train, proposer, value, search, cfg.workers);
  } else {
    ClientConfig cc;
    cc.endpoint = endpoint;
    const GenClient client(cc.with_env_overrides());
    const AdapterProposer proposer(*env, client);
    trees = generate_trees(*env, train, proposer, value, search, cfg.workers);
  }

  std::vector<Json> dumps;
  for (const auto& t : trees) dumps.push_back(tree_to_json(t));
  write_jsonl(out.add("trees.jsonl"), dumps);

  // Round 1 extraction yields every strategy's pairs.
  const RoundData data = collect_round_data(trees, cfg, 1);
  save_sft(data.sft, out.add("sft.jsonl"));
  save_pairs(data.pairs.at(cfg.pair_strategy), out.add("pairs.jsonl"));
  for (const auto& [s, ps] : data.pairs) save_pairs(ps, out.add("pairs-" + std::string(to_string(s)) + ".jsonl"));
  save_response_pairs(data.responses, out.add("response_pairs.jsonl"));
  save_value_labels(data.value_labels, out.add("value_labels.jsonl"));
  const std::string table = render_stats_table({{round, data.stats}});
  write_file(out.add("stats.md"), table);
  out.finish();
  std::cout << table;
  return kExitOk;
}

int cmd_sft(const Globals& g, const std::string& problems, const std::string& data, const std::string& init,
            const std::string& out_path) {
  ExperimentConfig cfg = load_config(g);
  const auto env = make_environment(cfg.env, cfg.max_depth());
  const auto ps = load_problems(problems);
  const ExampleResolver resolver(*env, ps, cfg.feature_dim);
  const auto trajs = load_sft(data);
  TrainConfig tc = cfg.sft;
  if (g.seed) tc.seed = *g.seed;
  const FitResult r = sft_fit(policy_or_zero(init, cfg.feature_dim), resolver.resolve_all(std::span(trajs)), tc);

  Outputs out(g.out_dir);
  save_policy(r.params, out_path.empty() ? out.add("policy_sft.json") : fs::path(out_path));
  r.report.save_csv(out.add("sft_loss.csv"));
  out.finish();
  print_loss(r.report);
  return kExitOk;
}

int cmd_apo(const Globals& g, const std::string& problems, std::string pairs_path, const std::string& data_dir,
            const std::string& ref_path, const std::string& init, const std::string& objective_name,
            const std::string& strategy_name, const std::string& out_path) {
  ExperimentConfig cfg = load_config(g);
  const Objective objective = parse_objective(objective_name);
  if (!strategy_name.empty()) cfg.pair_strategy = parse_pair_strategy(strategy_name);
  if (pairs_path.empty()) {
    if (data_dir.empty()) throw ConfigError("apo needs --pairs or --data-dir");
    pairs_path = objective == Objective::Dpo
                     ? (fs::path(data_dir) / "response_pairs.jsonl").string()
                     : (fs::path(data_dir) / ("pairs-" + std::string(to_string(cfg.pair_strategy)) + ".jsonl")).string();
  }

  const auto env = make_environment(cfg.env, cfg.max_depth());
  const auto ps = load_problems(problems);
  const ExampleResolver resolver(*env, ps, cfg.feature_dim);
  const PolicySnapshot ref(load_policy(ref_path));
  const PolicyParams start = init.empty() ? ref.params() : load_policy(init);
  TrainConfig tc = cfg.apo;
  if (g.seed) tc.seed = *g.seed;

  FitResult r;
  if (objective == Objective::Dpo) {
    const auto rp = load_response_pairs(pairs_path);
    r = dpo_fit(start, ref, resolver.resolve_all(std::span(rp)), tc);
  } else {
    const auto pp = load_pairs(pairs_path);
    r = apo_fit(start, ref, resolver.resolve_all(std::span(pp)), tc, objective);
  }

  Outputs out(g.out_dir);
  const std::string stem = "policy_" + std::string(to_string(objective));
  save_policy(r.params, out_path.empty() ? out.add(stem + ".json") : fs::path(out_path));
  r.report.save_csv(out.add(std::string(to_string(objective)) + "_loss.csv"));
  out.finish();
  print_loss(r.report);
  return kExitOk;
}

int cmd_value_fit(const Globals& g, const std::string& problems, const std::string& labels_path,
                  const std::string& out_path) {
  ExperimentConfig cfg = load_config(g);
  const auto env = make_environment(cfg.env, cfg.max_depth());
  const auto ps = load_problems(problems);
  const ExampleResolver resolver(*env, ps, cfg.feature_dim);
  const auto labels = load_value_labels(labels_path, resolver);
  const ValueFit vf = fit(ValueParams::zeros(cfg.feature_dim), labels, cfg.value_epochs, cfg.value_lr);

  Outputs out(g.out_dir);
  save_value(vf.params, out_path.empty() ? out.add("value.json") : fs::path(out_path));
  out.finish();
  std::cout << "epochs " << vf.loss_history.size() << ", final mse "
            << (vf.loss_history.empty() ? 0.0 : vf.loss_history.back()) << "\n";
  return kExitOk;
}

int cmd_eval(const Globals& g, const std::string& policy_path, const std::string& problems) {
  ExperimentConfig cfg = load_config(g);
  const auto env = make_environment(cfg.env, cfg.max_depth());
  const auto ps = load_problems(problems);
  const double acc = evaluate_policy(*env, policy_or_zero(policy_path, cfg.feature_dim), ps);
  std::cout << Json{{"accuracy", acc}, {"problems", ps.size()}}.dump() << "\n";
  return kExitOk;
}

int cmd_pipeline(const Globals& g) {
  const ExperimentConfig cfg = load_config(g);
  const ExperimentReport rep = run_experiment(cfg, g.out_dir);
  std::map<int, DatasetStats> stats;
  for (const auto& r : rep.rounds) stats[r.round] = r.stats;
  std::cout << render_stats_table(stats) << "\n" << rep.comparison_table() << "\n" << rep.strategy_table();
  return kExitOk;
}

int cmd_stats(const std::string& trees_path, const std::string& pairs_path) {
  std::vector<DumpedTree> trees;
  for_each_jsonl(trees_path, [&](const Json& j, std::size_t) { trees.push_back(parse_tree_dump(j)); });
  const auto pairs = pairs_path.empty() ? std::vector<PreferencePair>{} : load_pairs(pairs_path);
  std::cout << render_stats_table({{1, compute_stats(std::span<const DumpedTree>(trees), pairs)}});
  return kExitOk;
}

int cmd_dump_tree(const Globals& g, const std::string& problem_id, const std::string& problems, int round,
                  const std::string& policy_path, const std::string& value_path) {
  ExperimentConfig cfg = load_config(g);
  const auto env = make_environment(cfg.env, cfg.max_depth());
  const auto ps = load_problems(problems);
  auto it = std::find_if(ps.begin(), ps.end(), [&](const Problem& p) { return p.id == problem_id; });
  if (it == ps.end()) throw ConfigError("no problem with id '" + problem_id + "' in " + problems);
  SearchConfig search = cfg.search_for(round);
  search.rng_seed = derive_seed(derive_seed(derive_seed(cfg.seed ^ search.rng_seed, "search"),
                                            static_cast<std::uint64_t>(round)),
                                problem_id);
  const PlanTree tree = run_search(*env, *it, policy_or_zero(policy_path, cfg.feature_dim),
                                   value_or_zero(value_path, cfg.feature_dim), search);
  std::cout << dump_tree(tree) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search-guided preference learning on synthetic planning tasks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the experiment seed");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and manifest.json");
  app.fallthrough();

  int round = 1;
  std::string policy, value, endpoint, problems, data, init, out_path, pairs, data_dir, ref, trees, problem_id;
  std::string objective = "step-apo", strategy;

  auto* gen = app.add_subcommand("gen", "Generate problems, search trees and datasets");
  gen->add_option("--round", round, "Round whose search settings to use")->check(CLI::PositiveNumber);
  gen->add_option("--policy", policy, "Policy checkpoint driving the search");
  gen->add_option("--value", value, "Value checkpoint for leaf evaluation");
  gen->add_option("--gen-endpoint", endpoint, "Remote step generator (http://host:port/path)");

  auto* sft = app.add_subcommand("sft", "Supervised fine-tuning on correct paths");
  sft->add_option("--problems", problems)->required()->check(CLI::ExistingFile);
  sft->add_option("--data", data, "SFT trajectories (JSONL)")->required()->check(CLI::ExistingFile);
  sft->add_option("--init", init, "Initial policy (default: zeros)");
  sft->add_option("--out", out_path, "Output checkpoint path");

  auto* apo = app.add_subcommand("apo", "Preference optimization against a frozen reference");
  apo->add_option("--problems", problems)->required()->check(CLI::ExistingFile);
  apo->add_option("--pairs", pairs, "Pair file (JSONL)");
  apo->add_option("--data-dir", data_dir, "Output directory of `gen`");
  apo->add_option("--ref", ref, "Reference policy")->required()->check(CLI::ExistingFile);
  apo->add_option("--init", init, "Initial policy (default: the reference)");
  apo->add_option("--objective", objective)->check(CLI::IsMember({"step-apo", "step-dpo", "dpo"}));
  apo->add_option("--pair-strategy", strategy, "Pair strategy file to read from --data-dir");
  apo->add_option("--out", out_path, "Output checkpoint path");

  auto* vfit = app.add_subcommand("value-fit", "Fit the value model on search labels");
  vfit->add_option("--problems", problems)->required()->check(CLI::ExistingFile);
  vfit->add_option("--labels", data, "Value labels (JSONL)")->required()->check(CLI::ExistingFile);
  vfit->add_option("--out", out_path, "Output checkpoint path");

  auto* eval = app.add_subcommand("eval", "Greedy held-out accuracy");
  eval->add_option("--policy", policy, "Policy checkpoint (default: zeros)");
  eval->add_option("--problems", problems)->required()->check(CLI::ExistingFile);

  app.add_subcommand("pipeline", "Full multi-round run");

  auto* stats = app.add_subcommand("stats", "Dataset statistics from tree dumps");
  stats->add_option("--trees", trees)->required()->check(CLI::ExistingFile);
  stats->add_option("--pairs", pairs)->check(CLI::ExistingFile);

  auto* dump = app.add_subcommand("dump-tree", "Search one problem and print the tree");
  dump->add_option("--problem", problem_id)->required();
  dump->add_option("--problems", problems)->required()->check(CLI::ExistingFile);
  dump->add_option("--round", round)->check(CLI::PositiveNumber);
  dump->add_option("--policy", policy);
  dump->add_option("--value", value);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen") return cmd_gen(g, round, policy, value, endpoint);
    if (cmd == "sft") return cmd_sft(g, problems, data, init, out_path);
    if (cmd == "apo") return cmd_apo(g, problems, pairs, data_dir, ref, init, objective, strategy, out_path);
    if (cmd == "value-fit") return cmd_value_fit(g, problems, data, out_path);
    if (cmd == "eval") return cmd_eval(g, policy, problems);
    if (cmd == "pipeline") return cmd_pipeline(g);
    if (cmd == "stats") return cmd_stats(trees, pairs);
    if (cmd == "dump-tree") return cmd_dump_tree(g, problem_id, problems, round, policy, value);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
