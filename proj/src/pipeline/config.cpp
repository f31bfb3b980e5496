#include <set>

#include "cpl/error.hpp"
#include "cpl/pipeline.hpp"

namespace cpl {

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& [key, _] : j.items()) {
    if (!names.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json search_to_json(const SearchConfig& s) {
  return Json{{"c_puct", s.c_puct},
              {"n_simulations", s.n_simulations},
              {"root_children", s.root_children},
              {"inner_children", s.inner_children},
              {"max_depth", s.max_depth},
              {"temperature", s.temperature},
              {"rng_seed", s.rng_seed}};
}

SearchConfig search_from_json(const Json& j) {
  reject_unknown(j, {"c_puct", "n_simulations", "root_children", "inner_children", "max_depth", "temperature",
                     "rng_seed"},
                 "search");
  SearchConfig s;
  read(j, "c_puct", s.c_puct);
  read(j, "n_simulations", s.n_simulations);
  read(j, "root_children", s.root_children);
  read(j, "inner_children", s.inner_children);
  read(j, "max_depth", s.max_depth);
  read(j, "temperature", s.temperature);
  read(j, "rng_seed", s.rng_seed);
  return s;
}

Json train_to_json(const TrainConfig& t) {
  return Json{{"beta", t.beta},
              {"solution_scale", t.solution_scale},
              {"lr", t.lr},
              {"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"optimizer", std::string(to_string(t.optimizer))},
              {"seed", t.seed},
              {"warmup_ratio", t.warmup_ratio},
              {"cosine", t.cosine}};
}

TrainConfig train_from_json(const Json& j, TrainConfig t, const std::string& where) {
  reject_unknown(j, {"beta", "solution_scale", "lr", "epochs", "batch_size", "optimizer", "seed", "warmup_ratio",
                     "cosine"},
                 where);
  read(j, "beta", t.beta);
  read(j, "solution_scale", t.solution_scale);
  read(j, "lr", t.lr);
  read(j, "epochs", t.epochs);
  read(j, "batch_size", t.batch_size);
  if (j.contains("optimizer")) t.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  read(j, "seed", t.seed);
  read(j, "warmup_ratio", t.warmup_ratio);
  read(j, "cosine", t.cosine);
  return t;
}

}  // namespace

std::vector<SearchConfig> ExperimentConfig::default_search() {
  SearchConfig r1;
  r1.n_simulations = 200;
  SearchConfig r2;
  r2.n_simulations = 100;
  return {r1, r2};
}

const SearchConfig& ExperimentConfig::search_for(int round) const {
  const auto i = static_cast<std::size_t>(std::max(round, 1) - 1);
  return search[std::min(i, search.size() - 1)];
}

void ExperimentConfig::validate() const {
  if (env != "arith" && env != "grid") throw ConfigError("unknown environment '" + env + "'");
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (n_train < 1 || n_heldout < 1) throw ConfigError("n_train and n_heldout must be positive");
  if (!(round1_fraction > 0.0 && round1_fraction <= 1.0)) throw ConfigError("round1_fraction must be in (0, 1]");
  if (search.empty()) throw ConfigError("search needs at least one entry");
  for (const auto& s : search) {
    s.validate();
    if (s.max_depth != search.front().max_depth) throw ConfigError("max_depth must agree across rounds");
  }
  sft.validate();
  apo.validate();
  if (value_epochs < 0 || !(value_lr > 0.0)) throw ConfigError("value_epochs >= 0 and value_lr > 0 required");
  if (sft_per_problem < 1) throw ConfigError("sft_per_problem must be at least 1");
  if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

Json ExperimentConfig::to_json() const {
  Json s = Json::array();
  for (const auto& c : search) s.push_back(search_to_json(c));
  return Json{{"env", env},
              {"difficulty", std::string(to_string(difficulty))},
              {"n_train", n_train},
              {"n_heldout", n_heldout},
              {"rounds", rounds},
              {"round1_fraction", round1_fraction},
              {"search", s},
              {"sft", train_to_json(sft)},
              {"apo", train_to_json(apo)},
              {"value_epochs", value_epochs},
              {"value_lr", value_lr},
              {"pair_strategy", std::string(to_string(pair_strategy))},
              {"sft_per_problem", sft_per_problem},
              {"response_pairs_per_problem", response_pairs_per_problem},
              {"baselines", baselines},
              {"strategy_ablation", strategy_ablation},
              {"feature_dim", feature_dim},
              {"workers", workers},
              {"seed", seed}};
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  reject_unknown(j, {"env", "difficulty", "n_train", "n_heldout", "rounds", "round1_fraction", "search", "sft",
                     "apo", "value_epochs", "value_lr", "pair_strategy", "sft_per_problem",
                     "response_pairs_per_problem", "baselines", "strategy_ablation", "feature_dim", "workers",
                     "seed"},
                 "experiment config");
  ExperimentConfig c;
  try {
    read(j, "env", c.env);
    if (j.contains("difficulty")) c.difficulty = parse_difficulty(j.at("difficulty").get<std::string>());
    read(j, "n_train", c.n_train);
    read(j, "n_heldout", c.n_heldout);
    read(j, "rounds", c.rounds);
    read(j, "round1_fraction", c.round1_fraction);
    if (j.contains("search")) {
      c.search.clear();
      for (const auto& s : j.at("search")) c.search.push_back(search_from_json(s));
    }
    if (j.contains("sft")) c.sft = train_from_json(j.at("sft"), c.sft, "sft");
    if (j.contains("apo")) c.apo = train_from_json(j.at("apo"), c.apo, "apo");
    read(j, "value_epochs", c.value_epochs);
    read(j, "value_lr", c.value_lr);
    if (j.contains("pair_strategy")) c.pair_strategy = parse_pair_strategy(j.at("pair_strategy").get<std::string>());
    read(j, "sft_per_problem", c.sft_per_problem);
    read(j, "response_pairs_per_problem", c.response_pairs_per_problem);
    read(j, "baselines", c.baselines);
    read(j, "strategy_ablation", c.strategy_ablation);
    read(j, "feature_dim", c.feature_dim);
    read(j, "workers", c.workers);
    read(j, "seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace cpl
