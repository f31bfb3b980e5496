#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cpl/error.hpp"
#include "cpl/json_io.hpp"
#include "cpl/train.hpp"

namespace cpl {

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

Objective parse_objective(std::string_view s) {
  if (s == "step-apo") return Objective::StepApo;
  if (s == "step-dpo") return Objective::StepDpo;
  if (s == "dpo") return Objective::Dpo;
  throw ConfigError("unknown objective '" + std::string(s) + "'");
}

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::StepApo: return "step-apo";
    case Objective::StepDpo: return "step-dpo";
    case Objective::Dpo: return "dpo";
  }
  return "?";
}

TrainConfig TrainConfig::sft_defaults() {
  TrainConfig c;
  c.lr = 0.1;
  c.epochs = 5;
  return c;
}

TrainConfig TrainConfig::apo_defaults() {
  TrainConfig c;
  c.lr = 0.05;
  c.epochs = 2;
  return c;
}

void TrainConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(solution_scale > 0.0 && solution_scale <= 1.0)) throw ConfigError("solution_scale must be in (0, 1]");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and non-negative");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw ConfigError("warmup_ratio must be in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
    throw ConfigError("invalid adam coefficients");
  }
}

double scheduled_lr(const TrainConfig& cfg, std::size_t t, std::size_t total) {
  if (total == 0) return cfg.lr;
  const auto warmup = static_cast<std::size_t>(std::ceil(cfg.warmup_ratio * static_cast<double>(total)));
  if (t < warmup) return cfg.lr * static_cast<double>(t + 1) / static_cast<double>(warmup);
  if (!cfg.cosine || total <= warmup) return cfg.lr;
  const double progress = static_cast<double>(t - warmup) / static_cast<double>(total - warmup);
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::string LossReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,mean_loss,pair_accuracy,grad_norm\n";
  for (const auto& e : epochs) os << e.epoch << ',' << e.mean_loss << ',' << e.pair_accuracy << ',' << e.grad_norm << '\n';
  return os.str();
}

void LossReport::save_csv(const std::filesystem::path& path) const { write_file(path, to_csv()); }

}  // namespace cpl
