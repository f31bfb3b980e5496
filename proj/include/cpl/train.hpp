#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpl/policy.hpp"
#include "cpl/prefdata.hpp"

namespace cpl {

enum class OptimizerKind { Sgd, Adam };
enum class Objective { StepApo, StepDpo, Dpo };

OptimizerKind parse_optimizer(std::string_view s);
std::string_view to_string(OptimizerKind k);
/// "step-apo", "step-dpo" or "dpo". Throws ConfigError otherwise.
Objective parse_objective(std::string_view s);
std::string_view to_string(Objective o);

struct TrainConfig {
  double beta = 0.3;
  double solution_scale = 0.3;
  double lr = 0.05;
  int epochs = 2;
  std::size_t batch_size = 16;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint64_t seed = 0;
  double warmup_ratio = 0.1;
  bool cosine = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  static TrainConfig sft_defaults();
  static TrainConfig apo_defaults();

  /// Throws ConfigError unless beta > 0, 0 < solution_scale <= 1, lr >= 0,
  /// epochs >= 0, batch_size >= 1 and warmup_ratio in [0, 1).
  void validate() const;
};

/// Learning rate at optimizer step t of `total`: linear warmup, then cosine
/// decay to zero (or constant when cosine is off).
double scheduled_lr(const TrainConfig& cfg, std::size_t t, std::size_t total);

struct EpochReport {
  int epoch = 0;
  double mean_loss = 0.0;
  double pair_accuracy = 0.0;  // SFT: fraction of steps where the chosen action is the argmax
  double grad_norm = 0.0;      // mean L2 norm of the batch gradients
};

struct LossReport {
  std::vector<EpochReport> epochs;

  std::string to_csv() const;
  void save_csv(const std::filesystem::path& path) const;
};

struct FitResult {
  PolicyParams params;
  LossReport report;
};

// ---- Losses and analytic gradients ------------------------------------------

/// Numerically stable -log(sigmoid(z)).
double neg_log_sigmoid(double z);
double sigmoid(double z);

/// Reference log-probabilities of a pair's two actions, fixed during training.
struct RefTerms {
  double logp_chosen = 0.0;
  double logp_rejected = 0.0;
};
RefTerms reference_terms(const PolicyParams& ref, const PairExample& pair);

struct PairEval {
  double loss = 0.0;
  double margin = 0.0;  // beta * (log-ratio of the chosen minus log-ratio of the rejected)
  SparseVector grad;    // empty unless requested
};

/// -log sigmoid(D_w - D_l - value_scale * s_f * (v_w - v_l)) with
/// D = beta * (log pi_theta - log pi_ref). value_scale = 1 gives Step-APO,
/// 0 gives Step-DPO.
PairEval eval_pair(const PairExample& pair, const PolicyParams& theta, const RefTerms& ref, double beta,
                   double solution_scale, double value_scale, bool want_grad);

double step_apo_loss(const PairExample& pair, const PolicyParams& theta, const PolicySnapshot& ref,
                     const TrainConfig& cfg);
SparseVector step_apo_grad(const PairExample& pair, const PolicyParams& theta, const PolicySnapshot& ref,
                           const TrainConfig& cfg);

double step_dpo_loss(const PairExample& pair, const PolicyParams& theta, const PolicySnapshot& ref, double beta);
SparseVector step_dpo_grad(const PairExample& pair, const PolicyParams& theta, const PolicySnapshot& ref,
                           double beta);

/// Sum of step log-probabilities along a trajectory.
double response_log_prob(const PolicyParams& params, std::span<const StepExample> steps);

/// -log sigmoid(beta * (D_w - D_l)) with D the summed log-ratio of each response.
double dpo_loss(const ResponseExample& pair, const PolicyParams& theta, const PolicySnapshot& ref, double beta);
SparseVector dpo_grad(const ResponseExample& pair, const PolicyParams& theta, const PolicySnapshot& ref,
                      double beta);

/// Negative log-likelihood of the chosen action.
double sft_loss(const StepExample& step, const PolicyParams& theta);
SparseVector sft_grad(const StepExample& step, const PolicyParams& theta);

// ---- Training loops -------------------------------------------------------

/// Minibatch descent on the mean NLL. Throws PreconditionError on empty data,
/// DivergenceError naming epoch and batch on a non-finite loss.
FitResult sft_fit(const PolicyParams& init, std::span<const StepExample> steps, const TrainConfig& cfg);

/// Step-APO (or Step-DPO) against a frozen reference.
FitResult apo_fit(const PolicyParams& init, const PolicySnapshot& ref, std::span<const PairExample> pairs,
                  const TrainConfig& cfg, Objective objective = Objective::StepApo);

/// Instance-level DPO on complete responses.
FitResult dpo_fit(const PolicyParams& init, const PolicySnapshot& ref, std::span<const ResponseExample> pairs,
                  const TrainConfig& cfg);

}  // namespace cpl
