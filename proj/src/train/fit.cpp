#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cpl/error.hpp"
#include "cpl/hash.hpp"
#include "cpl/rng.hpp"
#include "cpl/simd/kernels.hpp"
#include "cpl/train.hpp"

namespace cpl {

namespace {

struct ExampleResult {
  double loss = 0.0;
  bool correct = false;
};

/// Adds the gradient of example i (evaluated at params) into grad.
using ExampleFn = std::function<ExampleResult(std::size_t i, const PolicyParams& params, std::span<double> grad)>;

FitResult train_loop(const PolicyParams& init, std::size_t n, const TrainConfig& cfg, std::string_view stream,
                     const ExampleFn& example) {
  cfg.validate();
  if (n == 0) throw PreconditionError("no training examples");
  if (init.weights.size() != init.feature_dim) throw PreconditionError("policy weights do not match feature_dim");

  FitResult out{init, {}};
  PolicyParams& params = out.params;
  const std::size_t dim = params.weights.size();
  std::vector<double> grad(dim), m(dim, 0.0), v(dim, 0.0);

  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches * static_cast<std::size_t>(cfg.epochs);
  std::size_t step = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, stream));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0, norm_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t b = 0; b < batches; ++b) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      double batch_loss = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        const auto r = example(order[k], params, grad);
        batch_loss += r.loss;
        correct += r.correct ? 1 : 0;
      }
      const double inv = 1.0 / static_cast<double>(hi - lo);
      simd::scale(inv, grad);
      const double gnorm = std::sqrt(simd::sum_squares(grad));
      if (!std::isfinite(batch_loss) || !std::isfinite(gnorm)) {
        throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " + std::to_string(b),
                              epoch, static_cast<int>(b));
      }
      loss_sum += batch_loss;
      norm_sum += gnorm;

      const double lr = scheduled_lr(cfg, step, total_steps);
      ++step;
      if (cfg.optimizer == OptimizerKind::Sgd) {
        simd::axpy(-lr, grad, params.weights);
      } else {
        const double t = static_cast<double>(step);
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
        const double c2 = std::sqrt(1.0 - std::pow(cfg.adam_beta2, t));
        // Bias correction folded into the step size and epsilon.
        simd::adam(params.weights, m, v, grad, {cfg.adam_beta1, cfg.adam_beta2, lr * c2 / c1, cfg.adam_eps * c2});
      }
    }
    out.report.epochs.push_back({epoch, loss_sum / static_cast<double>(n),
                                 static_cast<double>(correct) / static_cast<double>(n),
                                 norm_sum / static_cast<double>(batches)});
  }
  return out;
}

}  // namespace

FitResult sft_fit(const PolicyParams& init, std::span<const StepExample> steps, const TrainConfig& cfg) {
  return train_loop(init, steps.size(), cfg, "sft", [&](std::size_t i, const PolicyParams& p, std::span<double> g) {
    const auto& s = steps[i];
    const auto lp = log_probs(p, s.features);
    grad_log_prob(p, s.features, s.chosen).add_to(g, -1.0);
    return ExampleResult{-lp.at(s.chosen), argmax(lp) == s.chosen};
  });
}

FitResult apo_fit(const PolicyParams& init, const PolicySnapshot& ref, std::span<const PairExample> pairs,
                  const TrainConfig& cfg, Objective objective) {
  if (objective == Objective::Dpo) throw ConfigError("instance-level DPO trains on response pairs");
  std::vector<RefTerms> ref_terms;
  ref_terms.reserve(pairs.size());
  for (const auto& p : pairs) ref_terms.push_back(reference_terms(ref.params(), p));
  const double value_scale = objective == Objective::StepApo ? 1.0 : 0.0;
  return train_loop(init, pairs.size(), cfg, to_string(objective),
                    [&](std::size_t i, const PolicyParams& p, std::span<double> g) {
                      auto e = eval_pair(pairs[i], p, ref_terms[i], cfg.beta, cfg.solution_scale, value_scale, true);
                      e.grad.add_to(g);
                      return ExampleResult{e.loss, e.margin > 0.0};
                    });
}

FitResult dpo_fit(const PolicyParams& init, const PolicySnapshot& ref, std::span<const ResponseExample> pairs,
                  const TrainConfig& cfg) {
  std::vector<double> ref_delta;
  ref_delta.reserve(pairs.size());
  for (const auto& p : pairs) {
    ref_delta.push_back(response_log_prob(ref.params(), p.chosen) - response_log_prob(ref.params(), p.rejected));
  }
  return train_loop(init, pairs.size(), cfg, "dpo", [&](std::size_t i, const PolicyParams& p, std::span<double> g) {
    const auto& pair = pairs[i];
    const double margin =
        cfg.beta * (response_log_prob(p, pair.chosen) - response_log_prob(p, pair.rejected) - ref_delta[i]);
    const double coef = -cfg.beta * sigmoid(-margin);
    for (const auto& s : pair.chosen) grad_log_prob(p, s.features, s.chosen).add_to(g, coef);
    for (const auto& s : pair.rejected) grad_log_prob(p, s.features, s.chosen).add_to(g, -coef);
    return ExampleResult{neg_log_sigmoid(margin), margin > 0.0};
  });
}

}  // namespace cpl
