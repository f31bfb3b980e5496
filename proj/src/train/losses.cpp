#include <cmath>

#include "cpl/error.hpp"
#include "cpl/train.hpp"

namespace cpl {

namespace {

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what);
}

/// Appends alpha * x to acc without canonicalizing.
void append_scaled(SparseVector& acc, const SparseVector& x, double alpha) {
  acc.index.insert(acc.index.end(), x.index.begin(), x.index.end());
  for (double v : x.value) acc.value.push_back(alpha * v);
}

double chosen_log_prob(const PolicyParams& params, const StepExample& step) {
  const double lp = log_probs(params, step.features).at(step.chosen);
  check_finite(lp, "log-probability");
  return lp;
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double neg_log_sigmoid(double z) {
  if (z >= 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

RefTerms reference_terms(const PolicyParams& ref, const PairExample& pair) {
  const auto lp = log_probs(ref, pair.features);
  RefTerms t{lp.at(pair.chosen), lp.at(pair.rejected)};
  check_finite(t.logp_chosen, "reference log-probability");
  check_finite(t.logp_rejected, "reference log-probability");
  return t;
}

PairEval eval_pair(const PairExample& pair, const PolicyParams& theta, const RefTerms& ref, double beta,
                   double solution_scale, double value_scale, bool want_grad) {
  if (pair.chosen == pair.rejected || pair.chosen >= pair.features.size() ||
      pair.rejected >= pair.features.size()) {
    throw PreconditionError("invalid pair indices");
  }
  const auto lp = log_probs(theta, pair.features);
  const double lw = lp[pair.chosen];
  const double ll = lp[pair.rejected];
  check_finite(lw, "log-probability");
  check_finite(ll, "log-probability");

  const double s_f = pair.kind == StepKind::Solution ? solution_scale : 1.0;
  const double margin = beta * (lw - ref.logp_chosen) - beta * (ll - ref.logp_rejected);
  const double z = margin - value_scale * s_f * (pair.v_chosen - pair.v_rejected);

  PairEval out;
  out.loss = neg_log_sigmoid(z);
  out.margin = margin;
  if (want_grad) {
    // Both actions share one softmax, so grad log pi_w - grad log pi_l
    // reduces to phi_w - phi_l.
    const double coef = -beta * sigmoid(-z);
    append_scaled(out.grad, pair.features[pair.chosen], coef);
    append_scaled(out.grad, pair.features[pair.rejected], -coef);
    out.grad.canonicalize();
  }
  return out;
}

double step_apo_loss(const PairExample& pair, const PolicyParams& theta, const PolicySnapshot& ref,
                     const TrainConfig& cfg) {
  return eval_pair(pair, theta, reference_terms(ref.params(), pair), cfg.beta, cfg.solution_scale, 1.0, false).loss;
}

SparseVector step_apo_grad(const PairExample& pair, const PolicyParams& theta, const PolicySnapshot& ref,
                           const TrainConfig& cfg) {
  return eval_pair(pair, theta, reference_terms(ref.params(), pair), cfg.beta, cfg.solution_scale, 1.0, true).grad;
}

double step_dpo_loss(const PairExample& pair, const PolicyParams& theta, const PolicySnapshot& ref, double beta) {
  return eval_pair(pair, theta, reference_terms(ref.params(), pair), beta, 1.0, 0.0, false).loss;
}

SparseVector step_dpo_grad(const PairExample& pair, const PolicyParams& theta, const PolicySnapshot& ref,
                           double beta) {
  return eval_pair(pair, theta, reference_terms(ref.params(), pair), beta, 1.0, 0.0, true).grad;
}

double response_log_prob(const PolicyParams& params, std::span<const StepExample> steps) {
  double sum = 0.0;
  for (const auto& s : steps) sum += chosen_log_prob(params, s);
  return sum;
}

namespace {

double dpo_arg(const ResponseExample& pair, const PolicyParams& theta, const PolicySnapshot& ref, double beta) {
  const double dw = response_log_prob(theta, pair.chosen) - response_log_prob(ref.params(), pair.chosen);
  const double dl = response_log_prob(theta, pair.rejected) - response_log_prob(ref.params(), pair.rejected);
  return beta * (dw - dl);
}

}  // namespace

double dpo_loss(const ResponseExample& pair, const PolicyParams& theta, const PolicySnapshot& ref, double beta) {
  return neg_log_sigmoid(dpo_arg(pair, theta, ref, beta));
}

SparseVector dpo_grad(const ResponseExample& pair, const PolicyParams& theta, const PolicySnapshot& ref,
                      double beta) {
  const double coef = -beta * sigmoid(-dpo_arg(pair, theta, ref, beta));
  SparseVector g;
  for (const auto& s : pair.chosen) append_scaled(g, grad_log_prob(theta, s.features, s.chosen), coef);
  for (const auto& s : pair.rejected) append_scaled(g, grad_log_prob(theta, s.features, s.chosen), -coef);
  g.canonicalize();
  return g;
}

double sft_loss(const StepExample& step, const PolicyParams& theta) { return -chosen_log_prob(theta, step); }

SparseVector sft_grad(const StepExample& step, const PolicyParams& theta) {
  SparseVector g = grad_log_prob(theta, step.features, step.chosen);
  for (double& v : g.value) v = -v;
  return g;
}

}  // namespace cpl
