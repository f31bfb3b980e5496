#include <algorithm>
#include <cmath>
#include <limits>

#include "cpl/error.hpp"
#include "cpl/policy.hpp"

namespace cpl {

PolicyParams PolicyParams::zeros(std::size_t dim) {
  PolicyParams p;
  p.weights.assign(dim, 0.0);
  p.feature_dim = dim;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw PreconditionError("log_softmax of an empty set");
  for (const double z : logits) {
    if (!std::isfinite(z)) throw NumericError("non-finite logit");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (const double z : logits) sum += std::exp(z - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> logits(const PolicyParams& params, std::span<const FeatureVector> features) {
  std::vector<double> z(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) z[i] = features[i].dot(params.weights);
  return z;
}

std::vector<double> log_probs(const PolicyParams& params, std::span<const FeatureVector> features) {
  if (features.empty()) throw PreconditionError("log_probs requires a non-empty candidate set");
  return log_softmax(logits(params, features));
}

std::vector<double> log_probs(const PolicyParams& params, const State& s, std::span<const StepAction> candidates) {
  if (candidates.empty()) throw PreconditionError("log_probs requires a non-empty candidate set");
  return log_probs(params, featurize_all(s, candidates, params.feature_dim));
}

std::vector<std::size_t> sample_distinct(std::span<const double> z, std::size_t k, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (k < 1) throw PreconditionError("sample_distinct requires k >= 1");
  std::vector<std::size_t> remaining(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) remaining[i] = i;
  std::vector<std::size_t> picked;
  const std::size_t want = std::min(k, z.size());
  std::vector<double> scaled;
  while (picked.size() < want) {
    scaled.resize(remaining.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) scaled[i] = z[remaining[i]] / temperature;
    const auto lp = log_softmax(scaled);
    double u = rng.uniform();
    std::size_t choice = remaining.size() - 1;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      u -= std::exp(lp[i]);
      if (u < 0.0) {
        choice = i;
        break;
      }
    }
    picked.push_back(remaining[choice]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(choice));
  }
  return picked;
}

std::vector<StepAction> sample_distinct(const PolicyParams& params, const State& s,
                                        std::span<const StepAction> candidates, std::size_t k, double temperature,
                                        Rng& rng) {
  const auto z = logits(params, featurize_all(s, candidates, params.feature_dim));
  std::vector<StepAction> out;
  for (const auto i : sample_distinct(z, k, temperature, rng)) out.push_back(candidates[i]);
  return out;
}

SparseVector grad_log_prob(const PolicyParams& params, std::span<const FeatureVector> features, std::size_t chosen) {
  if (chosen >= features.size()) throw PreconditionError("grad_log_prob: chosen index out of range");
  const auto lp = log_probs(params, features);
  SparseVector g;
  for (std::size_t b = 0; b < features.size(); ++b) {
    const double coef = (b == chosen ? 1.0 : 0.0) - std::exp(lp[b]);
    for (std::size_t i = 0; i < features[b].nnz(); ++i) {
      g.index.push_back(features[b].index[i]);
      g.value.push_back(coef * features[b].value[i]);
    }
  }
  g.canonicalize();
  return g;
}

SparseVector grad_log_prob(const PolicyParams& params, const State& s, std::span<const StepAction> candidates,
                           std::size_t chosen) {
  if (chosen >= candidates.size()) throw PreconditionError("grad_log_prob: chosen index out of range");
  return grad_log_prob(params, featurize_all(s, candidates, params.feature_dim), chosen);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("argmax of an empty set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace cpl
