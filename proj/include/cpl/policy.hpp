#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "cpl/env.hpp"
#include "cpl/features.hpp"
#include "cpl/rng.hpp"

namespace cpl {

/// Weights of the linear-softmax policy pi(a|s) ∝ exp(<w, phi(s, a)>).
struct PolicyParams {
  std::vector<double> weights;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::uint64_t version = 0;

  static PolicyParams zeros(std::size_t dim = kDefaultFeatureDim);
  bool operator==(const PolicyParams&) const = default;
};

/// Frozen copy of a policy. Cheap to copy; the weights are shared and never
/// modified after construction.
class PolicySnapshot {
 public:
  explicit PolicySnapshot(PolicyParams params)
      : params_(std::make_shared<const PolicyParams>(std::move(params))) {}

  const PolicyParams& params() const { return *params_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
};

/// Numerically stable log-softmax (max-subtracted log-sum-exp).
std::vector<double> log_softmax(std::span<const double> logits);

std::vector<double> logits(const PolicyParams& params, std::span<const FeatureVector> features);

/// Log-probabilities over a candidate set. Throws PreconditionError when
/// the set is empty.
std::vector<double> log_probs(const PolicyParams& params, std::span<const FeatureVector> features);
std::vector<double> log_probs(const PolicyParams& params, const State& s, std::span<const StepAction> candidates);

/// Draws up to min(k, n) distinct candidate indices without replacement from
/// softmax(logits / temperature). Throws ConfigError when temperature <= 0.
std::vector<std::size_t> sample_distinct(std::span<const double> logits, std::size_t k, double temperature, Rng& rng);
std::vector<StepAction> sample_distinct(const PolicyParams& params, const State& s,
                                        std::span<const StepAction> candidates, std::size_t k, double temperature,
                                        Rng& rng);

/// d/dw log pi(chosen | s) = phi(s, chosen) - sum_b pi(b|s) phi(s, b).
SparseVector grad_log_prob(const PolicyParams& params, std::span<const FeatureVector> features, std::size_t chosen);
SparseVector grad_log_prob(const PolicyParams& params, const State& s, std::span<const StepAction> candidates,
                           std::size_t chosen);

/// Index of the highest-probability candidate; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// ---- Checkpoints -----------------------------------------------------------

/// JSON {kind: "policy", feature_dim, version, weights}; weights round-trip
/// bit-exactly.
void save_policy(const PolicyParams& p, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace cpl
