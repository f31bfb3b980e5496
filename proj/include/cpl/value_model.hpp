#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cpl/env.hpp"
#include "cpl/features.hpp"

namespace cpl {

/// State-value regressor V(s) = tanh(<w, phi(s, null)>).
struct ValueParams {
  std::vector<double> weights;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::uint64_t round = 0;

  static ValueParams zeros(std::size_t dim = kDefaultFeatureDim);
  bool operator==(const ValueParams&) const = default;
};

struct ValueLabel {
  State state;
  double target = 0.0;  // in [-1, 1]
};

double predict(const ValueParams& params, const State& s);
double predict(const ValueParams& params, const FeatureVector& f);

/// Mean squared error of predictions against targets, and its gradient with
/// respect to the weights (dense, feature_dim long).
double mse_loss(const ValueParams& params, std::span<const FeatureVector> features, std::span<const double> targets);
std::vector<double> mse_grad(const ValueParams& params, std::span<const FeatureVector> features,
                             std::span<const double> targets);

struct ValueFit {
  ValueParams params;
  std::vector<double> loss_history;  // training loss at the start of each epoch
};

/// Full-batch gradient descent on the MSE. The input is not modified.
/// Throws PreconditionError on empty labels or lr <= 0, DivergenceError
/// (with the epoch) on a non-finite loss.
ValueFit fit(const ValueParams& init, std::span<const ValueLabel> labels, int epochs, double lr);

/// JSON {kind: "value", feature_dim, version, weights}; version holds the round.
void save_value(const ValueParams& p, const std::filesystem::path& path);
ValueParams load_value(const std::filesystem::path& path);

}  // namespace cpl
