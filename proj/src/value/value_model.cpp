#include <cmath>

#include "cpl/error.hpp"
#include "cpl/json_io.hpp"
#include "cpl/simd/kernels.hpp"
#include "cpl/value_model.hpp"

namespace cpl {

ValueParams ValueParams::zeros(std::size_t dim) {
  ValueParams p;
  p.weights.assign(dim, 0.0);
  p.feature_dim = dim;
  return p;
}

double predict(const ValueParams& params, const FeatureVector& f) { return std::tanh(f.dot(params.weights)); }

double predict(const ValueParams& params, const State& s) {
  return predict(params, featurize_state(s, params.feature_dim));
}

double mse_loss(const ValueParams& params, std::span<const FeatureVector> features, std::span<const double> targets) {
  double sum = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double e = predict(params, features[i]) - targets[i];
    sum += e * e;
  }
  return sum / static_cast<double>(features.size());
}

std::vector<double> mse_grad(const ValueParams& params, std::span<const FeatureVector> features,
                             std::span<const double> targets) {
  std::vector<double> g(params.feature_dim, 0.0);
  const double inv_n = 1.0 / static_cast<double>(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double p = predict(params, features[i]);
    // d/dw (tanh(z) - t)^2 = 2 (p - t) (1 - p^2) phi
    features[i].add_to(g, 2.0 * (p - targets[i]) * (1.0 - p * p) * inv_n);
  }
  return g;
}

ValueFit fit(const ValueParams& init, std::span<const ValueLabel> labels, int epochs, double lr) {
  if (labels.empty()) throw PreconditionError("value fit requires at least one label");
  if (!(lr > 0.0)) throw PreconditionError("value fit requires lr > 0");
  std::vector<FeatureVector> features;
  std::vector<double> targets;
  features.reserve(labels.size());
  targets.reserve(labels.size());
  for (const auto& l : labels) {
    if (l.target < -1.0 || l.target > 1.0) throw PreconditionError("value label outside [-1, 1]");
    features.push_back(featurize_state(l.state, init.feature_dim));
    targets.push_back(l.target);
  }

  ValueFit out{init, {}};
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double loss = mse_loss(out.params, features, targets);
    if (!std::isfinite(loss)) throw DivergenceError("value fit diverged at epoch " + std::to_string(epoch), epoch);
    out.loss_history.push_back(loss);
    const auto g = mse_grad(out.params, features, targets);
    simd::axpy(-lr, g, out.params.weights);
  }
  return out;
}

void save_value(const ValueParams& p, const std::filesystem::path& path) {
  const Json j{{"kind", "value"}, {"feature_dim", p.feature_dim}, {"version", p.round}, {"weights", p.weights}};
  write_file(path, j.dump() + "\n");
}

ValueParams load_value(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (j.value("kind", std::string()) != "value") throw ParseError(path.string() + ": not a value checkpoint");
  ValueParams p;
  try {
    p.feature_dim = j.at("feature_dim").get<std::size_t>();
    p.round = j.at("version").get<std::uint64_t>();
    p.weights = j.at("weights").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (p.weights.size() != p.feature_dim) throw ParseError(path.string() + ": weights length != feature_dim");
  return p;
}

}  // namespace cpl
