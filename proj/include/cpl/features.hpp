#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cpl/env.hpp"

namespace cpl {

inline constexpr std::size_t kDefaultFeatureDim = std::size_t{1} << 16;

/// Sparse vector over [0, dim): indices strictly increasing, values finite.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
  bool operator==(const SparseVector&) const = default;

  /// Sorts by index and merges duplicates (summing their values).
  void canonicalize();
  /// y += alpha * this
  void add_to(std::span<double> y, double alpha = 1.0) const;
  double dot(std::span<const double> w) const;
};

using FeatureVector = SparseVector;

/// Hashed conjunctions of context tokens (trace suffix, depth, tags seen so
/// far) with action tokens (canonical string, tags, kind), plus a bias.
FeatureVector featurize(const State& s, const StepAction& a, std::size_t dim = kDefaultFeatureDim);

/// Features of every candidate at one state; context is hashed once.
std::vector<FeatureVector> featurize_all(const State& s, std::span<const StepAction> candidates,
                                         std::size_t dim = kDefaultFeatureDim);

/// State-only features: the context crossed with a null action.
FeatureVector featurize_state(const State& s, std::size_t dim = kDefaultFeatureDim);

}  // namespace cpl
