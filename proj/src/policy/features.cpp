#include <algorithm>
#include <numeric>
#include <string>

#include "cpl/error.hpp"
#include "cpl/features.hpp"
#include "cpl/hash.hpp"
#include "cpl/simd/kernels.hpp"

namespace cpl {

namespace {

constexpr std::size_t kSuffixWindow = 2;
constexpr std::uint64_t kBiasHash = fnv1a64("__bias__");

std::vector<std::uint64_t> context_hashes(const State& s) {
  std::vector<std::uint64_t> h;
  h.push_back(fnv1a64("*"));
  h.push_back(fnv1a64("depth=" + std::to_string(s.depth)));
  for (std::size_t back = 1; back <= kSuffixWindow && back <= s.trace.size(); ++back) {
    const auto& step = s.trace[s.trace.size() - back];
    const std::string prefix = "p" + std::to_string(back);
    h.push_back(fnv1a64(prefix + ":" + step.display));
    for (const auto& t : step.tags) h.push_back(fnv1a64(prefix + "#" + t));
  }
  std::vector<std::string> seen;
  for (const auto& step : s.trace) {
    for (const auto& t : step.tags) seen.push_back(t);
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (const auto& t : seen) h.push_back(fnv1a64("seen#" + t));
  return h;
}

std::vector<std::uint64_t> action_hashes(const StepAction& a) {
  std::vector<std::uint64_t> h;
  h.push_back(fnv1a64("a:" + a.display));
  h.push_back(fnv1a64(std::string("k:") + std::string(to_string(a.kind))));
  for (const auto& t : a.tags) h.push_back(fnv1a64("t:" + t));
  return h;
}

FeatureVector cross(const std::vector<std::uint64_t>& ctx, const std::vector<std::uint64_t>& act, std::size_t dim) {
  FeatureVector f;
  f.index.reserve(ctx.size() * act.size() + 1);
  f.index.push_back(static_cast<std::uint32_t>(mix64(kBiasHash) % dim));
  for (const auto c : ctx) {
    for (const auto a : act) f.index.push_back(static_cast<std::uint32_t>(hash_combine(c, a) % dim));
  }
  f.value.assign(f.index.size(), 1.0);
  f.canonicalize();
  return f;
}

void check_dim(std::size_t dim) {
  if (dim == 0 || dim > (std::size_t{1} << 31)) throw ConfigError("feature dimension must be in [1, 2^31]");
}

}  // namespace

void SparseVector::canonicalize() {
  std::vector<std::size_t> order(index.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return index[a] < index[b]; });
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  idx.reserve(index.size());
  val.reserve(index.size());
  for (const auto o : order) {
    if (!idx.empty() && idx.back() == index[o]) {
      val.back() += value[o];
    } else {
      idx.push_back(index[o]);
      val.push_back(value[o]);
    }
  }
  index = std::move(idx);
  value = std::move(val);
}

void SparseVector::add_to(std::span<double> y, double alpha) const {
  for (std::size_t i = 0; i < index.size(); ++i) y[index[i]] += alpha * value[i];
}

double SparseVector::dot(std::span<const double> w) const { return simd::gather_dot(w, index, value); }

FeatureVector featurize(const State& s, const StepAction& a, std::size_t dim) {
  check_dim(dim);
  return cross(context_hashes(s), action_hashes(a), dim);
}

std::vector<FeatureVector> featurize_all(const State& s, std::span<const StepAction> candidates, std::size_t dim) {
  check_dim(dim);
  const auto ctx = context_hashes(s);
  std::vector<FeatureVector> out;
  out.reserve(candidates.size());
  for (const auto& a : candidates) out.push_back(cross(ctx, action_hashes(a), dim));
  return out;
}

FeatureVector featurize_state(const State& s, std::size_t dim) {
  check_dim(dim);
  return cross(context_hashes(s), {fnv1a64("null")}, dim);
}

}  // namespace cpl
