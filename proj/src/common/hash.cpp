#include "cpl/hash.hpp"

namespace cpl {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return hash_combine(mix64(seed), fnv1a64(label));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return hash_combine(mix64(seed), mix64(index ^ 0x5851f42d4c957f2dULL));
}

}  // namespace cpl
