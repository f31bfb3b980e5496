#include <cstdlib>
#include <string>

#include "cpl/error.hpp"
#include "cpl/simd/kernels.hpp"

namespace cpl::simd {

namespace {

constexpr KernelTable kScalar{Isa::Scalar,      scalar::dot,         scalar::gather_dot, scalar::axpy,
                              scalar::scale,    scalar::sum_squares, scalar::adam};

#if defined(CPL_SIMD_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2,     avx2::dot,         avx2::gather_dot, avx2::axpy,
                            avx2::scale,   avx2::sum_squares, avx2::adam};
#endif

const KernelTable& select() {
  const char* forced = std::getenv("CPL_SIMD");
  if (forced != nullptr) {
    const std::string f(forced);
    if (f == "scalar") return kScalar;
    if (f == "avx2") return kernels_for(Isa::Avx2);
  }
  if (isa_supported(Isa::Avx2)) return kernels_for(Isa::Avx2);
  return kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(CPL_SIMD_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw ConfigError("SIMD ISA not supported on this CPU: " + std::string(isa_name(isa)));
  }
#if defined(CPL_SIMD_HAVE_AVX2)
  if (isa == Isa::Avx2) return kAvx2;
#endif
  return kScalar;
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace cpl::simd
