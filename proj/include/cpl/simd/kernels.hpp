#pragma once

// Dense and sparse-gather arithmetic used by the policy, value model and
// optimizers. Every kernel has a scalar reference and an AVX2 variant; the
// variant is chosen once at runtime from CPUID and can be forced with the
// CPL_SIMD environment variable ("scalar" or "avx2").
//
// Elementwise kernels (axpy, scale, adam) produce bit-identical results on
// every ISA. Reductions (dot, gather_dot, sum_squares) reassociate and agree
// with the scalar reference to rounding.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace cpl::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Per-step Adam coefficients with bias correction folded in:
///   m <- b1*m + (1-b1)*g
///   v <- b2*v + (1-b2)*g*g
///   w <- w - step * m / (sqrt(v) + eps)
struct AdamCoeffs {
  double beta1;
  double beta2;
  double step;
  double eps;
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*gather_dot)(const double* w, const std::uint32_t* idx, const double* val, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  void (*adam)(double* w, double* m, double* v, const double* g, std::size_t n, const AdamCoeffs& c);
};

bool isa_supported(Isa isa);

/// Kernel table for a specific ISA. Throws ConfigError if unsupported here.
const KernelTable& kernels_for(Isa isa);

/// Table selected for this process.
const KernelTable& active();

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double gather_dot(const double* w, const std::uint32_t* idx, const double* val, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
void adam(double* w, double* m, double* v, const double* g, std::size_t n, const AdamCoeffs& c);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CPL_SIMD_HAVE_AVX2 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double gather_dot(const double* w, const std::uint32_t* idx, const double* val, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
void adam(double* w, double* m, double* v, const double* g, std::size_t n, const AdamCoeffs& c);
}  // namespace avx2
#endif

// Span front-ends over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double gather_dot(std::span<const double> w, std::span<const std::uint32_t> idx,
                         std::span<const double> val) {
  return active().gather_dot(w.data(), idx.data(), val.data(), idx.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}

inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

inline double sum_squares(std::span<const double> x) { return active().sum_squares(x.data(), x.size()); }

inline void adam(std::span<double> w, std::span<double> m, std::span<double> v, std::span<const double> g,
                 const AdamCoeffs& c) {
  active().adam(w.data(), m.data(), v.data(), g.data(), w.size(), c);
}

}  // namespace cpl::simd
