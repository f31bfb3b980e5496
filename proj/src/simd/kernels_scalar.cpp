#include <cmath>

#include "cpl/simd/kernels.hpp"

namespace cpl::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double gather_dot(const double* w, const std::uint32_t* idx, const double* val, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[idx[i]] * val[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = alpha * x[i];
}

double sum_squares(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void adam(double* w, double* m, double* v, const double* g, std::size_t n, const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    const double mi = c.beta1 * m[i] + one_minus_b1 * gi;
    const double vi = c.beta2 * v[i] + one_minus_b2 * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    w[i] = w[i] - c.step * (mi / (std::sqrt(vi) + c.eps));
  }
}

}  // namespace cpl::simd::scalar
