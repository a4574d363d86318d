#include <cmath>

#include "fedopt/kernels/kernels.hpp"
#include "philox.hpp"

namespace fedopt::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int j = 0; j < 4; ++j) s[j] = s[j] + x[i + j] * y[i + j];
  }
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) total = total + x[i] * y[i];
  return total;
}

double sum_squares_scalar(const double* x, std::size_t n) { return dot_scalar(x, x, n); }

double sum_abs_scalar(const double* x, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int j = 0; j < 4; ++j) s[j] = s[j] + std::fabs(x[i + j]);
  }
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) total = total + std::fabs(x[i]);
  return total;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void lincomb_scalar(double a, const double* x, double b, const double* y, double* out,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void add_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void scale_scalar(double a, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void mean_update_scalar(double* m, const double* v, double count, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) m[i] = m[i] + (v[i] - m[i]) / count;
}

void soft_threshold_scalar(const double* y, double tau, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::fabs(y[i]) - tau;
    out[i] = mag > 0.0 ? std::copysign(mag, y[i]) : 0.0;
  }
}

void philox_blocks_scalar(std::uint64_t seed, std::uint64_t stream, std::uint64_t ctr0,
                          std::uint64_t* out, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    detail::philox_block(seed, stream, ctr0 + j, out[2 * j], out[2 * j + 1]);
  }
}

const KernelTable kScalar{
    "scalar",         dot_scalar,       sum_squares_scalar, sum_abs_scalar,
    axpy_scalar,      lincomb_scalar,   add_scalar,         sub_scalar,
    scale_scalar,     mean_update_scalar, soft_threshold_scalar, philox_blocks_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace fedopt::kernels
