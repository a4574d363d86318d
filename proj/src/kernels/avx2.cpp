// AVX2 kernels. This translation unit is compiled with -mavx2 (and without
// -mfma) so every lane performs exactly the scalar reference's operations.

#include <immintrin.h>

#include <cmath>

#include "fedopt/kernels/kernels.hpp"
#include "philox.hpp"

namespace fedopt::kernels {
namespace {

double reduce_lanes(__m256d acc) {
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double total = reduce_lanes(acc);
  for (; i < n; ++i) total = total + x[i] * y[i];
  return total;
}

double sum_squares_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

double sum_abs_avx2(const double* x, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, _mm256_loadu_pd(x + i)));
  }
  double total = reduce_lanes(acc);
  for (; i < n; ++i) total = total + std::fabs(x[i]);
  return total;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void lincomb_avx2(double a, const double* x, double b, const double* y, double* out,
                  std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + i)),
                                    _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void add_avx2(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_avx2(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void scale_avx2(double a, const double* x, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = a * x[i];
}

void mean_update_avx2(double* m, const double* v, double count, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(count);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mi = _mm256_loadu_pd(m + i);
    const __m256d d = _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(v + i), mi), vc);
    _mm256_storeu_pd(m + i, _mm256_add_pd(mi, d));
  }
  for (; i < n; ++i) m[i] = m[i] + (v[i] - m[i]) / count;
}

void soft_threshold_avx2(const double* y, double tau, double* out, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yi = _mm256_loadu_pd(y + i);
    const __m256d mag = _mm256_sub_pd(_mm256_andnot_pd(sign, yi), vt);
    const __m256d keep = _mm256_cmp_pd(mag, zero, _CMP_GT_OQ);
    const __m256d signed_mag = _mm256_or_pd(mag, _mm256_and_pd(sign, yi));
    _mm256_storeu_pd(out + i, _mm256_and_pd(keep, signed_mag));
  }
  for (; i < n; ++i) {
    const double mag = std::fabs(y[i]) - tau;
    out[i] = mag > 0.0 ? std::copysign(mag, y[i]) : 0.0;
  }
}

// Four Philox blocks at once; lane j holds one 32-bit word of block j in its
// low half.
void philox_blocks_avx2(std::uint64_t seed, std::uint64_t stream, std::uint64_t ctr0,
                        std::uint64_t* out, std::size_t n) {
  const __m256i lo_mask = _mm256_set1_epi64x(0xFFFFFFFFLL);
  const __m256i m0 = _mm256_set1_epi64x(detail::kPhiloxM0);
  const __m256i m1 = _mm256_set1_epi64x(detail::kPhiloxM1);
  const __m256i s_lo = _mm256_set1_epi64x(static_cast<std::uint32_t>(stream));
  const __m256i s_hi = _mm256_set1_epi64x(static_cast<std::uint32_t>(stream >> 32));
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const std::uint64_t c = ctr0 + j;
    const __m256i ctr = _mm256_set_epi64x(static_cast<long long>(c + 3), static_cast<long long>(c + 2),
                                          static_cast<long long>(c + 1), static_cast<long long>(c));
    __m256i c0 = _mm256_and_si256(ctr, lo_mask);
    __m256i c1 = _mm256_srli_epi64(ctr, 32);
    __m256i c2 = s_lo;
    __m256i c3 = s_hi;
    auto k0 = static_cast<std::uint32_t>(seed);
    auto k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
      const __m256i p0 = _mm256_mul_epu32(m0, c0);
      const __m256i p1 = _mm256_mul_epu32(m1, c2);
      const __m256i vk0 = _mm256_set1_epi64x(k0);
      const __m256i vk1 = _mm256_set1_epi64x(k1);
      c0 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p1, 32), c1), vk0);
      c1 = _mm256_and_si256(p1, lo_mask);
      c2 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p0, 32), c3), vk1);
      c3 = _mm256_and_si256(p0, lo_mask);
      k0 += detail::kPhiloxW0;
      k1 += detail::kPhiloxW1;
    }
    const __m256i w0 = _mm256_or_si256(_mm256_slli_epi64(c1, 32), c0);
    const __m256i w1 = _mm256_or_si256(_mm256_slli_epi64(c3, 32), c2);
    const __m256i lo = _mm256_unpacklo_epi64(w0, w1);
    const __m256i hi = _mm256_unpackhi_epi64(w0, w1);
    auto* dst = reinterpret_cast<__m256i*>(out + 2 * j);
    _mm256_storeu_si256(dst, _mm256_permute2x128_si256(lo, hi, 0x20));
    _mm256_storeu_si256(dst + 1, _mm256_permute2x128_si256(lo, hi, 0x31));
  }
  for (; j < n; ++j) detail::philox_block(seed, stream, ctr0 + j, out[2 * j], out[2 * j + 1]);
}

const KernelTable kAvx2{
    "avx2",         dot_avx2,       sum_squares_avx2, sum_abs_avx2,
    axpy_avx2,      lincomb_avx2,   add_avx2,         sub_avx2,
    scale_avx2,     mean_update_avx2, soft_threshold_avx2, philox_blocks_avx2,
};

}  // namespace

const KernelTable* avx2_table() {
  if (!__builtin_cpu_supports("avx2")) return nullptr;
  return &kAvx2;
}

}  // namespace fedopt::kernels
