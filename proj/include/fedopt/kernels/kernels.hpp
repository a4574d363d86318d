#pragma once

// Data-parallel inner loops.
//
// Every kernel has a scalar reference implementation and (on x86-64) an AVX2
// implementation. The two are required to agree bit-for-bit: no fused
// multiply-add, and reductions follow one canonical order (four interleaved
// lane sums, combined as (s0 + s1) + (s2 + s3), then the tail in index order).
// The table is picked once at first use; FEDOPT_KERNELS=scalar forces the
// reference path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace fedopt::kernels {

struct KernelTable {
  std::string_view name;

  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  double (*sum_abs)(const double* x, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out[i] = a * x[i] + b * y[i]
  void (*lincomb)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
  // out[i] = x[i] + y[i]
  void (*add)(const double* x, const double* y, double* out, std::size_t n);
  // out[i] = x[i] - y[i]
  void (*sub)(const double* x, const double* y, double* out, std::size_t n);
  // out[i] = a * x[i]
  void (*scale)(double a, const double* x, double* out, std::size_t n);
  // m[i] = m[i] + (v[i] - m[i]) / count
  void (*mean_update)(double* m, const double* v, double count, std::size_t n);
  // out[i] = sign(y[i]) * max(|y[i]| - tau, 0)
  void (*soft_threshold)(const double* y, double tau, double* out, std::size_t n);
  // Philox4x32-10 blocks for counters (ctr0 + j, stream) under key `seed`,
  // j in [0, n). Block j yields words out[2j], out[2j+1].
  void (*philox_blocks)(std::uint64_t seed, std::uint64_t stream, std::uint64_t ctr0,
                        std::uint64_t* out, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();
/// The table used by the library.
const KernelTable& active();

}  // namespace fedopt::kernels
