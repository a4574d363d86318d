#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fedopt/kernels/kernels.hpp"
#include "fedopt/numerics/rng.hpp"

using namespace fedopt;
using kernels::KernelTable;

namespace {

std::vector<double> random_values(std::uint64_t stream, std::size_t n) {
  RngStream rng(99, stream);
  std::vector<double> v(n);
  for (auto& x : v) x = 10.0 * rng.normal();
  if (n > 3) {
    v[1] = 0.0;
    v[2] = -0.0;
  }
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::signbit(a[i]) != std::signbit(b[i])) return false;
    if (!(a[i] == b[i]) && !(std::isnan(a[i]) && std::isnan(b[i]))) return false;
  }
  return true;
}

bool same_bits(double a, double b) { return same_bits(std::vector<double>{a}, std::vector<double>{b}); }

}  // namespace

TEST_CASE("simd kernels match the scalar reference bit for bit") {
  const KernelTable* simd = kernels::avx2_table();
  if (simd == nullptr) {
    MESSAGE("no SIMD kernel table on this machine; equivalence vacuous");
    return;
  }
  const KernelTable& ref = kernels::scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 31u, 64u, 257u, 1000u}) {
    CAPTURE(n);
    const auto x = random_values(1, n);
    const auto y = random_values(2, n);
    CHECK(same_bits(ref.dot(x.data(), y.data(), n), simd->dot(x.data(), y.data(), n)));
    CHECK(same_bits(ref.sum_squares(x.data(), n), simd->sum_squares(x.data(), n)));
    CHECK(same_bits(ref.sum_abs(x.data(), n), simd->sum_abs(x.data(), n)));

    auto a = y;
    auto b = y;
    ref.axpy(0.37, x.data(), a.data(), n);
    simd->axpy(0.37, x.data(), b.data(), n);
    CHECK(same_bits(a, b));

    std::vector<double> o1(n), o2(n);
    ref.lincomb(1.5, x.data(), -0.25, y.data(), o1.data(), n);
    simd->lincomb(1.5, x.data(), -0.25, y.data(), o2.data(), n);
    CHECK(same_bits(o1, o2));
    ref.add(x.data(), y.data(), o1.data(), n);
    simd->add(x.data(), y.data(), o2.data(), n);
    CHECK(same_bits(o1, o2));
    ref.sub(x.data(), y.data(), o1.data(), n);
    simd->sub(x.data(), y.data(), o2.data(), n);
    CHECK(same_bits(o1, o2));
    ref.scale(-3.1, x.data(), o1.data(), n);
    simd->scale(-3.1, x.data(), o2.data(), n);
    CHECK(same_bits(o1, o2));
    for (double tau : {0.0, 0.5, 7.0, 1e9}) {
      ref.soft_threshold(x.data(), tau, o1.data(), n);
      simd->soft_threshold(x.data(), tau, o2.data(), n);
      CHECK(same_bits(o1, o2));
    }
    a = y;
    b = y;
    ref.mean_update(a.data(), x.data(), 3.0, n);
    simd->mean_update(b.data(), x.data(), 3.0, n);
    CHECK(same_bits(a, b));

    std::vector<std::uint64_t> w1(2 * n + 2), w2(2 * n + 2);
    ref.philox_blocks(0xDEADBEEFCAFEull, 0x8000000000000003ull, 0xFFFFFFFEull, w1.data(), n);
    simd->philox_blocks(0xDEADBEEFCAFEull, 0x8000000000000003ull, 0xFFFFFFFEull, w2.data(), n);
    CHECK(w1 == w2);
  }
}

TEST_CASE("soft threshold kernel handles special values") {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> y{inf, -inf, 0.0, -0.0, 1.0};
  std::vector<double> out(5);
  kernels::active().soft_threshold(y.data(), 0.5, out.data(), 5);
  CHECK(out[0] == inf);
  CHECK(out[1] == -inf);
  CHECK(out[2] == 0.0);
  CHECK(out[4] == 0.5);
}

TEST_CASE("dot uses the canonical four-lane order") {
  std::vector<double> x{1e16, 1.0, -1e16, 1.0, 1.0};
  std::vector<double> ones(5, 1.0);
  // lanes: (1e16 + 1) + (1 - 1e16 ... ) evaluated as ((1e16)+(1)) + ((-1e16)+(1)) then + 1
  const double expect = ((1e16 + 1.0) + (-1e16 + 1.0)) + 1.0;
  CHECK(kernels::active().dot(x.data(), ones.data(), 5) == expect);
}

TEST_CASE("philox matches published known-answer vectors") {
  std::uint64_t w[2];
  kernels::scalar_table().philox_blocks(0, 0, 0, w, 1);
  CHECK(w[0] == 0xe169c58d6627e8d5ull);
  CHECK(w[1] == 0x9b00dbd8bc57ac4cull);
  kernels::scalar_table().philox_blocks(~0ull, ~0ull, ~0ull, w, 1);
  CHECK(w[0] == 0x41c83b0e408f276dull);
  CHECK(w[1] == 0x6d5451fda20bc7c6ull);
}
