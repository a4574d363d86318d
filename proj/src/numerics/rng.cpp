#include "fedopt/numerics/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "../kernels/philox.hpp"
#include "fedopt/kernels/kernels.hpp"

namespace fedopt {

namespace {

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

double box_muller(std::uint64_t w0, std::uint64_t w1) {
  const double u1 = static_cast<double>((w0 >> 11) + 1) * kTwoPow53Inv;  // (0, 1]
  const double u2 = static_cast<double>(w1 >> 11) * kTwoPow53Inv;        // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::uint64_t RngStream::next_u64() noexcept {
  std::uint64_t w0 = 0;
  std::uint64_t w1 = 0;
  kernels::detail::philox_block(seed_, stream_, counter_++, w0, w1);
  return w0;
}

double RngStream::uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * kTwoPow53Inv; }

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  const unsigned __int128 p = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::uint64_t>(p >> 64);
}

double RngStream::normal() noexcept {
  std::uint64_t w0 = 0;
  std::uint64_t w1 = 0;
  kernels::detail::philox_block(seed_, stream_, counter_++, w0, w1);
  return box_muller(w0, w1);
}

void RngStream::fill_normal(double* out, std::size_t n) {
  constexpr std::size_t kChunk = 256;
  std::uint64_t words[2 * kChunk];
  const auto& k = kernels::active();
  for (std::size_t done = 0; done < n; done += kChunk) {
    const std::size_t m = std::min(kChunk, n - done);
    k.philox_blocks(seed_, stream_, counter_, words, m);
    counter_ += m;
    for (std::size_t j = 0; j < m; ++j) out[done + j] = box_muller(words[2 * j], words[2 * j + 1]);
  }
}

Vec gaussian(RngStream& stream, std::size_t n) {
  if (n == 0) throw std::invalid_argument("gaussian: n must be >= 1");
  Vec v(n);
  stream.fill_normal(v.data(), n);
  return v;
}

double uniform_sym(RngStream& stream, double half_width) {
  if (!(half_width > 0.0)) throw std::invalid_argument("uniform_sym: half_width must be > 0");
  return half_width * (2.0 * stream.uniform01() - 1.0);
}

}  // namespace fedopt
