#pragma once

#include <cstddef>
#include <cstdint>

#include "fedopt/numerics/vec.hpp"

namespace fedopt {

/// Counter-based random stream (Philox4x32-10).
///
/// Draw number `counter` of stream `stream_id` under `seed` is a pure function
/// of the triple, so streams can be created, copied and advanced on any thread
/// in any order. Each draw consumes one Philox block.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0) noexcept
      : seed_(seed), stream_(stream_id), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal (Box-Muller, one block per variate).
  double normal() noexcept;
  /// Fills out[0..n) with standard normals; same values as n calls to normal().
  void fill_normal(double* out, std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

/// n i.i.d. standard normals; advances the stream by n.
Vec gaussian(RngStream& stream, std::size_t n);

/// One variate uniform on [-half_width, +half_width].
double uniform_sym(RngStream& stream, double half_width);

}  // namespace fedopt
