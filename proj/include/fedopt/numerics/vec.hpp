#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fedopt {

/// Dense real vector with a fixed dimension.
///
/// Houses iterates, dual states, gradients and pseudo-gradients. The length is
/// fixed at construction; elements are mutable in place. Finiteness is not
/// re-checked on every write (hot loops), callers that accept external data use
/// `all_finite()` at their boundary.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  const std::vector<double>& values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  /// Bitwise-style equality: same length and every element compares equal.
  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  std::vector<double> data_;
};

// Elementwise helpers. All of them route through the active kernel table so the
// scalar and SIMD paths produce identical bits.
double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);
double norm1(const Vec& x);
double norm_inf(const Vec& x);
/// y += a * x
void axpy(double a, const Vec& x, Vec& y);
/// a * x + b * y
Vec lincomb(double a, const Vec& x, double b, const Vec& y);
Vec operator+(const Vec& x, const Vec& y);
Vec operator-(const Vec& x, const Vec& y);
Vec operator*(double a, const Vec& x);

/// Incremental mean m <- m + (v - m) / j in the given order. Exact when all
/// inputs are identical, which keeps homogeneous reductions bit-stable.
class RunningMean {
 public:
  explicit RunningMean(std::size_t dim) : mean_(dim), count_(0) {}
  void add(const Vec& v);
  std::size_t count() const noexcept { return count_; }
  const Vec& value() const noexcept { return mean_; }

 private:
  Vec mean_;
  std::size_t count_;
};

}  // namespace fedopt
