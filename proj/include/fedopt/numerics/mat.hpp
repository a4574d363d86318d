#pragma once

#include <cstddef>
#include <vector>

#include "fedopt/numerics/vec.hpp"

namespace fedopt {

/// Dense row-major matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);
  static Mat diag(const Vec& d);
  /// Reinterpret a vector of length rows*cols as a row-major matrix.
  static Mat from_vec(const Vec& v, std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  const double* row(std::size_t i) const noexcept { return data_.data() + i * cols_; }
  double* row(std::size_t i) noexcept { return data_.data() + i * cols_; }
  const std::vector<double>& values() const noexcept { return data_; }

  Vec to_vec() const { return Vec(data_); }
  bool all_finite() const noexcept;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat transpose(const Mat& a);
Mat matmul(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, const Vec& x);
/// aᵀx
Vec matvec_t(const Mat& a, const Vec& x);
Mat operator-(const Mat& a, const Mat& b);
double frobenius(const Mat& a);
double max_abs(const Mat& a);
bool is_symmetric(const Mat& a, double tol = 0.0);

}  // namespace fedopt
