#include "fedopt/numerics/vec.hpp"

#include <cmath>
#include <stdexcept>

#include "fedopt/kernels/kernels.hpp"

namespace fedopt {

namespace {

void require_same_dim(const Vec& x, const Vec& y, const char* op) {
  if (x.size() != y.size()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  }
}

}  // namespace

bool Vec::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double dot(const Vec& x, const Vec& y) {
  require_same_dim(x, y, "dot");
  return kernels::active().dot(x.data(), y.data(), x.size());
}

double norm2(const Vec& x) { return std::sqrt(kernels::active().sum_squares(x.data(), x.size())); }

double norm1(const Vec& x) { return kernels::active().sum_abs(x.data(), x.size()); }

double norm_inf(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

void axpy(double a, const Vec& x, Vec& y) {
  require_same_dim(x, y, "axpy");
  kernels::active().axpy(a, x.data(), y.data(), x.size());
}

Vec lincomb(double a, const Vec& x, double b, const Vec& y) {
  require_same_dim(x, y, "lincomb");
  Vec out(x.size());
  kernels::active().lincomb(a, x.data(), b, y.data(), out.data(), x.size());
  return out;
}

Vec operator+(const Vec& x, const Vec& y) {
  require_same_dim(x, y, "add");
  Vec out(x.size());
  kernels::active().add(x.data(), y.data(), out.data(), x.size());
  return out;
}

Vec operator-(const Vec& x, const Vec& y) {
  require_same_dim(x, y, "sub");
  Vec out(x.size());
  kernels::active().sub(x.data(), y.data(), out.data(), x.size());
  return out;
}

Vec operator*(double a, const Vec& x) {
  Vec out(x.size());
  kernels::active().scale(a, x.data(), out.data(), x.size());
  return out;
}

void RunningMean::add(const Vec& v) {
  require_same_dim(mean_, v, "RunningMean::add");
  if (++count_ == 1) {
    mean_ = v;
    return;
  }
  kernels::active().mean_update(mean_.data(), v.data(), static_cast<double>(count_), v.size());
}

}  // namespace fedopt
