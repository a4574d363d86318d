#include "fedopt/composite/composite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "fedopt/kernels/kernels.hpp"
#include "fedopt/numerics/linalg.hpp"

namespace fedopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonneg(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

void require_pos(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite and > 0");
}

std::size_t penalized_len(const Regularizer& reg, const Vec& x) {
  if (reg.unpenalized > x.size()) throw std::invalid_argument("regularizer: unpenalized tail longer than vector");
  return x.size() - reg.unpenalized;
}

Vec head(const Vec& x, std::size_t n) { return Vec(std::vector<double>(x.begin(), x.begin() + static_cast<long>(n))); }

// Applies `f` to the penalized block and copies the tail through.
Vec map_head(const Vec& y, std::size_t n, const std::function<Vec(const Vec&)>& f) {
  const Vec h = f(head(y, n));
  Vec out = y;
  std::copy(h.begin(), h.end(), out.begin());
  return out;
}

}  // namespace

double Geometry::h(const Vec& x) const { return 0.5 * dot(x, x); }

Vec Geometry::grad_h(const Vec& x) const { return x; }

Vec Geometry::grad_h_conj(const Vec& y) const { return y; }

double bregman(const Geometry& geo, const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("bregman: dimension mismatch");
  const Vec d = x - y;
  switch (geo.kind) {
    case GeometryKind::euclidean:
      return 0.5 * dot(d, d);
  }
  return geo.h(x) - geo.h(y) - dot(geo.grad_h(y), d);
}

Regularizer Regularizer::l1(double lambda, std::size_t unpenalized) {
  require_nonneg(lambda, "l1 lambda");
  Regularizer r;
  r.kind = RegKind::l1;
  r.lambda = lambda;
  r.unpenalized = unpenalized;
  return r;
}

Regularizer Regularizer::l2_ball(double radius, std::size_t unpenalized) {
  require_pos(radius, "l2_ball radius");
  Regularizer r;
  r.kind = RegKind::l2_ball;
  r.radius = radius;
  r.unpenalized = unpenalized;
  return r;
}

Regularizer Regularizer::l1_ball(double radius, std::size_t unpenalized) {
  require_pos(radius, "l1_ball radius");
  Regularizer r;
  r.kind = RegKind::l1_ball;
  r.radius = radius;
  r.unpenalized = unpenalized;
  return r;
}

Regularizer Regularizer::nuclear(double lambda, std::size_t rows, std::size_t cols, std::size_t unpenalized) {
  require_nonneg(lambda, "nuclear lambda");
  if (rows == 0 || cols == 0) throw std::invalid_argument("nuclear: rows and cols must be positive");
  Regularizer r;
  r.kind = RegKind::nuclear;
  r.lambda = lambda;
  r.rows = rows;
  r.cols = cols;
  r.unpenalized = unpenalized;
  return r;
}

Regularizer Regularizer::l2_square(double lambda, std::size_t unpenalized) {
  require_nonneg(lambda, "l2_square lambda");
  Regularizer r;
  r.kind = RegKind::l2_square;
  r.lambda = lambda;
  r.unpenalized = unpenalized;
  return r;
}

std::string Regularizer::name() const {
  switch (kind) {
    case RegKind::zero: return "zero";
    case RegKind::l1: return "l1";
    case RegKind::l2_ball: return "l2_ball";
    case RegKind::l1_ball: return "l1_ball";
    case RegKind::nuclear: return "nuclear";
    case RegKind::l2_square: return "l2_square";
  }
  return "unknown";
}

double Regularizer::value(const Vec& x) const {
  const std::size_t n = penalized_len(*this, x);
  const auto& k = kernels::active();
  switch (kind) {
    case RegKind::zero:
      return 0.0;
    case RegKind::l1:
      return lambda * k.sum_abs(x.data(), n);
    case RegKind::l2_ball:
      return std::sqrt(k.sum_squares(x.data(), n)) <= radius * (1.0 + 1e-12) ? 0.0 : kInf;
    case RegKind::l1_ball:
      return k.sum_abs(x.data(), n) <= radius * (1.0 + 1e-12) ? 0.0 : kInf;
    case RegKind::nuclear: {
      if (rows * cols != n) throw std::invalid_argument("nuclear: vector length does not match matrix shape");
      const Mat m = Mat::from_vec(head(x, n), rows, cols);
      if (!m.all_finite()) return std::numeric_limits<double>::quiet_NaN();
      const Svd f = jacobi_svd(m);
      double s = 0.0;
      for (double v : f.s) s += v;
      return lambda * s;
    }
    case RegKind::l2_square:
      return lambda * k.sum_squares(x.data(), n);
  }
  return 0.0;
}

bool Regularizer::feasible(const Vec& x) const { return std::isfinite(value(x)); }

Vec soft_threshold(const Vec& y, double tau) {
  require_nonneg(tau, "soft_threshold tau");
  Vec out(y.size());
  kernels::active().soft_threshold(y.data(), tau, out.data(), y.size());
  return out;
}

Mat svt(const Mat& a, double tau) {
  require_nonneg(tau, "svt tau");
  if (!a.all_finite()) return Mat(a.rows(), a.cols(), std::vector<double>(a.rows() * a.cols(), std::nan("")));
  const Svd f = jacobi_svd(a);
  Vec s(f.s.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::max(f.s[i] - tau, 0.0);
  return svd_compose(f.u, s, f.v);
}

Vec project_l2_ball(const Vec& y, double r) {
  require_pos(r, "l2_ball radius");
  const double n = norm2(y);
  if (n <= r) return y;
  return (r / n) * y;
}

Vec project_l1_ball(const Vec& y, double r) {
  require_pos(r, "l1_ball radius");
  if (norm1(y) <= r) return y;
  std::vector<double> u(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) u[i] = std::fabs(y[i]);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - r) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  Vec out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = std::fabs(y[i]) - theta;
    out[i] = m > 0.0 ? std::copysign(m, y[i]) : 0.0;
  }
  return out;
}

Vec conjugate_map(const Geometry& geo, const Regularizer& reg, double eta, const Vec& y) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("conjugate_map: eta must be finite and >= 0");
  if (geo.kind != GeometryKind::euclidean) throw std::invalid_argument("conjugate_map: unsupported geometry");
  const std::size_t n = penalized_len(reg, y);
  switch (reg.kind) {
    case RegKind::zero:
      return geo.grad_h_conj(y);
    case RegKind::l1:
      if (eta * reg.lambda == 0.0) return y;
      return map_head(y, n, [&](const Vec& v) { return soft_threshold(v, eta * reg.lambda); });
    case RegKind::l2_ball:
      return map_head(y, n, [&](const Vec& v) { return project_l2_ball(v, reg.radius); });
    case RegKind::l1_ball:
      return map_head(y, n, [&](const Vec& v) { return project_l1_ball(v, reg.radius); });
    case RegKind::nuclear:
      if (reg.rows * reg.cols != n) throw std::invalid_argument("nuclear: vector length does not match matrix shape");
      if (eta * reg.lambda == 0.0) return y;
      return map_head(y, n, [&](const Vec& v) {
        return svt(Mat::from_vec(v, reg.rows, reg.cols), eta * reg.lambda).to_vec();
      });
    case RegKind::l2_square: {
      if (eta * reg.lambda == 0.0) return y;
      const double c = 1.0 / (1.0 + 2.0 * eta * reg.lambda);
      return map_head(y, n, [&](const Vec& v) { return c * v; });
    }
  }
  throw std::invalid_argument("conjugate_map: unsupported regularizer");
}

}  // namespace fedopt
