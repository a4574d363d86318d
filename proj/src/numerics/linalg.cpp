#include "fedopt/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fedopt/kernels/kernels.hpp"

namespace fedopt {

namespace {

constexpr int kMaxSweeps = 100;

// One-sided Jacobi on the columns of w (m x n, m >= n). Columns are stored
// contiguously (w is passed transposed: n rows of length m).
Svd jacobi_tall(const Mat& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const auto& k = kernels::active();
  Mat w = transpose(a);       // row j = column j of a
  Mat vt = Mat::identity(n);  // row j = column j of V
  const double fro2 = k.sum_squares(a.values().data(), a.values().size());
  const double floor = 1e-300 + 1e-28 * fro2;

  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = k.sum_squares(w.row(p), m);
        const double beta = k.sum_squares(w.row(q), m);
        const double gamma = k.dot(w.row(p), w.row(q), m);
        if (std::fabs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || std::fabs(gamma) <= floor) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        double* wp = w.row(p);
        double* wq = w.row(q);
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = wp[i];
          const double xq = wq[i];
          wp[i] = c * xp - s * xq;
          wq[i] = s * xp + c * xq;
        }
        double* vp = vt.row(p);
        double* vq = vt.row(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double xp = vp[i];
          const double xq = vq[i];
          vp[i] = c * xp - s * xq;
          vq[i] = s * xp + c * xq;
        }
      }
    }
  }
  if (!converged) {
    throw ConvergenceError("jacobi_svd: no convergence after 100 sweeps (ill-conditioned input)");
  }

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = std::sqrt(k.sum_squares(w.row(j), m));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return sv[i] > sv[j]; });

  Svd out{Mat(m, n), Vec(n), Mat(n, n)};
  const double tiny = 1e-300 + 1e-15 * (sv.empty() ? 0.0 : sv[order[0]]);
  std::vector<bool> filled(n, false);
  for (std::size_t jj = 0; jj < n; ++jj) {
    const std::size_t j = order[jj];
    out.s[jj] = sv[j];
    for (std::size_t i = 0; i < n; ++i) out.v(i, jj) = vt(j, i);
    if (sv[j] > tiny) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, jj) = w(j, i) / sv[j];
      filled[jj] = true;
    }
  }
  // Complete U for (numerically) zero singular values with Gram-Schmidt over
  // the standard basis.
  std::size_t basis = 0;
  for (std::size_t jj = 0; jj < n; ++jj) {
    if (filled[jj]) continue;
    out.s[jj] = std::max(out.s[jj], 0.0);
    for (; basis < m; ++basis) {
      std::vector<double> e(m, 0.0);
      e[basis] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < n; ++c) {
          if (!filled[c]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += out.u(i, c) * e[i];
          for (std::size_t i = 0; i < m; ++i) e[i] -= proj * out.u(i, c);
        }
      }
      double nrm = 0.0;
      for (double x : e) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (std::size_t i = 0; i < m; ++i) out.u(i, jj) = e[i] / nrm;
        filled[jj] = true;
        ++basis;
        break;
      }
    }
  }
  return out;
}

}  // namespace

Svd jacobi_svd(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("jacobi_svd: empty matrix");
  if (!a.all_finite()) throw std::invalid_argument("jacobi_svd: non-finite entry");
  // exact power-of-two rescaling
  const double peak = max_abs(a);
  const double scale = peak > 0.0 ? std::ldexp(1.0, std::ilogb(peak)) : 1.0;
  Mat b = a;
  if (scale != 1.0) {
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) /= scale;
    }
  }
  Svd out;
  if (b.rows() >= b.cols()) {
    out = jacobi_tall(b);
  } else {
    Svd t = jacobi_tall(transpose(b));
    out = Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
  }
  for (std::size_t i = 0; i < out.s.size(); ++i) out.s[i] *= scale;
  return out;
}

Mat svd_compose(const Mat& u, const Vec& s, const Mat& v) {
  Mat out(u.rows(), v.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t j = 0; j < v.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < s.size(); ++c) acc += u(i, c) * s[c] * v(j, c);
      out(i, j) = acc;
    }
  }
  return out;
}

Mat cholesky(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: matrix not square");
  const std::size_t n = a.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t c = 0; c < j; ++c) d -= l(j, c) * l(j, c);
    if (!(d > 0.0)) throw std::domain_error("cholesky: matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t c = 0; c < j; ++c) s -= l(i, c) * l(j, c);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Vec solve_spd(const Mat& a, const Vec& b) {
  if (a.rows() != b.size()) throw std::invalid_argument("solve_spd: dimension mismatch");
  const Mat l = cholesky(a);
  const std::size_t n = b.size();
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t c = 0; c < i; ++c) s -= l(i, c) * y[c];
    y[i] = s / l(i, i);
  }
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t c = ii + 1; c < n; ++c) s -= l(c, ii) * x[c];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

double max_eigenvalue_psd(const Mat& a, int iters) {
  const std::size_t n = a.rows();
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    const double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    v = (1.0 / nv) * v;
    Vec av = matvec(a, v);
    lambda = dot(v, av);
    v = std::move(av);
  }
  return lambda;
}

}  // namespace fedopt
