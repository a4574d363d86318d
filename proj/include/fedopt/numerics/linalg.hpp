#pragma once

#include <stdexcept>

#include "fedopt/numerics/mat.hpp"
#include "fedopt/numerics/vec.hpp"

namespace fedopt {

/// Thrown when an iterative decomposition hits its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Svd {
  Mat u;  // rows x k, orthonormal columns
  Vec s;  // k = min(rows, cols), descending, nonnegative
  Mat v;  // cols x k, orthonormal columns
};

/// Thin SVD by one-sided Jacobi rotations (at most 100 sweeps).
Svd jacobi_svd(const Mat& a);

/// U diag(s) Vᵀ
Mat svd_compose(const Mat& u, const Vec& s, const Mat& v);

/// Lower-triangular L with a = L Lᵀ. Throws std::domain_error if a is not
/// numerically positive definite.
Mat cholesky(const Mat& a);

/// Solves a x = b for symmetric positive definite a.
Vec solve_spd(const Mat& a, const Vec& b);

/// Largest eigenvalue of a symmetric PSD matrix (power iteration).
double max_eigenvalue_psd(const Mat& a, int iters = 500);

}  // namespace fedopt
