#include <cmath>
#include <stdexcept>

#include "fedopt/numerics/linalg.hpp"
#include "instances.hpp"

namespace fedopt {
namespace detail {

QuadraticProblem::QuadraticProblem(Mat a, Vec c, std::vector<Vec> shifts, double sigma, std::size_t num_clients)
    : a_(std::move(a)), c_(std::move(c)), shifts_(std::move(shifts)), sigma_(sigma), m_(num_clients) {
  const std::size_t d = c_.size();
  if (d == 0) throw std::invalid_argument("make_quadratic: empty problem");
  if (a_.rows() != d || a_.cols() != d) throw std::invalid_argument("make_quadratic: A must be d x d with d = len(c)");
  if (!a_.all_finite() || !c_.all_finite()) throw std::invalid_argument("make_quadratic: non-finite input");
  if (!is_symmetric(a_, 1e-12 * (1.0 + max_abs(a_)))) throw std::invalid_argument("make_quadratic: A is not symmetric");
  if (!(sigma_ >= 0.0)) throw std::invalid_argument("make_quadratic: sigma must be >= 0");
  if (!shifts_.empty()) {
    m_ = shifts_.size();
    RunningMean mean(d);
    double scale = 0.0;
    for (const Vec& s : shifts_) {
      if (s.size() != d) throw std::invalid_argument("make_quadratic: shift dimension mismatch");
      mean.add(s);
      scale = std::max(scale, norm_inf(s));
    }
    if (norm_inf(mean.value()) > 1e-12 * (1.0 + scale)) {
      throw std::invalid_argument("make_quadratic: per-client shifts must average to zero");
    }
  }
  if (m_ == 0) throw std::invalid_argument("make_quadratic: need at least one client");

  // A is symmetric PSD, so its singular values are its eigenvalues.
  const Svd f = jacobi_svd(a_);
  constants_.L = f.s[0];
  constants_.mu = f.s[d - 1] > 1e-14 * f.s[0] ? f.s[d - 1] : 0.0;
  constants_.sigma = sigma_;
  constants_.noise_var = sigma_ * sigma_;
  constants_.Q = 0.0;
  double zeta = 0.0;
  for (const Vec& s : shifts_) zeta = std::max(zeta, norm2(s));
  constants_.zeta = zeta;
  constants_.zeta_star = zeta;
  if (constants_.mu > 0.0) {
    Vec x = solve_spd(a_, -1.0 * c_);
    const double v = value(x);
    optimum_ = Optimum{std::move(x), v};
  }
}

double QuadraticProblem::value(const Vec& x) const { return 0.5 * dot(x, matvec(a_, x)) + dot(c_, x); }

Vec QuadraticProblem::full_grad(const Vec& x) const { return matvec(a_, x) + c_; }

Vec QuadraticProblem::client_full_grad(std::size_t m, const Vec& x) const {
  if (m >= m_) throw std::out_of_range("quadratic: client index out of range");
  Vec g = full_grad(x);
  if (!shifts_.empty()) g = g + shifts_[m];
  return g;
}

Vec QuadraticProblem::client_grad(std::size_t m, const Vec& x, RngStream& rng) const {
  Vec g = client_full_grad(m, x);
  if (sigma_ > 0.0) axpy(sigma_ / std::sqrt(static_cast<double>(dim())), gaussian(rng, dim()), g);
  return g;
}

std::optional<double> QuadraticProblem::second_derivative(double) const {
  if (dim() != 1) return std::nullopt;
  return a_(0, 0);
}

std::optional<double> QuadraticProblem::third_derivative(double) const {
  if (dim() != 1) return std::nullopt;
  return 0.0;
}

std::map<std::string, double> QuadraticProblem::params() const {
  return {{"dim", static_cast<double>(dim())}, {"sigma", sigma_}, {"clients", static_cast<double>(m_)}};
}

}  // namespace detail

ProblemHandle make_quadratic(const Mat& a, const Vec& c, const std::vector<Vec>& per_client_shift, double sigma,
                             std::size_t num_clients) {
  return std::make_shared<detail::QuadraticProblem>(a, c, per_client_shift, sigma, num_clients);
}

}  // namespace fedopt
