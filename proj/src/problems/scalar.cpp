// One-dimensional instances: piecewise quadratic, the bias demo, log-cosh.

#include <array>
#include <cmath>
#include <stdexcept>

#include "fedopt/problems/problem.hpp"

namespace fedopt {

namespace {

enum class NoiseKind { gaussian, uniform };

class ScalarProblem : public Problem {
 public:
  std::size_t dim() const override { return 1; }
  std::size_t num_clients() const override { return 1; }

  double value(const Vec& x) const override { return f(x[0]); }
  Vec client_full_grad(std::size_t m, const Vec& x) const override {
    if (m != 0) throw std::out_of_range(kind() + ": client index out of range");
    return Vec{fprime(x[0])};
  }
  Vec full_grad(const Vec& x) const override { return Vec{fprime(x[0])}; }
  Vec client_grad(std::size_t m, const Vec& x, RngStream& rng) const override {
    if (m != 0) throw std::out_of_range(kind() + ": client index out of range");
    return Vec{scalar_grad(x[0], rng)};
  }
  double scalar_grad(double x, RngStream& rng) const override {
    const double g = fprime(x);
    if (noise_scale_ == 0.0) return g;
    return g + (noise_ == NoiseKind::gaussian ? noise_scale_ * rng.normal() : uniform_sym(rng, noise_scale_));
  }
  double scalar_full_grad(double x) const override { return fprime(x); }
  std::optional<Optimum> optimum() const override { return Optimum{Vec{0.0}, 0.0}; }

 protected:
  virtual double f(double x) const = 0;
  virtual double fprime(double x) const = 0;

  NoiseKind noise_ = NoiseKind::gaussian;
  double noise_scale_ = 0.0;
};

class PiecewiseQuadratic final : public ScalarProblem {
 public:
  PiecewiseQuadratic(double l, double sigma) : l_(l), sigma_(sigma) {
    if (!(l > 0.0)) throw std::invalid_argument("make_piecewise_quadratic: l must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("make_piecewise_quadratic: sigma must be >= 0");
    noise_scale_ = sigma;
    constants_.L = l / 12.0;
    constants_.mu = l / 24.0;
    constants_.sigma = sigma;
    constants_.noise_var = sigma * sigma;
  }
  std::string kind() const override { return "piecewise_quadratic"; }
  std::optional<double> second_derivative(double x) const override { return x >= 0.0 ? l_ / 12.0 : l_ / 24.0; }
  std::optional<double> third_derivative(double x) const override {
    if (x == 0.0) return std::nullopt;
    return 0.0;
  }
  std::map<std::string, double> params() const override { return {{"l", l_}, {"sigma", sigma_}}; }

 private:
  double f(double x) const override { return (l_ / 24.0) * psi_piecewise(x); }
  double fprime(double x) const override { return (l_ / 24.0) * (x >= 0.0 ? 2.0 * x : x); }
  double l_;
  double sigma_;
};

class BiasDemo final : public ScalarProblem {
 public:
  BiasDemo() {
    noise_scale_ = 0.1;
    constants_.L = 2.0;
    constants_.mu = 0.2;
    constants_.sigma = 0.1;
    constants_.noise_var = 0.01;
  }
  std::string kind() const override { return "bias_demo"; }
  std::optional<double> second_derivative(double x) const override { return x >= 0.0 ? 2.0 : 0.2; }
  std::optional<double> third_derivative(double x) const override {
    if (x == 0.0) return std::nullopt;
    return 0.0;
  }

 private:
  double f(double x) const override { return x >= 0.0 ? x * x : 0.1 * x * x; }
  double fprime(double x) const override { return x >= 0.0 ? 2.0 * x : 0.2 * x; }
};

// log cosh t without overflow.
double log_cosh(double t) {
  const double a = std::fabs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

class LogCosh final : public ScalarProblem {
 public:
  LogCosh(double l, double q, double sigma) : l_(l), q_(q), sigma_(sigma) {
    if (!(l > 0.0)) throw std::invalid_argument("make_logcosh_instance: l must be > 0");
    if (!(q > 0.0)) throw std::invalid_argument("make_logcosh_instance: q must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("make_logcosh_instance: sigma must be >= 0");
    noise_ = NoiseKind::uniform;
    noise_scale_ = sigma;
    constants_.L = l;
    constants_.mu = l / 2.0;
    constants_.Q = q;
    constants_.sigma = sigma;
    constants_.noise_var = sigma * sigma / 3.0;
  }
  std::string kind() const override { return "logcosh"; }
  std::optional<double> second_derivative(double x) const override {
    return 0.75 * l_ + 0.25 * l_ * std::tanh(4.0 * q_ * x / l_);
  }
  std::optional<double> third_derivative(double x) const override {
    const double c = std::cosh(4.0 * q_ * x / l_);
    return q_ / (c * c);
  }
  std::map<std::string, double> params() const override { return {{"l", l_}, {"q", q_}, {"sigma", sigma_}}; }

 private:
  double f(double x) const override {
    return 0.375 * l_ * x * x + (l_ * l_ * l_ / (64.0 * q_ * q_)) * phi_logcosh(4.0 * q_ * x / l_);
  }
  double fprime(double x) const override {
    return 0.75 * l_ * x + (l_ * l_ / (16.0 * q_)) * log_cosh(4.0 * q_ * x / l_);
  }
  double l_;
  double q_;
  double sigma_;
};

}  // namespace

double psi_piecewise(double x) { return x >= 0.0 ? x * x : 0.5 * x * x; }

double phi_logcosh(double u) {
  // Composite 8-point Gauss-Legendre on unit-length panels; φ is odd.
  static constexpr std::array<double, 4> nodes = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                                  0.9602898564975363};
  static constexpr std::array<double, 4> weights = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                    0.1012285362903763};
  const double a = std::fabs(u);
  if (a == 0.0) return 0.0;
  const int panels = static_cast<int>(std::ceil(a));
  const double h = a / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      s += weights[i] * (log_cosh(mid - 0.5 * h * nodes[i]) + log_cosh(mid + 0.5 * h * nodes[i]));
    }
    total += 0.5 * h * s;
  }
  return std::copysign(total, u);
}

ProblemHandle make_piecewise_quadratic(double l, double sigma) {
  return std::make_shared<PiecewiseQuadratic>(l, sigma);
}

ProblemHandle make_bias_demo() { return std::make_shared<BiasDemo>(); }

ProblemHandle make_logcosh_instance(double l, double q, double sigma) {
  return std::make_shared<LogCosh>(l, q, sigma);
}

}  // namespace fedopt
