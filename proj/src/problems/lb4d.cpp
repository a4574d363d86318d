#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedopt/problems/problem.hpp"

namespace fedopt {

namespace {

class Lb4d final : public Problem {
 public:
  Lb4d(double l, double sigma, double mu, double zeta_star, std::size_t m)
      : l_(l), sigma_(sigma), mu_(mu), zeta_star_(zeta_star), m_(m) {
    if (m == 0 || m % 2 != 0) throw std::invalid_argument("make_lb4d: number of clients must be even");
    if (!(l > 0.0)) throw std::invalid_argument("make_lb4d: l must be > 0");
    if (!(mu > 0.0)) throw std::invalid_argument("make_lb4d: mu must be > 0");
    if (!(sigma >= 0.0) || !(zeta_star >= 0.0)) throw std::invalid_argument("make_lb4d: sigma, zeta_star must be >= 0");
    constants_.L = std::max({l / 12.0, mu, l, l / 4.0});
    constants_.mu = std::min({l / 24.0, mu, l, 3.0 * l / 16.0});
    constants_.sigma = sigma;
    constants_.noise_var = sigma * sigma;
    constants_.zeta_star = zeta_star;
  }

  std::string kind() const override { return "lb4d"; }
  std::size_t dim() const override { return 4; }
  std::size_t num_clients() const override { return m_; }
  bool homogeneous() const override { return false; }

  double value(const Vec& x) const override {
    return (l_ / 24.0) * psi_piecewise(x[0]) + 0.5 * mu_ * x[1] * x[1] + 0.5 * l_ * x[2] * x[2] +
           (3.0 / 32.0) * l_ * x[3] * x[3];
  }

  Vec client_full_grad(std::size_t m, const Vec& x) const override {
    if (m >= m_) throw std::out_of_range("lb4d: client index out of range");
    Vec g = common(x);
    g[3] = m % 2 == 0 ? 0.25 * l_ * x[3] - zeta_star_ : 0.125 * l_ * x[3] + zeta_star_;
    return g;
  }

  Vec client_grad(std::size_t m, const Vec& x, RngStream& rng) const override {
    Vec g = client_full_grad(m, x);
    if (sigma_ > 0.0) g[0] = g[0] + sigma_ * rng.normal();
    return g;
  }

  Vec full_grad(const Vec& x) const override {
    Vec g = common(x);
    g[3] = (3.0 / 16.0) * l_ * x[3];
    return g;
  }

  std::optional<Optimum> optimum() const override { return Optimum{Vec(4), 0.0}; }

  std::map<std::string, double> params() const override {
    return {{"l", l_}, {"sigma", sigma_}, {"mu", mu_}, {"zeta_star", zeta_star_}, {"clients", static_cast<double>(m_)}};
  }

 private:
  Vec common(const Vec& x) const {
    if (x.size() != 4) throw std::invalid_argument("lb4d: expected a 4-vector");
    return Vec{(l_ / 24.0) * (x[0] >= 0.0 ? 2.0 * x[0] : x[0]), mu_ * x[1], l_ * x[2], 0.0};
  }

  double l_, sigma_, mu_, zeta_star_;
  std::size_t m_;
};

}  // namespace

ProblemHandle make_lb4d(double l, double sigma, double mu, double zeta_star, std::size_t m) {
  return std::make_shared<Lb4d>(l, sigma, mu, zeta_star, m);
}

double lb4d_mu(double l, double sigma, double zeta_star, double b, std::size_t k, std::size_t r) {
  if (!(l > 0.0) || !(b > 0.0) || k == 0 || r == 0) throw std::invalid_argument("lb4d_mu: invalid arguments");
  const double kd = static_cast<double>(k);
  const double rd = static_cast<double>(r);
  const double lb2 = l * b * b;
  const double noise = std::min({sigma * b / std::sqrt(kd * rd),
                                 std::cbrt(l) * std::pow(sigma, 2.0 / 3.0) * std::pow(b, 4.0 / 3.0) /
                                     (std::cbrt(kd) * std::pow(rd, 2.0 / 3.0)),
                                 lb2});
  const double hetero = std::min({zeta_star * zeta_star / l,
                                  std::cbrt(l) * std::pow(zeta_star, 2.0 / 3.0) * std::pow(b, 4.0 / 3.0) /
                                      std::pow(rd, 2.0 / 3.0),
                                  lb2});
  return std::max({noise, hetero, lb2 / (kd * rd)}) / (2.0 * b * b);
}

}  // namespace fedopt
