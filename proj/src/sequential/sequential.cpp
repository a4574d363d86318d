#include "fedopt/sequential/sequential.hpp"

#include <cmath>
#include <stdexcept>

namespace fedopt {

namespace {

void require_feasible(const CompositeProblem& cp, const Vec& x0, const char* op) {
  if (x0.size() != cp.smooth->dim()) throw std::invalid_argument(std::string(op) + ": x0 dimension mismatch");
  if (!cp.reg.feasible(x0)) throw std::invalid_argument(std::string(op) + ": x0 is outside dom psi");
}

}  // namespace

Vec ac_middle(const AcState& s, double beta) {
  if (beta == 1.0) return s.x;
  return lincomb(1.0 / beta, s.x, 1.0 - 1.0 / beta, s.x_ag);
}

AcState acsgd_step(const AcState& s, const Vec& g, double alpha, double beta, double gamma, double eta) {
  return acsgd_step(s, ac_middle(s, beta), g, alpha, beta, gamma, eta);
}

AcState acsgd_step(const AcState& s, const Vec& x_md, const Vec& g, double alpha, double /*beta*/, double gamma,
                   double eta) {
  if (!(alpha >= 1.0)) throw std::invalid_argument("acsgd_step: alpha must be >= 1");
  AcState next;
  next.x_ag = x_md;
  axpy(-eta, g, next.x_ag);
  next.x = alpha == 1.0 ? x_md : lincomb(1.0 - 1.0 / alpha, s.x, 1.0 / alpha, x_md);
  axpy(-gamma, g, next.x);
  return next;
}

Trajectory sgd_run(const Problem& p, double eta, std::size_t steps, const Vec& x0, RngStream& rng) {
  if (!(eta >= 0.0)) throw std::invalid_argument("sgd_run: eta must be >= 0");
  Trajectory traj;
  traj.reserve(steps + 1);
  traj.push_back(x0);
  Vec x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    axpy(-eta, p.client_grad(0, x, rng), x);
    traj.push_back(x);
  }
  return traj;
}

Trajectory gd_run(const Problem& p, double eta, std::size_t steps, const Vec& x0) {
  if (!(eta >= 0.0)) throw std::invalid_argument("gd_run: eta must be >= 0");
  Trajectory traj;
  traj.reserve(steps + 1);
  traj.push_back(x0);
  Vec x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    axpy(-eta, p.full_grad(x), x);
    traj.push_back(x);
  }
  return traj;
}

std::vector<AcState> agd_run(const Problem& p, double l, double mu, const Vec& x0, const Vec& x_ag0,
                             std::size_t steps) {
  if (!(mu > 0.0)) throw std::invalid_argument("agd_run: mu must be > 0");
  if (!(l >= mu)) throw std::invalid_argument("agd_run: l must be >= mu");
  const double sk = std::sqrt(l / mu);
  const double alpha = sk;
  const double beta = sk + 1.0;
  const double gamma = 1.0 / std::sqrt(l * mu);
  const double eta = 1.0 / l;
  std::vector<AcState> traj;
  traj.reserve(steps + 1);
  traj.push_back({x0, x_ag0});
  for (std::size_t t = 0; t < steps; ++t) {
    const AcState& s = traj.back();
    const Vec x_md = ac_middle(s, beta);
    traj.push_back(acsgd_step(s, x_md, p.full_grad(x_md), alpha, beta, gamma, eta));
  }
  return traj;
}

std::vector<DaState> dual_averaging_run(const CompositeProblem& cp, double eta, std::size_t steps, const Vec& x0,
                                        RngStream& rng) {
  require_feasible(cp, x0, "dual_averaging_run");
  if (!(eta >= 0.0)) throw std::invalid_argument("dual_averaging_run: eta must be >= 0");
  std::vector<DaState> traj;
  traj.reserve(steps + 1);
  Vec y = cp.geo.grad_h(x0);
  Vec x = conjugate_map(cp.geo, cp.reg, 0.0, y);
  traj.push_back({y, 0, x});
  for (std::size_t t = 0; t < steps; ++t) {
    axpy(-eta, cp.smooth->client_grad(0, x, rng), y);
    x = conjugate_map(cp.geo, cp.reg, eta * static_cast<double>(t + 1), y);
    traj.push_back({y, t + 1, x});
  }
  return traj;
}

Trajectory mirror_descent_run(const CompositeProblem& cp, double eta, std::size_t steps, const Vec& x0,
                              RngStream& rng) {
  require_feasible(cp, x0, "mirror_descent_run");
  if (!(eta >= 0.0)) throw std::invalid_argument("mirror_descent_run: eta must be >= 0");
  Trajectory traj;
  traj.reserve(steps + 1);
  traj.push_back(x0);
  Vec x = x0;
  for (std::size_t t = 0; t < steps; ++t) {
    Vec y = cp.geo.grad_h(x);
    axpy(-eta, cp.smooth->client_grad(0, x, rng), y);
    x = conjugate_map(cp.geo, cp.reg, eta, y);
    traj.push_back(x);
  }
  return traj;
}

CompositeSolution solve_composite(const CompositeProblem& cp, std::size_t max_iter, double tol) {
  const Problem& f = *cp.smooth;
  double l = f.constants().L;
  if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("solve_composite: smoothness constant unknown");
  const double step = 1.0 / l;
  Vec x = conjugate_map(cp.geo, cp.reg, step, Vec(f.dim()));
  Vec z = x;
  double t = 1.0;
  double gm = INFINITY;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    const Vec gz = f.full_grad(z);
    Vec next = conjugate_map(cp.geo, cp.reg, step, lincomb(1.0, z, -step, gz));
    gm = norm2(z - next) / step;
    if (gm < tol) {
      x = std::move(next);
      break;
    }
    // Restart momentum when it points uphill.
    if (dot(z - next, next - x) > 0.0) {
      t = 1.0;
      x = std::move(next);
      z = x;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = lincomb(1.0 + (t - 1.0) / t_next, next, -(t - 1.0) / t_next, x);
    if (next == x) {
      break;
    }
    x = std::move(next);
    t = t_next;
  }
  return {x, cp.objective(x), it, gm};
}

}  // namespace fedopt
