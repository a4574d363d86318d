#pragma once

#include <cstddef>
#include <vector>

#include "fedopt/problems/problem.hpp"

namespace fedopt {

using Trajectory = std::vector<Vec>;

/// Main and aggregate iterates of the accelerated method. The middle point
/// x_md = β⁻¹x + (1 − β⁻¹)x_ag is derived on demand.
struct AcState {
  Vec x;
  Vec x_ag;
};

/// β⁻¹x + (1 − β⁻¹)x_ag; exactly x when β = 1.
Vec ac_middle(const AcState& s, double beta);

/// One generalized accelerated step with gradient g queried at x_md:
///   x_ag⁺ = x_md − ηg,  x⁺ = (1 − α⁻¹)x + α⁻¹x_md − γg.
AcState acsgd_step(const AcState& s, const Vec& g, double alpha, double beta, double gamma, double eta);
AcState acsgd_step(const AcState& s, const Vec& x_md, const Vec& g, double alpha, double beta, double gamma,
                   double eta);

/// Stochastic gradient descent on client 0's oracle. Returns steps + 1 iterates.
Trajectory sgd_run(const Problem& p, double eta, std::size_t steps, const Vec& x0, RngStream& rng);

/// Full-gradient descent. Returns steps + 1 iterates.
Trajectory gd_run(const Problem& p, double eta, std::size_t steps, const Vec& x0);

/// Nesterov's method for μ-strongly convex, L-smooth F with κ = L/μ.
std::vector<AcState> agd_run(const Problem& p, double l, double mu, const Vec& x0, const Vec& x_ag0,
                             std::size_t steps);

/// Dual state y, step counter t and primal image x = ∇(h + ηtψ)*(y).
struct DaState {
  Vec y;
  std::size_t t;
  Vec x;
};

/// y₀ = ∇h(x₀), y_{t+1} = y_t − η∇f(x_t; ξ_t).
std::vector<DaState> dual_averaging_run(const CompositeProblem& cp, double eta, std::size_t steps, const Vec& x0,
                                        RngStream& rng);

/// x⁺ = ∇(h + ηψ)*(∇h(x) − η∇f(x; ξ)).
Trajectory mirror_descent_run(const CompositeProblem& cp, double eta, std::size_t steps, const Vec& x0,
                              RngStream& rng);

struct CompositeSolution {
  Vec x;
  double value;
  std::size_t iterations;
  double gradient_mapping_norm;
};

/// Accelerated proximal gradient with adaptive restart, run until the
/// gradient-mapping norm drops below `tol` or `max_iter` iterations.
CompositeSolution solve_composite(const CompositeProblem& cp, std::size_t max_iter = 1000000, double tol = 1e-12);

}  // namespace fedopt
