#include <cmath>

#include "doctest.h"
#include "fedopt/sequential/sequential.hpp"

using namespace fedopt;

namespace {

ProblemHandle half_square(double sigma = 0.0) { return make_quadratic(Mat(1, 1, {1.0}), Vec{0.0}, {}, sigma); }

// ½‖x‖²_A − bᵀx with a fixed SPD A.
ProblemHandle spd_quadratic(double sigma = 0.0) {
  Mat a(3, 3, {4.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 0.25});
  return make_quadratic(a, Vec{1.0, -1.0, 2.0}, {}, sigma);
}

CompositeProblem unregularized(ProblemHandle p) { return CompositeProblem{p, Regularizer::zero(), Geometry::euclidean(), {}, {}, {}}; }

}  // namespace

TEST_CASE("sgd and gd closed forms") {
  RngStream rng(1, 0);
  const auto t = sgd_run(*half_square(), 0.5, 2, Vec{1.0}, rng);
  CHECK(t == Trajectory{Vec{1.0}, Vec{0.5}, Vec{0.25}});
  RngStream rng2(1, 0);
  const auto c = sgd_run(*half_square(1.0), 0.0, 3, Vec{0.7}, rng2);
  for (const auto& x : c) CHECK(x == Vec{0.7});
  const double mu = 0.3, eta = 0.2;
  const auto g = gd_run(*make_quadratic(Mat(1, 1, {mu}), Vec{0.0}), eta, 10, Vec{2.0});
  CHECK(g.back()[0] == doctest::Approx(2.0 * std::pow(1 - eta * mu, 10)).epsilon(1e-14));
  const auto pw = gd_run(*make_piecewise_quadratic(1.0, 0.0), 0.1, 5, Vec{0.0});
  CHECK(pw.back() == Vec{0.0});
}

TEST_CASE("sgd replays and reduces to gd without noise") {
  const auto noisy = spd_quadratic(0.5);
  RngStream a(9, 2), b(9, 2);
  CHECK(sgd_run(*noisy, 0.1, 50, Vec{1.0, 1.0, 1.0}, a) == sgd_run(*noisy, 0.1, 50, Vec{1.0, 1.0, 1.0}, b));
  for (const auto& p : {spd_quadratic(), make_piecewise_quadratic(2.0, 0.0),  make_logcosh_instance(1.0, 1.0, 0.0)}) {
    RngStream rng(3, 0);
    const Vec x0(p->dim(), 0.8);
    CHECK(sgd_run(*p, 0.05, 40, x0, rng) == gd_run(*p, 0.05, 40, x0));
  }
}

TEST_CASE("acsgd step reductions") {
  const AcState s{Vec{1.0, -2.0}, Vec{0.5, 0.5}};
  const Vec g{0.3, 0.1};
  const AcState plain = acsgd_step(s, g, 1.0, 1.0, 0.2, 0.7);
  Vec sgd = s.x;
  axpy(-0.2, g, sgd);
  CHECK(plain.x == sgd);
  const AcState still = acsgd_step(s, Vec{0.0, 0.0}, 4.0, 3.0, 0.2, 0.7);
  const Vec md = ac_middle(s, 3.0);
  CHECK(still.x_ag == md);
  CHECK(still.x == lincomb(0.75, s.x, 0.25, md));
  CHECK_THROWS(acsgd_step(s, g, 0.5, 1.0, 0.1, 0.1));
}

TEST_CASE("agd matches Nesterov's update") {
  const auto p = half_square();
  const auto t = agd_run(*p, 1.0, 1.0, Vec{1.0}, Vec{1.0}, 1);
  CHECK(t[1].x_ag[0] == 0.0);
  CHECK(t[1].x[0] == 0.0);

  // Hand-written Nesterov step on a 3-D quadratic, compared bit for bit.
  const auto q = spd_quadratic();
  const double l = q->constants().L, mu = q->constants().mu, sk = std::sqrt(l / mu);
  const Vec x0{1.0, 2.0, -1.0}, xag0{0.5, 0.0, 1.0};
  const auto traj = agd_run(*q, l, mu, x0, xag0, 1);
  const Vec xmd = lincomb(1.0 / (sk + 1.0), x0, 1.0 - 1.0 / (sk + 1.0), xag0);
  const Vec gmd = q->full_grad(xmd);
  Vec xag1 = xmd;
  axpy(-1.0 / l, gmd, xag1);
  Vec x1 = lincomb(1.0 - 1.0 / sk, x0, 1.0 / sk, xmd);
  axpy(-1.0 / std::sqrt(l * mu), gmd, x1);
  CHECK(traj[1].x == x1);
  CHECK(traj[1].x_ag == xag1);

  // Fixed point without gradient.
  const auto flat = make_quadratic(Mat(1, 1, {0.0}), Vec{0.0});
  const auto f = agd_run(*flat, 4.0, 1.0, Vec{0.3}, Vec{0.3}, 5);
  CHECK(f.back().x == Vec{0.3});
  CHECK_THROWS(agd_run(*q, 1.0, 0.0, x0, x0, 1));
}

TEST_CASE("agd converges linearly on a quadratic") {
  const auto q = spd_quadratic();
  const double l = q->constants().L, mu = q->constants().mu;
  const Vec x0{3.0, -3.0, 3.0};
  const auto traj = agd_run(*q, l, mu, x0, x0, 200);
  const auto opt = *q->optimum();
  CHECK(q->value(traj.back().x_ag) - opt.value < 1e-10);
  // Envelope L·B²·(1 − 1/√κ)^t·C with C fitted from the first 20 steps.
  const double rate = 1.0 - std::sqrt(mu / l);
  const double b2 = dot(x0 - opt.x, x0 - opt.x);
  double c = 0.0;
  for (std::size_t t = 0; t <= 20; ++t) c = std::max(c, (q->value(traj[t].x_ag) - opt.value) / (l * b2 * std::pow(rate, t)));
  for (std::size_t t = 0; t < traj.size(); ++t) {
    CHECK(q->value(traj[t].x_ag) - opt.value <= 4.0 * c * l * b2 * std::pow(rate, t) + 1e-14);
  }
}

TEST_CASE("dual averaging and mirror descent reduce to sgd") {
  const auto p = spd_quadratic(0.3);
  const CompositeProblem cp = unregularized(p);
  const Vec x0{0.2, 0.4, -0.6};
  RngStream a(5, 1), b(5, 1), c(5, 1);
  const auto sgd = sgd_run(*p, 0.1, 30, x0, a);
  const auto da = dual_averaging_run(cp, 0.1, 30, x0, b);
  const auto md = mirror_descent_run(cp, 0.1, 30, x0, c);
  for (std::size_t t = 0; t <= 30; ++t) {
    CHECK(da[t].x == sgd[t]);
    CHECK(da[t].y == sgd[t]);
    CHECK(da[t].t == t);
    CHECK(md[t] == sgd[t]);
  }
  RngStream d(5, 1);
  const auto frozen = dual_averaging_run(cp, 0.0, 5, x0, d);
  CHECK(frozen.back().x == x0);
}

TEST_CASE("mirror descent with a ball constraint is projected sgd") {
  const auto p = spd_quadratic(0.3);
  const CompositeProblem cp{p, Regularizer::l2_ball(0.5), Geometry::euclidean(), {}, {}, {}};
  const Vec x0{0.1, 0.1, 0.1};
  RngStream a(2, 2), b(2, 2);
  const auto md = mirror_descent_run(cp, 0.2, 25, x0, a);
  Vec x = x0;
  for (std::size_t t = 1; t <= 25; ++t) {
    Vec y = x;
    axpy(-0.2, p->client_grad(0, x, b), y);
    x = project_l2_ball(y, 0.5);
    CHECK(md[t] == x);
  }
  CHECK_THROWS(mirror_descent_run(cp, 0.1, 1, Vec{1.0, 1.0, 1.0}, a));
}

TEST_CASE("l1 fixed point of dual averaging and mirror descent") {
  // F = x² − 3x, ψ = |x|: x* = soft(3, 1) / 2 = 1.
  const CompositeProblem cp{make_quadratic(Mat(1, 1, {2.0}), Vec{-3.0}), Regularizer::l1(1.0), Geometry::euclidean(),
                            {}, {}, {}};
  RngStream a(1, 1), b(1, 1);
  const auto da = dual_averaging_run(cp, 0.05, 10000, Vec{0.0}, a);
  const auto md = mirror_descent_run(cp, 0.05, 10000, Vec{0.0}, b);
  CHECK(std::fabs(da.back().x[0] - 1.0) < 1e-6);
  CHECK(std::fabs(md.back()[0] - 1.0) < 1e-6);
  CHECK(std::fabs(da.back().x[0] - md.back()[0]) < 1e-6);
}

TEST_CASE("composite solver reaches the lasso optimum") {
  // Pooled samples (a, b) = (1, 1), (2, 3); F = mean (a x + c − b)², ψ = λ|x|.
  // ∂F/∂c = 0 gives c = 2 − 1.5x; then ∂F/∂x = 0.5x − 1, so x* = 2(1 − λ).
  const double lambda = 0.2;
  Dataset d;
  d.features.push_back(Mat(2, 1, {1.0, 2.0}));
  d.labels.push_back(Vec{1.0, 3.0});
  const CompositeProblem cp{make_least_squares(d, 1), Regularizer::l1(lambda, 1), Geometry::euclidean(), {}, {}, {}};
  const auto sol = solve_composite(cp, 100000, 1e-12);
  CHECK(sol.x[0] == doctest::Approx(2.0 * (1.0 - lambda)).epsilon(1e-10));
  CHECK(sol.x[1] == doctest::Approx(2.0 - 3.0 * (1.0 - lambda)).epsilon(1e-10));
  CHECK(sol.gradient_mapping_norm < 1e-12);
}
