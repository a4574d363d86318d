#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedopt/labs/labs.hpp"
#include "fedopt/numerics/linalg.hpp"

namespace fedopt {

Mat2 mul(const Mat2& a, const Mat2& b) {
  Mat2 c{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
  }
  return c;
}

double max_abs_diff(const Mat2& a, const Mat2& b) {
  double m = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) m = std::max(m, std::fabs(a[i][j] - b[i][j]));
  }
  return m;
}

Mat2 agd_step_matrix(double kappa, double h_over_l) {
  const double sk = std::sqrt(kappa);
  const double dl = 1.0 - h_over_l;
  const double dmu = 1.0 - h_over_l * kappa;
  return Mat2{{{sk / (sk + 1.0) * dl, 1.0 / (sk + 1.0) * dl}, {1.0 / (sk + 1.0) * dmu, sk / (sk + 1.0) * dl}}};
}

DivergenceTrace agd_divergence(double kappa, std::size_t blocks, double epsilon, bool allow_small) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw std::invalid_argument("agd_divergence: kappa must be >= 1");
  if (kappa < 25.0 && !allow_small) throw std::invalid_argument("agd_divergence: kappa < 25 is outside the guarantee");
  DivergenceTrace tr;
  tr.kappa = kappa;
  tr.epsilon = epsilon;
  const double sk = std::sqrt(kappa);
  const Mat2 at_l = agd_step_matrix(kappa, 1.0);
  const Mat2 at_mu = agd_step_matrix(kappa, 1.0 / kappa);
  auto step = [&](std::size_t t) -> const Mat2& { return t % 3 == 1 ? at_l : at_mu; };

  tr.block = mul(step(2), mul(step(1), step(0)));
  tr.projector = Mat2{{{0.5, 0.5 / sk}, {0.5 * sk, 0.5}}};
  tr.factor = tr.block[0][0] / tr.projector[0][0];
  tr.predicted = -2.0 * std::pow(1.0 - 1.0 / sk, 3);
  tr.idempotency_residual = max_abs_diff(mul(tr.projector, tr.projector), tr.projector);
  Mat2 scaled = tr.projector;
  for (auto& row : scaled) {
    for (double& v : row) v *= tr.factor;
  }
  tr.projector_residual = max_abs_diff(tr.block, scaled);

  double dag = epsilon, d = epsilon;
  tr.steps.emplace_back(dag, d);
  for (std::size_t t = 0; t < 3 * blocks; ++t) {
    const Mat2& m = step(t);
    const double nag = m[0][0] * dag + m[0][1] * d;
    const double nd = m[1][0] * dag + m[1][1] * d;
    dag = nag;
    d = nd;
    tr.steps.emplace_back(dag, d);
  }
  for (std::size_t j = 1; j < blocks; ++j) tr.growth_ratio.push_back(tr.steps[3 * j + 3].second / tr.steps[3 * j].second);
  return tr;
}

LbCoefficients lb_coefficients(double eta, double l, std::size_t k) {
  if (!(l > 0.0)) throw std::invalid_argument("lb_coefficients: L must be > 0");
  if (!(eta >= 0.0) || eta > 2.0 / l) throw std::invalid_argument("lb_coefficients: eta must lie in [0, 2/L]");
  const double kk = static_cast<double>(k);
  // 1 − (1 − x)^K without cancellation.
  const double u4 = -std::expm1(kk * std::log1p(-eta * l / 4.0));
  const double u8 = -std::expm1(kk * std::log1p(-eta * l / 8.0));
  return {0.5 * ((1.0 - u4) + (1.0 - u8)), (2.0 / l) * u4 - (4.0 / l) * u8};
}

LbTrajectory hetero_lb_trajectory(double eta, double l, std::size_t k, std::size_t r, double zeta_star, double x0) {
  if (!(eta > 0.0) || eta > 2.0 / l) throw std::invalid_argument("hetero_lb_trajectory: eta must lie in (0, 2/L]");
  const auto p = make_lb4d(l, 0.0, 1.0, zeta_star, 2);
  FedConfig cfg;
  cfg.K = k;
  cfg.R = r;
  cfg.eta_client = eta;
  cfg.eval_every = r;
  cfg.x0 = Vec{0.0, 0.0, 0.0, x0};
  const RunRecord rec = fedavg_run(*p, cfg);

  const LbCoefficients c = lb_coefficients(eta, l, k);
  const double ar = std::pow(c.a, static_cast<double>(r));
  return {rec.final_x[3], ar * x0 + (1.0 - ar) / (1.0 - c.a) * c.b * zeta_star, c.a, c.b};
}

bool verify_b_bound(double eta, double l, std::size_t k) {
  if (k < 2) throw std::invalid_argument("verify_b_bound: K must be >= 2");
  const double b = lb_coefficients(eta, l, k).b;
  const double s = eta * l * static_cast<double>(k);
  return b <= -(0.001 / l) * std::min(1.0, s * s);
}

SupportMetrics support_metrics(const Vec& x, const Vec& truth, double threshold) {
  if (x.size() < truth.size()) throw std::invalid_argument("support_metrics: iterate shorter than truth");
  std::size_t predicted = 0, actual = 0, hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = std::fabs(x[i]) >= threshold;
    const bool t = truth[i] != 0.0;
    predicted += p;
    actual += t;
    hit += p && t;
  }
  SupportMetrics m;
  m.density = truth.size() == 0 ? 0.0 : static_cast<double>(predicted) / static_cast<double>(truth.size());
  m.precision = predicted == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(predicted);
  m.recall = actual == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(actual);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

std::size_t recovered_rank(const Vec& x, std::size_t rows, std::size_t cols, double threshold) {
  if (x.size() < rows * cols) throw std::invalid_argument("recovered_rank: iterate shorter than the matrix block");
  const Vec block(std::vector<double>(x.begin(), x.begin() + static_cast<long>(rows * cols)));
  const Svd f = jacobi_svd(Mat::from_vec(block, rows, cols));
  std::size_t n = 0;
  for (double s : f.s) n += s > threshold;
  return n;
}

std::vector<CurseRow> curse_demo(const CompositeProblem& lasso, const FedConfig& cfg) {
  if (!lasso.ground_truth) throw std::invalid_argument("curse_demo: instance has no ground truth");
  const RunRecord mid = fedmid_run(lasso, cfg);
  const RunRecord dual = feddualavg_run(lasso, cfg);
  std::vector<CurseRow> rows;
  const std::size_t n = std::min(mid.outputs.size(), dual.outputs.size());
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back({mid.outputs[i].first, support_metrics(mid.outputs[i].second, *lasso.ground_truth),
                    support_metrics(dual.outputs[i].second, *lasso.ground_truth)});
  }
  return rows;
}

}  // namespace fedopt
