#include <cmath>

#include "doctest.h"
#include "fedopt/federated/federated.hpp"

using namespace fedopt;

namespace {

Mat spd3() { return Mat(3, 3, {4.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 0.25}); }

ProblemHandle hetero_quadratic(double sigma) {
  const std::vector<Vec> shifts{{1.0, -0.5, 0.2}, {-2.0, 0.1, 0.3}, {0.5, 0.5, -0.9}, {0.5, -0.1, 0.4}};
  return make_quadratic(spd3(), Vec{1.0, -1.0, 2.0}, shifts, sigma);
}

ProblemHandle homo_quadratic(double sigma, std::size_t m) {
  return make_quadratic(spd3(), Vec{1.0, -1.0, 2.0}, {}, sigma, m);
}

CompositeProblem with_reg(ProblemHandle p, Regularizer reg) {
  return CompositeProblem{std::move(p), reg, Geometry::euclidean(), {}, {}, {}};
}

FedConfig config(std::size_t k, std::size_t r, double eta) {
  FedConfig c;
  c.K = k;
  c.R = r;
  c.eta_client = eta;
  c.seed = 11;
  c.x0 = Vec{1.0, -1.0, 0.5};
  return c;
}

void check_same_numbers(const RunRecord& a, const RunRecord& b) {
  CHECK(to_csv_rows(a, "c") == to_csv_rows(b, "c"));
  CHECK(a.final_x == b.final_x);
  CHECK(a.grad_calls == b.grad_calls);
  REQUIRE(a.outputs.size() == b.outputs.size());
  for (std::size_t i = 0; i < a.outputs.size(); ++i) CHECK(a.outputs[i].second == b.outputs[i].second);
}

}  // namespace

TEST_CASE("FedAc hyperparameters") {
  const auto one = FedAcParams::make(FedAcVariant::I, 1.0, 0.01, 4);
  CHECK(one.gamma == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(one.alpha == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(one.beta == doctest::Approx(21.0).epsilon(1e-14));
  const auto two = FedAcParams::make(FedAcVariant::II, 1.0, 0.01, 4);
  CHECK(two.gamma == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(two.alpha == doctest::Approx(29.5).epsilon(1e-14));
  CHECK(two.beta == doctest::Approx(1739.5 / 28.5).epsilon(1e-14));
  const auto van = FedAcParams::make(FedAcVariant::vanilla, 1.0, 0.01, 4);
  CHECK(van.gamma == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(van.alpha == doctest::Approx(10.0).epsilon(1e-14));
  CHECK_THROWS_AS(FedAcParams::make(FedAcVariant::I, 1.0, 2.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(FedAcParams::make(FedAcVariant::I, 0.0, 0.1, 4), std::invalid_argument);
  CHECK_THROWS_AS(FedAcParams::custom(0.5, 1.0, 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("dual step weight") {
  CHECK(dual_step_weight(0.1, 2.0, 5, 3, 2) == doctest::Approx(3.2).epsilon(1e-15));
  CHECK(dual_step_weight(0.1, 1.0, 5, 0, 0) == 0.0);
}

TEST_CASE("client sampling") {
  for (std::size_t r = 0; r < 20; ++r) {
    const auto s = sample_clients(5, r, 10, 4);
    REQUIRE(s.size() == 4);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i - 1] < s[i]);
    CHECK(s.back() < 10);
    CHECK(s == sample_clients(5, r, 10, 4));
  }
  std::size_t distinct = 0;
  for (std::size_t r = 1; r < 20; ++r) distinct += sample_clients(5, r, 10, 4) != sample_clients(5, 0, 10, 4);
  CHECK(distinct >= 15);
  CHECK(sample_clients(5, 3, 6, 6) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK_THROWS(sample_clients(5, 0, 3, 4));
}

TEST_CASE("K = 1 FedAvg equals minibatch SGD") {
  const auto p = hetero_quadratic(0.7);
  const auto cfg = config(1, 30, 0.05);
  check_same_numbers(fedavg_run(*p, cfg), minibatch_sgd_run(*p, cfg));
}

TEST_CASE("single-client FedAvg equals SGD") {
  const auto p = homo_quadratic(0.7, 1);
  auto cfg = config(5, 8, 0.05);
  cfg.eval_every = 2;
  const RunRecord rec = fedavg_run(*p, cfg);
  RngStream rng(cfg.seed, 0);
  const Trajectory t = sgd_run(*p, cfg.eta_client, cfg.K * cfg.R, cfg.x0, rng);
  CHECK(rec.final_x == t.back());
  REQUIRE(rec.outputs.size() == 4);
  for (const auto& [round, x] : rec.outputs) CHECK(x == t[round * cfg.K]);
}

TEST_CASE("noiseless homogeneous runs equal gradient descent") {
  const auto p = homo_quadratic(0.0, 4);
  const auto cfg = config(3, 10, 0.1);
  CHECK(fedavg_run(*p, cfg).final_x == gd_run(*p, 0.1, 30, cfg.x0).back());
  CHECK(minibatch_sgd_run(*p, cfg).final_x == gd_run(*p, 0.1, 10, cfg.x0).back());
}

TEST_CASE("zero regularizer collapses composite methods to FedAvg") {
  const auto p = hetero_quadratic(0.4);
  auto cfg = config(4, 12, 0.05);
  cfg.eval_every = 3;
  const auto cp = with_reg(p, Regularizer::zero());
  const RunRecord base = fedavg_run(*p, cfg);
  for (auto run : {fedmid_run, feddualavg_run, fedmid_osp_run, feddualavg_osp_run}) check_same_numbers(base, run(cp, cfg));
  const auto l1_off = with_reg(p, Regularizer::l1(0.0));
  check_same_numbers(base, fedmid_run(l1_off, cfg));
  check_same_numbers(base, feddualavg_run(l1_off, cfg));
}

TEST_CASE("server learning rate and partial participation keep the lattice") {
  const auto p = homo_quadratic(0.4, 6);
  auto cfg = config(3, 10, 0.05);
  cfg.eta_server = 1.7;
  cfg.sample_size = 4;
  const RunRecord base = fedavg_run(*p, cfg);
  CHECK(base.grad_calls == 4 * 3 * 10);
  const auto cp = with_reg(p, Regularizer::zero());
  check_same_numbers(base, fedmid_run(cp, cfg));
  check_same_numbers(base, feddualavg_run(cp, cfg));
  cfg.K = 1;
  check_same_numbers(fedavg_run(*p, cfg), minibatch_sgd_run(*p, cfg));
}

TEST_CASE("degenerate FedAc coupling equals FedAvg") {
  const auto p = hetero_quadratic(0.5);
  const auto cfg = config(4, 10, 0.05);
  const auto params = FedAcParams::custom(1.0, 1.0, cfg.eta_client, cfg.eta_client);
  const RunRecord ac = fedac_run(*p, cfg, params);
  const RunRecord avg = fedavg_run(*p, cfg);
  check_same_numbers(avg, ac);
  CHECK(ac.final_x_ag == avg.final_x);
}

TEST_CASE("single-client FedDualAvg equals dual averaging") {
  const auto p = homo_quadratic(0.6, 1);
  const auto cp = with_reg(p, Regularizer::l1(0.3));
  auto cfg = config(4, 6, 0.05);
  cfg.x0 = Vec{0.0, 0.0, 0.0};
  const RunRecord rec = feddualavg_run(cp, cfg);
  RngStream rng(cfg.seed, 0);
  const auto da = dual_averaging_run(cp, cfg.eta_client, cfg.K * cfg.R, cfg.x0, rng);
  CHECK(rec.final_y == da.back().y);
  for (const auto& [round, x] : rec.outputs) CHECK(x == da[round * cfg.K].x);
}

TEST_CASE("one-step OSP dual averaging coincides with its parent") {
  const auto p = hetero_quadratic(0.3);
  const auto cp = with_reg(p, Regularizer::l1(0.5));
  auto cfg = config(1, 1, 0.1);
  cfg.x0 = Vec{0.0, 0.2, 0.0};
  check_same_numbers(feddualavg_run(cp, cfg), feddualavg_osp_run(cp, cfg));
  cfg.R = 3;
  cfg.K = 3;
  CHECK(feddualavg_run(cp, cfg).final_x != feddualavg_osp_run(cp, cfg).final_x);
}

TEST_CASE("FedMiD on a ball is projected SGD with projected averaging") {
  const auto p = hetero_quadratic(0.0);
  const auto cp = with_reg(p, Regularizer::l2_ball(0.5));
  auto cfg = config(2, 1, 0.2);
  cfg.x0 = Vec{0.1, 0.1, 0.1};
  const RunRecord rec = fedmid_run(cp, cfg);
  RunningMean avg(3);
  for (std::size_t m = 0; m < 4; ++m) {
    Vec x = cfg.x0;
    for (int k = 0; k < 2; ++k) x = project_l2_ball(x - 0.2 * p->client_full_grad(m, x), 0.5);
    avg.add(x);
  }
  const Vec expect = project_l2_ball(avg.value(), 0.5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rec.final_x[i] == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("constraint runs stay feasible") {
  const auto p = hetero_quadratic(1.0);
  for (const auto& reg : {Regularizer::l2_ball(0.3), Regularizer::l1_ball(0.4)}) {
    const auto cp = with_reg(p, reg);
    auto cfg = config(5, 30, 0.1);
    cfg.x0 = Vec{0.0, 0.0, 0.0};
    for (auto run : {fedmid_run, feddualavg_run, fedmid_osp_run, feddualavg_osp_run}) {
      const RunRecord rec = run(cp, cfg);
      for (const auto& [round, x] : rec.outputs) CHECK(reg.feasible(x));
    }
  }
}

TEST_CASE("worker count does not change the record") {
  const auto p = hetero_quadratic(0.8);
  const auto cp = with_reg(p, Regularizer::l1(0.2));
  auto cfg = config(4, 10, 0.05);
  cfg.x0 = Vec{0.0, 0.0, 0.0};
  for (Algorithm a : {Algorithm::fedavg, Algorithm::fedac, Algorithm::feddualavg, Algorithm::minibatch_acsgd}) {
    const auto& prob = (a == Algorithm::feddualavg) ? cp : with_reg(p, Regularizer::zero());
    std::optional<FedAcParams> ac;
    if (a == Algorithm::fedac || a == Algorithm::minibatch_acsgd) ac = FedAcParams::make(FedAcVariant::I, 0.2, 0.05, 4);
    cfg.workers = 1;
    const std::string one = to_json(run_algorithm(a, prob, cfg, ac));
    cfg.workers = 4;
    CHECK(one == to_json(run_algorithm(a, prob, cfg, ac)));
  }
}

TEST_CASE("gradient budget") {
  const auto p = homo_quadratic(0.1, 5);
  auto cfg = config(7, 3, 0.01);
  CHECK(fedavg_run(*p, cfg).grad_calls == 5 * 7 * 3);
  CHECK(minibatch_sgd_run(*p, cfg).grad_calls == 5 * 7 * 3);
  CHECK(minibatch_acsgd_run(*p, cfg, 0.2).grad_calls == 5 * 7 * 3);
  cfg.sample_size = 2;
  const RunRecord rec = fedac_run(*p, cfg, FedAcParams::make(FedAcVariant::II, 0.2, 0.01, 7));
  CHECK(rec.grad_calls == 2 * 7 * 3);
  CHECK(rec.metric(kGradCalls) == std::vector<double>{14.0, 28.0, 42.0});
}

TEST_CASE("FedAc converges on a strongly convex quadratic") {
  const auto p = homo_quadratic(0.0, 4);
  const double mu = p->constants().mu;
  const double eta = 1.0 / p->constants().L;
  auto cfg = config(4, 100, eta);
  for (auto v : {FedAcVariant::I, FedAcVariant::II}) {
    const RunRecord rec = fedac_run(*p, cfg, FedAcParams::make(v, mu, eta, 4));
    CHECK(rec.metric(kSuboptimality).back() < 1e-10);
    CHECK(!rec.diverged);
  }
}

TEST_CASE("divergence stops the run") {
  const auto p = homo_quadratic(0.0, 2);
  const RunRecord rec = fedavg_run(*p, config(10, 200, 5.0));
  CHECK(rec.diverged);
  CHECK(rec.series.size() < 3 * 200);
  CHECK(rec.diverged_round > 0);
}

TEST_CASE("configuration errors name the field") {
  const auto p = homo_quadratic(0.0, 2);
  auto expect = [&](FedConfig c, const std::string& field) {
    try {
      fedavg_run(*p, c);
      FAIL("no error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).rfind(field, 0) == 0);
    }
  };
  auto c = config(1, 1, 0.1);
  c.K = 0;
  expect(c, "K");
  c = config(1, 1, 0.1);
  c.eta_client = 0.0;
  expect(c, "eta_client");
  c = config(1, 1, 0.1);
  c.sample_size = 3;
  expect(c, "sample_size");
  c = config(1, 1, 0.1);
  c.averaging = Averaging::rho_weighted;
  expect(c, "mu");
  c = config(1, 1, 0.1);
  c.x0 = Vec{1.0};
  expect(c, "x0");
  const auto hp = hetero_quadratic(0.0);
  c = config(1, 1, 0.1);
  c.M = 3;
  CHECK_THROWS_AS(fedavg_run(*hp, c), std::invalid_argument);
  auto cp = with_reg(hp, Regularizer::l2_ball(0.1));
  CHECK_THROWS_AS(fedmid_run(cp, config(1, 1, 0.1)), std::invalid_argument);
  CHECK_THROWS_AS(shadow_series(fedavg_run(*hp, config(1, 1, 0.1)), with_reg(hp, Regularizer::zero())),
                  std::invalid_argument);
}

TEST_CASE("json and csv round trip") {
  const auto p = hetero_quadratic(0.2);
  auto cfg = config(2, 5, 0.05);
  const RunRecord rec = fedac_run(*p, cfg, FedAcParams::make(FedAcVariant::I, 0.2, 0.05, 2));
  const std::string text = to_json(rec);
  CHECK(text.find(kRunSchema) != std::string::npos);
  const RunRecord back = run_record_from_json(text);
  CHECK(to_json(back) == text);
  CHECK(back.final_x == rec.final_x);
  CHECK(to_csv_rows(back, "a") == to_csv_rows(rec, "a"));
  const std::string rows = to_csv_rows(rec, "cfg7");
  CHECK(rows.rfind("1,objective,", 0) == 0);
  CHECK(rows.find(",cfg7\n") != std::string::npos);
  CHECK_THROWS(run_record_from_json("{\"schema\": \"other\"}"));
}

TEST_CASE("shadow sequence") {
  const auto p = hetero_quadratic(0.5);
  auto cfg = config(3, 4, 0.05);
  cfg.x0 = Vec{0.0, 0.0, 0.0};
  cfg.snapshots = true;

  const auto zero = with_reg(p, Regularizer::zero());
  for (const auto& pt : shadow_series(feddualavg_run(zero, cfg), zero)) CHECK(pt.x_hat == pt.y_bar);

  const auto cp = with_reg(p, Regularizer::l1(0.4));
  const RunRecord rec = feddualavg_run(cp, cfg);
  const auto sh = shadow_series(rec, cp);
  REQUIRE(sh.size() == cfg.R * (cfg.K + 1));
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < sh.size(); ++i) {
    if (sh[i].step == cfg.K) continue;
    const Vec pred = lincomb(1.0, sh[i].y_bar, -cfg.eta_client, sh[i].g_bar);
    for (std::size_t j = 0; j < 3; ++j) {
      worst = std::max(worst, std::fabs(pred[j] - sh[i + 1].y_bar[j]) / std::max(1.0, std::fabs(pred[j])));
    }
  }
  CHECK(worst < 1e-14);

  cfg.averaging = Averaging::xhat;
  const RunRecord xr = feddualavg_run(cp, cfg);
  RunningMean avg(3);
  for (const auto& pt : sh) {
    if (pt.step >= 1) avg.add(pt.x_hat);
  }
  CHECK(xr.outputs.back().second == avg.value());

  // One client: the shadow update is the client's own update.
  const auto one = with_reg(homo_quadratic(0.5, 1), Regularizer::l1(0.4));
  cfg.averaging = Averaging::final;
  const auto s1 = shadow_series(feddualavg_run(one, cfg), one);
  for (std::size_t i = 0; i + 1 < s1.size(); ++i) {
    if (s1[i].step < cfg.K) CHECK(lincomb(1.0, s1[i].y_bar, -cfg.eta_client, s1[i].g_bar) == s1[i + 1].y_bar);
  }
}

TEST_CASE("rho-weighted averaging matches explicit weights") {
  const auto p = hetero_quadratic(0.5);
  auto cfg = config(3, 5, 0.1);
  cfg.mu = 0.3;
  cfg.snapshots = true;
  cfg.averaging = Averaging::rho_weighted;
  const RunRecord rec = fedavg_run(*p, cfg);
  const std::size_t total = cfg.K * cfg.R;
  Vec num(3);
  double den = 0.0;
  for (const auto& s : rec.snapshots) {
    if (s.step == cfg.K) continue;
    const std::size_t t = s.round * cfg.K + s.step;
    const double w = std::pow(1.0 - 0.5 * cfg.eta_client * cfg.mu, static_cast<double>(total - t - 1));
    RunningMean bar(3);
    for (const auto& x : s.x) bar.add(x);
    axpy(w, bar.value(), num);
    den += w;
  }
  const Vec expect = (1.0 / den) * num;
  for (std::size_t j = 0; j < 3; ++j) CHECK(rec.outputs.back().second[j] == doctest::Approx(expect[j]).epsilon(1e-12));
}

TEST_CASE("uniform averaging of server outputs") {
  const auto p = hetero_quadratic(0.5);
  auto cfg = config(2, 6, 0.1);
  const RunRecord fin = fedavg_run(*p, cfg);
  cfg.averaging = Averaging::uniform;
  const RunRecord uni = fedavg_run(*p, cfg);
  RunningMean avg(3);
  for (const auto& [round, x] : fin.outputs) avg.add(x);
  CHECK(uni.outputs.back().second == avg.value());
}

TEST_CASE("potentials") {
  const auto p = homo_quadratic(0.0, 3);
  const Vec xs = p->optimum()->x;
  auto cfg = config(2, 3, 0.05);
  cfg.x0 = xs;
  cfg.snapshots = true;
  const double mu = p->constants().mu;
  const RunRecord at_opt = fedac_run(*p, cfg, FedAcParams::make(FedAcVariant::I, mu, 0.05, 2));
  for (const auto& pt : potentials(at_opt, *p, mu)) {
    CHECK(std::fabs(pt.psi) < 1e-12);
    CHECK(std::fabs(pt.phi) < 1e-12);
  }

  const auto hp = homo_quadratic(1.0, 1);
  RunRecord rec;
  rec.config.snapshots = true;
  RngStream rng(4, 0);
  for (int i = 0; i < 200; ++i) {
    StepSnapshot s{0, 0, {0, 1, 2}, {}, {}, {}, {}};
    for (int m = 0; m < 3; ++m) {
      s.x.push_back(xs + gaussian(rng, 3));
      s.x_ag.push_back(xs + gaussian(rng, 3));
    }
    rec.snapshots.push_back(s);
  }
  const auto pts = potentials(rec, *hp, mu);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    RunningMean xb(3);
    for (const auto& x : rec.snapshots[i].x) xb.add(x);
    const Vec d = xb.value() - xs;
    CHECK(pts[i].psi >= 0.0);
    CHECK(pts[i].psi >= pts[i].phi - mu / 3.0 * dot(d, d) - 1e-12);
  }
  const auto unknown = make_quadratic(Mat(1, 1, {0.0}), Vec{1.0});
  RunRecord bare;
  bare.config.snapshots = true;
  CHECK_THROWS_AS(potentials(bare, *unknown, 1.0), std::invalid_argument);
}
