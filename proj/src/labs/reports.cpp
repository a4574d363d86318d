#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "fedopt/labs/labs.hpp"

namespace fedopt {

namespace {

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string g17(double v) { return fmt("%.17g", v); }

std::string bias_row(const std::string& exp, const BiasEstimate& e, double predicted) {
  return exp + "," + g17(e.eta) + "," + std::to_string(e.k) + "," + std::to_string(e.reps) + "," +
         g17(e.mean_bias[0]) + "," + g17(e.std_error[0]) + "," + (std::isnan(predicted) ? "" : g17(predicted)) + "\n";
}

}  // namespace

bool LabReport::pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

std::string LabReport::summary_json() const {
  nlohmann::json j;
  j["lab"] = name;
  j["pass"] = pass();
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : checks) cs.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = cs;
  return j.dump(2);
}

LabReport bias_lab(const BiasLabOptions& opts) {
  LabReport rep;
  rep.name = "bias";
  rep.csv = "experiment,eta,k,reps,mean_bias,std_error,predicted\n";
  const double nan = std::nan("");

  const auto demo = make_bias_demo();
  {
    BiasOptions o;
    o.seed = opts.seed;
    o.workers = opts.workers;
    const auto e = measure_bias(*demo, 0.01, {1024}, opts.demo_reps, o).front();
    rep.csv += bias_row("demo_sign", e, nan);
    const double z = e.mean_bias[0] / e.std_error[0];
    rep.checks.push_back({"demo_negative_at_1024", z < -4.0,
                          "mean " + g17(e.mean_bias[0]) + ", " + fmt("%.2f", z) + " standard errors"});
  }
  {
    BiasOptions o;
    o.seed = opts.seed;
    o.workers = opts.workers;
    o.control_variate = true;
    const auto es = measure_bias(*demo, 1e-4, {128, 256, 512, 1024}, opts.demo_reps, o);
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : es) {
      rep.csv += bias_row("demo_rate", e, nan);
      pts.emplace_back(static_cast<double>(e.k), e.mean_bias[0]);
    }
    const double slope = fit_bias_exponent(pts);
    rep.checks.push_back({"demo_exponent", slope >= 1.2 && slope <= 1.8, "slope " + fmt("%.4f", slope) + " in [1.2, 1.8]"});
  }
  {
    const auto lc = make_logcosh_instance(1.0, 1.0, std::sqrt(3.0));
    BiasOptions o;
    o.seed = opts.seed;
    o.workers = opts.workers;
    o.control_variate = true;
    const double eta = 1e-3;
    const auto es = measure_bias(*lc, eta, {37, 75, 150, 300}, opts.logcosh_reps, o);
    std::vector<std::pair<double, double>> pts;
    double worst = 0.0;
    bool sign = true;
    for (const auto& e : es) {
      const double pred = predict_bias_sde(*lc, eta, e.k, 0.0);
      rep.csv += bias_row("logcosh", e, pred);
      pts.emplace_back(static_cast<double>(e.k), e.mean_bias[0]);
      worst = std::max(worst, std::fabs(e.mean_bias[0] - pred) / std::fabs(pred));
      sign = sign && (e.mean_bias[0] < 0.0) == (pred < 0.0);
    }
    const double slope = fit_bias_exponent(pts);
    rep.checks.push_back({"logcosh_sde_agreement", worst <= 0.3, "max relative error " + fmt("%.4f", worst) + " <= 0.3"});
    rep.checks.push_back({"logcosh_sign", sign, "measured and predicted signs agree"});
    rep.checks.push_back({"logcosh_exponent", slope >= 1.6 && slope <= 2.4, "slope " + fmt("%.4f", slope) + " in [1.6, 2.4]"});
  }
  {
    const auto q = make_quadratic(Mat(1, 1, {1.0}), Vec{0.0}, {}, 1.0);
    BiasOptions o;
    o.seed = opts.seed;
    o.workers = opts.workers;
    const auto e = measure_bias(*q, 0.01, {1024}, opts.quadratic_reps, o).front();
    rep.csv += bias_row("quadratic_null", e, predict_bias_sde(*q, 0.01, 1024, 0.0));
    const double z = e.mean_bias[0] / e.std_error[0];
    rep.checks.push_back({"quadratic_no_bias", std::fabs(z) <= 4.0, fmt("%.2f", z) + " standard errors"});
  }
  return rep;
}

LabReport instability_lab() {
  LabReport rep;
  rep.name = "instability";
  rep.csv = "K,t,delta_ag,delta\n";
  const double kappa = 25.0, eps = 1e-6;
  bool lower_d = true, lower_ag = true, swapped = true;
  for (std::size_t k : {5, 10, 20, 50}) {
    const DivergenceTrace tr = agd_divergence(kappa, k, eps);
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      rep.csv += std::to_string(k) + "," + std::to_string(t) + "," + g17(tr.steps[t].first) + "," +
                 g17(tr.steps[t].second) + "\n";
    }
    if (k == 5) {
      const double err = std::fabs(tr.factor - tr.predicted);
      rep.checks.push_back({"block_factor", err <= 1e-12 && tr.projector_residual <= 1e-12,
                            "factor " + g17(tr.factor) + ", predicted " + g17(tr.predicted)});
      rep.checks.push_back({"idempotent", tr.idempotency_residual <= 1e-12, "residual " + g17(tr.idempotency_residual)});
    }
    const double grow = std::pow(1.02, static_cast<double>(k));
    const double dag = std::fabs(tr.steps.back().first), d = std::fabs(tr.steps.back().second);
    lower_d = lower_d && d >= 0.5 * eps * grow;
    lower_ag = lower_ag && dag >= eps * grow;
    swapped = swapped && dag >= 0.5 * eps * grow && d >= eps * grow;
  }
  rep.checks.push_back({"delta_lower_bound", lower_d, "|delta| >= eps/2 * 1.02^K for K in {5,10,20,50}"});
  rep.checks.push_back({"delta_ag_lower_bound", lower_ag, "|delta_ag| >= eps * 1.02^K for K in {5,10,20,50}"});
  rep.checks.push_back({"info_swapped_bounds", swapped,
                        "informational: |delta_ag| >= eps/2 * 1.02^K and |delta| >= eps * 1.02^K"});
  return rep;
}

LabReport lb_lab() {
  LabReport rep;
  rep.name = "lower_bound";
  rep.csv = "eta_l,K,R,simulated,closed_form,a,b\n";
  const double l = 1.0, zeta = 1.0;
  double worst = 0.0;
  for (double el : {0.1, 0.5, 1.0, 2.0}) {
    for (std::size_t k : {2, 4, 8, 16}) {
      for (std::size_t r : {1, 5, 20}) {
        const LbTrajectory t = hetero_lb_trajectory(el / l, l, k, r, zeta);
        rep.csv += g17(el) + "," + std::to_string(k) + "," + std::to_string(r) + "," + g17(t.simulated) + "," +
                   g17(t.closed_form) + "," + g17(t.a) + "," + g17(t.b) + "\n";
        worst = std::max(worst, std::fabs(t.simulated - t.closed_form) / std::max(1.0, std::fabs(t.closed_form)));
      }
    }
  }
  rep.checks.push_back({"closed_form_agreement", worst <= 1e-12, "max relative deviation " + g17(worst)});

  const LbCoefficients c = lb_coefficients(1.0, l, 2);
  rep.checks.push_back({"a_at_K2", std::fabs(c.a - 85.0 / 128.0) <= 1e-15, "a = " + g17(c.a)});
  rep.checks.push_back({"b_at_K2", std::fabs(c.b + 1.0 / 16.0) <= 1e-15, "b = " + g17(c.b)});

  bool all = true;
  std::size_t n = 0;
  for (double el : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0}) {
    for (std::size_t k : {2, 3, 4, 8, 16, 32, 64}) {
      all = all && verify_b_bound(el / l, l, k);
      ++n;
    }
  }
  rep.checks.push_back({"b_bound_grid", all, std::to_string(n) + " grid points"});

  double worst_lim = 0.0;
  for (std::size_t k : {2, 4, 8, 16, 32, 64}) {
    const double eta = 1e-5 / (l * static_cast<double>(k));
    const double kk = static_cast<double>(k);
    const double ratio = lb_coefficients(eta, l, k).b / (eta * eta * kk * kk * l);
    const double limit = -(1.0 - 1.0 / kk) / 32.0;
    worst_lim = std::max(worst_lim, std::fabs(ratio / limit - 1.0));
  }
  rep.checks.push_back({"small_step_limit", worst_lim <= 1e-4, "max relative deviation " + g17(worst_lim)});
  return rep;
}

}  // namespace fedopt
