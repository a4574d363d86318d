#include <stdexcept>

#include "fedopt/federated/federated.hpp"

namespace fedopt {

namespace {

Vec mean_of(const std::vector<Vec>& vs) {
  RunningMean m(vs.front().size());
  for (const Vec& v : vs) m.add(v);
  return m.value();
}

}  // namespace

std::vector<ShadowPoint> shadow_series(const RunRecord& rec, const CompositeProblem& cp) {
  if (!rec.config.snapshots) throw std::invalid_argument("shadow_series: run was recorded without snapshots");
  const FedConfig& c = rec.config;
  std::vector<ShadowPoint> out;
  out.reserve(rec.snapshots.size());
  for (const StepSnapshot& s : rec.snapshots) {
    ShadowPoint pt{s.round, s.step, {}, {}, {}};
    if (!s.y.empty()) {
      pt.y_bar = mean_of(s.y);
      const double eta = dual_step_weight(c.eta_client, c.eta_server, c.K, s.round, s.step);
      pt.x_hat = conjugate_map(cp.geo, cp.reg, eta, pt.y_bar);
    } else {
      pt.y_bar = mean_of(s.x);
      pt.x_hat = pt.y_bar;
    }
    if (!s.g.empty()) pt.g_bar = mean_of(s.g);
    out.push_back(std::move(pt));
  }
  return out;
}

std::vector<PotentialPoint> potentials(const RunRecord& rec, const Problem& p, double mu) {
  if (!rec.config.snapshots) throw std::invalid_argument("potentials: run was recorded without snapshots");
  const auto opt = p.optimum();
  if (!opt) throw std::invalid_argument("potentials: optimum unknown");
  std::vector<PotentialPoint> out;
  out.reserve(rec.snapshots.size());
  for (const StepSnapshot& s : rec.snapshots) {
    const std::vector<Vec>& ag = s.x_ag.empty() ? s.x : s.x_ag;
    double mean_f = 0.0;
    for (const Vec& v : ag) mean_f += p.value(v);
    mean_f /= static_cast<double>(ag.size());
    const Vec x_bar = mean_of(s.x);
    const Vec ag_bar = mean_of(ag);
    const Vec d = x_bar - opt->x;
    const double dist2 = dot(d, d);
    out.push_back({s.round, s.step, mean_f - opt->value + 0.5 * mu * dist2,
                   p.value(ag_bar) - opt->value + mu * dist2 / 6.0});
  }
  return out;
}

}  // namespace fedopt
