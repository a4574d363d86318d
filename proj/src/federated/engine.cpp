#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedopt/federated/federated.hpp"
#include "fedopt/numerics/parallel.hpp"

namespace fedopt {

namespace {

bool is_dual(Algorithm a) { return a == Algorithm::feddualavg || a == Algorithm::feddualavg_osp; }
bool is_accelerated(Algorithm a) { return a == Algorithm::fedac || a == Algorithm::minibatch_acsgd; }
bool is_minibatch(Algorithm a) { return a == Algorithm::minibatch_sgd || a == Algorithm::minibatch_acsgd; }
bool uses_composite(Algorithm a) {
  return a == Algorithm::fedmid || a == Algorithm::feddualavg || a == Algorithm::fedmid_osp ||
         a == Algorithm::feddualavg_osp;
}

struct ServerState {
  Vec x;
  Vec x_ag;
  Vec y;
};

struct ClientOut {
  Vec x;
  Vec x_ag;
  Vec y;
  // Per-step states, filled only when the run needs them.
  std::vector<Vec> sx;
  std::vector<Vec> sx_ag;
  std::vector<Vec> sy;
  std::vector<Vec> sg;
};

Vec mean_of(const std::vector<const Vec*>& vs) {
  RunningMean m(vs.front()->size());
  for (const Vec* v : vs) m.add(*v);
  return m.value();
}

// x⁺ = mean(ends) when η_s = 1, else x + η_s·mean(ends − x).
Vec combine(const Vec& center, const std::vector<const Vec*>& ends, double eta_server) {
  if (eta_server == 1.0) return mean_of(ends);
  RunningMean delta(center.size());
  for (const Vec* v : ends) delta.add(*v - center);
  Vec out = center;
  axpy(eta_server, delta.value(), out);
  return out;
}

class Engine {
 public:
  Engine(Algorithm alg, const CompositeProblem& cp, const FedConfig& cfg, const std::optional<FedAcParams>& ac)
      : alg_(alg), cp_(cp), p_(*cp.smooth), cfg_(cfg), ac_(ac) {
    if (!cp.smooth) throw std::invalid_argument("federated: problem is null");
    cfg_.validate(p_.num_clients());
    if (cfg_.M != 0 && cfg_.M != p_.num_clients() && !p_.homogeneous()) {
      throw std::invalid_argument("M: must equal the problem's client count for heterogeneous problems");
    }
    if (cfg_.M == 0) cfg_.M = p_.num_clients();
    if (cfg_.sample_size == 0) cfg_.sample_size = cfg_.M;
    if (cfg_.x0.size() == 0) cfg_.x0 = Vec(p_.dim());
    if (cfg_.x0.size() != p_.dim()) throw std::invalid_argument("x0: dimension mismatch");
    if (is_accelerated(alg_) && !ac_) throw std::invalid_argument("fedac: parameters required");
    if (!uses_composite(alg_) && cp_.reg.kind != RegKind::zero) {
      throw std::invalid_argument(to_string(alg_) + ": regularizer must be zero");
    }
    if (uses_composite(alg_) && !cp_.reg.feasible(cfg_.x0)) throw std::invalid_argument("x0: outside dom psi");
    steps_ = is_minibatch(alg_) ? 1 : cfg_.K;
    need_steps_ = cfg_.snapshots || cfg_.averaging == Averaging::rho_weighted || cfg_.averaging == Averaging::xhat;
  }

  RunRecord run() {
    RunRecord rec;
    rec.algorithm = alg_;
    rec.problem_kind = p_.kind();
    rec.problem_params = p_.params();
    rec.config = cfg_;
    rec.fedac = ac_;
    rec.regularizer = cp_.reg.name();
    rec.f_star = cfg_.f_star;
    const bool inert = cp_.reg.kind == RegKind::zero ||
                       (!cp_.reg.is_constraint() && cp_.reg.lambda == 0.0);
    if (inert) {
      if (auto opt = p_.optimum()) {
        if (!rec.f_star) rec.f_star = opt->value;
        rec.x_star = opt->x;
      }
    }

    ServerState s;
    s.x = cfg_.x0;
    s.x_ag = cfg_.x0;
    if (is_dual(alg_)) s.y = cp_.geo.grad_h(cfg_.x0);

    std::vector<RngStream> rngs;
    rngs.reserve(cfg_.M);
    for (std::size_t m = 0; m < cfg_.M; ++m) rngs.emplace_back(cfg_.seed, m);

    const double q = 1.0 - 0.5 * cfg_.eta_client * cfg_.mu;
    Vec rho_sum(p_.dim());
    double rho_weight = 0.0;
    RunningMean uniform_avg(p_.dim());
    RunningMean xhat_avg(p_.dim());

    for (std::size_t r = 0; r < cfg_.R; ++r) {
      const std::vector<std::size_t> clients = sample_clients(cfg_.seed, r, cfg_.M, cfg_.sample_size);
      std::vector<ClientOut> outs(clients.size());
      parallel_for(clients.size(), cfg_.workers, [&](std::size_t i) {
        outs[i] = run_client(s, r, clients[i], rngs[clients[i]]);
      });
      rec.grad_calls += clients.size() * cfg_.K;

      if (need_steps_) {
        for (std::size_t k = 0; k <= steps_; ++k) {
          if (cfg_.averaging == Averaging::rho_weighted && k < steps_) {
            std::vector<const Vec*> pts;
            for (const auto& o : outs) pts.push_back(is_accelerated(alg_) ? &o.sx_ag[k] : &o.sx[k]);
            const Vec bar = mean_of(pts);
            rho_sum = lincomb(q, rho_sum, 1.0, bar);
            rho_weight = q * rho_weight + 1.0;
          }
          if (cfg_.averaging == Averaging::xhat && k >= 1) xhat_avg.add(step_xhat(outs, r, k));
          if (cfg_.snapshots) rec.snapshots.push_back(snapshot(outs, clients, r, k));
        }
      }

      server_update(s, outs, r);

      if (!server_finite(s)) {
        rec.diverged = true;
        rec.diverged_round = r + 1;
        break;
      }

      const Vec natural = natural_output(s, r + 1);
      if (cfg_.averaging == Averaging::uniform) uniform_avg.add(natural);

      const std::size_t done = r + 1;
      if (done % cfg_.eval_every != 0 && done != cfg_.R) continue;

      Vec out;
      switch (cfg_.averaging) {
        case Averaging::final: out = natural; break;
        case Averaging::uniform: out = uniform_avg.value(); break;
        case Averaging::rho_weighted: out = (1.0 / rho_weight) * rho_sum; break;
        case Averaging::xhat: out = xhat_avg.value(); break;
      }
      const double obj = cp_.objective(out);
      if (!out.all_finite() || !std::isfinite(obj)) {
        rec.diverged = true;
        rec.diverged_round = done;
        break;
      }
      rec.series.push_back({done, kObjective, obj});
      if (rec.f_star) rec.series.push_back({done, kSuboptimality, obj - *rec.f_star});
      rec.series.push_back({done, kGradCalls, static_cast<double>(rec.grad_calls)});
      rec.outputs.emplace_back(done, std::move(out));
    }

    rec.final_x = is_dual(alg_) ? natural_output(s, cfg_.R) : s.x;
    if (is_accelerated(alg_)) rec.final_x_ag = s.x_ag;
    if (is_dual(alg_)) rec.final_y = s.y;
    return rec;
  }

 private:
  double eta_tilde(std::size_t r, std::size_t k) const {
    return dual_step_weight(cfg_.eta_client, cfg_.eta_server, cfg_.K, r, k);
  }

  Vec grad(std::size_t m, const Vec& x, RngStream& rng) const {
    const std::size_t pm = p_.homogeneous() ? m % p_.num_clients() : m;
    return p_.client_grad(pm, x, rng);
  }

  Vec client_conj(double eta, const Vec& y) const {
    if (alg_ == Algorithm::fedmid_osp || alg_ == Algorithm::feddualavg_osp) return cp_.geo.grad_h_conj(y);
    return conjugate_map(cp_.geo, cp_.reg, eta, y);
  }

  ClientOut run_client(const ServerState& s, std::size_t r, std::size_t m, RngStream& rng) const {
    ClientOut o;
    switch (alg_) {
      case Algorithm::fedavg: {
        Vec x = s.x;
        for (std::size_t k = 0; k < cfg_.K; ++k) {
          Vec g = grad(m, x, rng);
          if (need_steps_) o.sx.push_back(x), o.sg.push_back(g);
          axpy(-cfg_.eta_client, g, x);
        }
        if (need_steps_) o.sx.push_back(x);
        o.x = std::move(x);
        break;
      }
      case Algorithm::fedmid:
      case Algorithm::fedmid_osp: {
        Vec x = s.x;
        for (std::size_t k = 0; k < cfg_.K; ++k) {
          Vec g = grad(m, x, rng);
          if (need_steps_) o.sx.push_back(x), o.sg.push_back(g);
          Vec y = cp_.geo.grad_h(x);
          axpy(-cfg_.eta_client, g, y);
          x = client_conj(cfg_.eta_client, y);
        }
        if (need_steps_) o.sx.push_back(x);
        o.x = std::move(x);
        break;
      }
      case Algorithm::feddualavg:
      case Algorithm::feddualavg_osp: {
        Vec y = s.y;
        for (std::size_t k = 0; k < cfg_.K; ++k) {
          const Vec x = client_conj(eta_tilde(r, k), y);
          Vec g = grad(m, x, rng);
          if (need_steps_) o.sx.push_back(x), o.sy.push_back(y), o.sg.push_back(g);
          axpy(-cfg_.eta_client, g, y);
        }
        if (need_steps_) {
          o.sx.push_back(client_conj(eta_tilde(r, cfg_.K), y));
          o.sy.push_back(y);
        }
        o.y = std::move(y);
        break;
      }
      case Algorithm::fedac: {
        const FedAcParams& a = *ac_;
        AcState st{s.x, s.x_ag};
        for (std::size_t k = 0; k < cfg_.K; ++k) {
          const Vec x_md = ac_middle(st, a.beta);
          Vec g = grad(m, x_md, rng);
          if (need_steps_) o.sx.push_back(st.x), o.sx_ag.push_back(st.x_ag), o.sg.push_back(g);
          st = acsgd_step(st, x_md, g, a.alpha, a.beta, a.gamma, a.eta);
        }
        if (need_steps_) o.sx.push_back(st.x), o.sx_ag.push_back(st.x_ag);
        o.x = std::move(st.x);
        o.x_ag = std::move(st.x_ag);
        break;
      }
      case Algorithm::minibatch_sgd: {
        RunningMean gbar(p_.dim());
        for (std::size_t k = 0; k < cfg_.K; ++k) gbar.add(grad(m, s.x, rng));
        Vec x = s.x;
        axpy(-cfg_.eta_client, gbar.value(), x);
        if (need_steps_) o.sx = {s.x, x}, o.sg = {gbar.value()};
        o.x = std::move(x);
        break;
      }
      case Algorithm::minibatch_acsgd: {
        const FedAcParams& a = *ac_;
        const AcState st{s.x, s.x_ag};
        const Vec x_md = ac_middle(st, a.beta);
        RunningMean gbar(p_.dim());
        for (std::size_t k = 0; k < cfg_.K; ++k) gbar.add(grad(m, x_md, rng));
        AcState next = acsgd_step(st, x_md, gbar.value(), a.alpha, a.beta, a.gamma, a.eta);
        if (need_steps_) o.sx = {s.x, next.x}, o.sx_ag = {s.x_ag, next.x_ag}, o.sg = {gbar.value()};
        o.x = std::move(next.x);
        o.x_ag = std::move(next.x_ag);
        break;
      }
    }
    return o;
  }

  void server_update(ServerState& s, const std::vector<ClientOut>& outs, std::size_t /*r*/) const {
    std::vector<const Vec*> xs, xags, ys;
    for (const auto& o : outs) {
      xs.push_back(&o.x);
      xags.push_back(&o.x_ag);
      ys.push_back(&o.y);
    }
    switch (alg_) {
      case Algorithm::fedavg:
      case Algorithm::minibatch_sgd:
        s.x = combine(s.x, xs, cfg_.eta_server);
        break;
      case Algorithm::fedac:
      case Algorithm::minibatch_acsgd:
        s.x = combine(s.x, xs, cfg_.eta_server);
        s.x_ag = combine(s.x_ag, xags, cfg_.eta_server);
        break;
      case Algorithm::fedmid:
      case Algorithm::fedmid_osp: {
        std::vector<Vec> duals;
        duals.reserve(outs.size());
        for (const auto& o : outs) duals.push_back(cp_.geo.grad_h(o.x));
        std::vector<const Vec*> dp;
        for (const auto& d : duals) dp.push_back(&d);
        const Vec y = combine(cp_.geo.grad_h(s.x), dp, cfg_.eta_server);
        const double eta = cfg_.eta_server * cfg_.eta_client * static_cast<double>(cfg_.K);
        s.x = conjugate_map(cp_.geo, cp_.reg, eta, y);
        break;
      }
      case Algorithm::feddualavg:
      case Algorithm::feddualavg_osp:
        s.y = combine(s.y, ys, cfg_.eta_server);
        break;
    }
  }

  // Server output after `rounds` completed rounds.
  Vec natural_output(const ServerState& s, std::size_t rounds) const {
    if (is_dual(alg_)) return conjugate_map(cp_.geo, cp_.reg, eta_tilde(rounds, 0), s.y);
    if (is_accelerated(alg_)) return s.x_ag;
    return s.x;
  }

  bool server_finite(const ServerState& s) const {
    if (is_dual(alg_)) return s.y.all_finite();
    return s.x.all_finite() && (!is_accelerated(alg_) || s.x_ag.all_finite());
  }

  Vec step_xhat(const std::vector<ClientOut>& outs, std::size_t r, std::size_t k) const {
    std::vector<const Vec*> vs;
    if (is_dual(alg_)) {
      for (const auto& o : outs) vs.push_back(&o.sy[k]);
      return conjugate_map(cp_.geo, cp_.reg, eta_tilde(r, k), mean_of(vs));
    }
    for (const auto& o : outs) vs.push_back(is_accelerated(alg_) ? &o.sx_ag[k] : &o.sx[k]);
    return mean_of(vs);
  }

  StepSnapshot snapshot(const std::vector<ClientOut>& outs, const std::vector<std::size_t>& clients, std::size_t r,
                        std::size_t k) const {
    StepSnapshot snap{r, k, clients, {}, {}, {}, {}};
    for (const auto& o : outs) {
      snap.x.push_back(o.sx[k]);
      if (!o.sx_ag.empty()) snap.x_ag.push_back(o.sx_ag[k]);
      if (!o.sy.empty()) snap.y.push_back(o.sy[k]);
      if (k < o.sg.size()) snap.g.push_back(o.sg[k]);
    }
    return snap;
  }

  Algorithm alg_;
  const CompositeProblem& cp_;
  const Problem& p_;
  FedConfig cfg_;
  std::optional<FedAcParams> ac_;
  std::size_t steps_ = 1;
  bool need_steps_ = false;
};

CompositeProblem plain(const Problem& p) {
  CompositeProblem cp;
  cp.smooth = ProblemHandle(&p, [](const Problem*) {});
  return cp;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::fedavg: return "fedavg";
    case Algorithm::fedac: return "fedac";
    case Algorithm::fedmid: return "fedmid";
    case Algorithm::feddualavg: return "feddualavg";
    case Algorithm::fedmid_osp: return "fedmid_osp";
    case Algorithm::feddualavg_osp: return "feddualavg_osp";
    case Algorithm::minibatch_sgd: return "minibatch_sgd";
    case Algorithm::minibatch_acsgd: return "minibatch_acsgd";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::fedavg, Algorithm::fedac, Algorithm::fedmid, Algorithm::feddualavg,
                      Algorithm::fedmid_osp, Algorithm::feddualavg_osp, Algorithm::minibatch_sgd,
                      Algorithm::minibatch_acsgd}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("algorithm: unknown value '" + name + "'");
}

std::string to_string(Averaging a) {
  switch (a) {
    case Averaging::final: return "final";
    case Averaging::uniform: return "uniform";
    case Averaging::rho_weighted: return "rho_weighted";
    case Averaging::xhat: return "xhat";
  }
  return "unknown";
}

Averaging parse_averaging(const std::string& name) {
  for (Averaging a : {Averaging::final, Averaging::uniform, Averaging::rho_weighted, Averaging::xhat}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("averaging_mode: unknown value '" + name + "'");
}

std::string to_string(FedAcVariant v) {
  switch (v) {
    case FedAcVariant::I: return "I";
    case FedAcVariant::II: return "II";
    case FedAcVariant::vanilla: return "vanilla";
    case FedAcVariant::custom: return "custom";
  }
  return "unknown";
}

FedAcVariant parse_fedac_variant(const std::string& name) {
  for (FedAcVariant v : {FedAcVariant::I, FedAcVariant::II, FedAcVariant::vanilla, FedAcVariant::custom}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("fedac.variant: unknown value '" + name + "'");
}

void FedConfig::validate(std::size_t problem_clients) const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw std::invalid_argument(field + ": " + what);
  };
  const std::size_t m = M == 0 ? problem_clients : M;
  if (m == 0) fail("M", "must be >= 1");
  if (K == 0) fail("K", "must be >= 1");
  if (R == 0) fail("R", "must be >= 1");
  if (sample_size > m) fail("sample_size", "must be <= M");
  if (!(eta_client > 0.0) || !std::isfinite(eta_client)) fail("eta_client", "must be finite and > 0");
  if (!(eta_server > 0.0) || !std::isfinite(eta_server)) fail("eta_server", "must be finite and > 0");
  if (eval_every == 0) fail("eval_every", "must be >= 1");
  if (workers == 0) fail("workers", "must be >= 1");
  if (averaging == Averaging::rho_weighted && !(mu > 0.0)) fail("mu", "rho_weighted averaging needs mu > 0");
  if (!(mu >= 0.0)) fail("mu", "must be >= 0");
}

FedAcParams FedAcParams::make(FedAcVariant variant, double mu, double eta, std::size_t k) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("fedac.mu: must be finite and > 0");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("fedac.eta: must be finite and > 0");
  if (k == 0) throw std::invalid_argument("fedac.K: must be >= 1");
  FedAcParams p;
  p.variant = variant;
  p.mu = mu;
  p.eta = eta;
  switch (variant) {
    case FedAcVariant::I:
      p.gamma = std::max(std::sqrt(eta / (mu * static_cast<double>(k))), eta);
      p.alpha = 1.0 / (p.gamma * mu);
      p.beta = p.alpha + 1.0;
      break;
    case FedAcVariant::II:
      p.gamma = std::max(std::sqrt(eta / (mu * static_cast<double>(k))), eta);
      p.alpha = 1.5 / (p.gamma * mu) - 0.5;
      p.beta = (2.0 * p.alpha * p.alpha - 1.0) / (p.alpha - 1.0);
      break;
    case FedAcVariant::vanilla:
      p.gamma = std::sqrt(eta / mu);
      p.alpha = 1.0 / (p.gamma * mu);
      p.beta = p.alpha + 1.0;
      break;
    case FedAcVariant::custom:
      throw std::invalid_argument("fedac.variant: custom parameters use FedAcParams::custom");
  }
  if (!(p.alpha >= 1.0)) throw std::invalid_argument("fedac: alpha < 1 (gamma * mu too large)");
  if (variant == FedAcVariant::II && !(p.alpha > 1.0)) throw std::invalid_argument("fedac: alpha must exceed 1");
  return p;
}

FedAcParams FedAcParams::custom(double alpha, double beta, double gamma, double eta) {
  if (!(alpha >= 1.0)) throw std::invalid_argument("fedac.alpha: must be >= 1");
  if (!(beta >= 1.0)) throw std::invalid_argument("fedac.beta: must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("fedac.gamma: must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("fedac.eta: must be > 0");
  FedAcParams p;
  p.variant = FedAcVariant::custom;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  p.eta = eta;
  return p;
}

std::vector<double> RunRecord::metric(const std::string& name) const {
  std::vector<double> out;
  for (const auto& pt : series) {
    if (pt.name == name) out.push_back(pt.value);
  }
  return out;
}

std::optional<double> RunRecord::best(const std::string& name) const {
  std::optional<double> b;
  for (const auto& pt : series) {
    if (pt.name == name && std::isfinite(pt.value) && (!b || pt.value < *b)) b = pt.value;
  }
  return b;
}

double dual_step_weight(double eta_client, double eta_server, std::size_t k_steps, std::size_t r, std::size_t k) {
  return eta_client * (eta_server * static_cast<double>(r * k_steps) + static_cast<double>(k));
}

std::vector<std::size_t> sample_clients(std::uint64_t seed, std::size_t round, std::size_t m, std::size_t s) {
  if (s > m) throw std::invalid_argument("sample_size: must be <= M");
  std::vector<std::size_t> ids(m);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (s == m) return ids;
  RngStream rng(seed, (std::uint64_t{1} << 63) | static_cast<std::uint64_t>(round));
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(s);
  std::sort(ids.begin(), ids.end());
  return ids;
}

RunRecord run_algorithm(Algorithm a, const CompositeProblem& cp, const FedConfig& cfg,
                        const std::optional<FedAcParams>& fedac) {
  std::optional<FedAcParams> params = fedac;
  if (a == Algorithm::minibatch_acsgd) {
    if (!params) throw std::invalid_argument("minibatch_acsgd: mu required");
    params = FedAcParams::make(FedAcVariant::I, params->mu, cfg.eta_client, 1);
  }
  return Engine(a, cp, cfg, params).run();
}

RunRecord fedavg_run(const Problem& p, const FedConfig& cfg) {
  return run_algorithm(Algorithm::fedavg, plain(p), cfg);
}

RunRecord fedac_run(const Problem& p, const FedConfig& cfg, const FedAcParams& params) {
  return run_algorithm(Algorithm::fedac, plain(p), cfg, params);
}

RunRecord minibatch_sgd_run(const Problem& p, const FedConfig& cfg) {
  return run_algorithm(Algorithm::minibatch_sgd, plain(p), cfg);
}

RunRecord minibatch_acsgd_run(const Problem& p, const FedConfig& cfg, double mu) {
  FedAcParams seed_params;
  seed_params.mu = mu;
  return run_algorithm(Algorithm::minibatch_acsgd, plain(p), cfg, seed_params);
}

RunRecord fedmid_run(const CompositeProblem& cp, const FedConfig& cfg) {
  return run_algorithm(Algorithm::fedmid, cp, cfg);
}

RunRecord feddualavg_run(const CompositeProblem& cp, const FedConfig& cfg) {
  return run_algorithm(Algorithm::feddualavg, cp, cfg);
}

RunRecord fedmid_osp_run(const CompositeProblem& cp, const FedConfig& cfg) {
  return run_algorithm(Algorithm::fedmid_osp, cp, cfg);
}

RunRecord feddualavg_osp_run(const CompositeProblem& cp, const FedConfig& cfg) {
  return run_algorithm(Algorithm::feddualavg_osp, cp, cfg);
}

}  // namespace fedopt
