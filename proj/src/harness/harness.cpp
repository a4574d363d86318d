#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fedopt/harness/harness.hpp"
#include "fedopt/labs/labs.hpp"
#include "fedopt/numerics/parallel.hpp"

namespace fedopt {

namespace {

using nlohmann::json;

std::string short_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_support_metric(const std::string& m) {
  return m == "density" || m == "precision" || m == "recall" || m == "f1";
}

bool is_engine_metric(const std::string& m) { return m == kSuboptimality || m == kObjective || m == kGradCalls; }

const StepSnapshot* end_of_round(const RunRecord& rec, std::size_t round) {
  for (const StepSnapshot& s : rec.snapshots) {
    if (s.round + 1 == round && s.step == rec.config.K) return &s;
  }
  return nullptr;
}

std::optional<FedAcParams> fedac_params(const ExperimentSpec& spec, const CompositeProblem& cp, double eta) {
  if (spec.algorithm != Algorithm::fedac && spec.algorithm != Algorithm::minibatch_acsgd) return std::nullopt;
  const double mu = spec.fedac.mu ? *spec.fedac.mu : cp.smooth->constants().mu;
  if (!(mu > 0.0)) throw SpecError("algorithm.fedac.mu", "needs a positive strong-convexity estimate");
  if (spec.algorithm == Algorithm::minibatch_acsgd) {
    FedAcParams p;
    p.mu = mu;
    return p;
  }
  if (spec.fedac.variant == FedAcVariant::custom) {
    auto p = FedAcParams::custom(spec.fedac.alpha, spec.fedac.beta, spec.fedac.gamma, eta);
    p.mu = mu;
    return p;
  }
  try {
    return FedAcParams::make(spec.fedac.variant, mu, eta, spec.config.K);
  } catch (const std::invalid_argument& e) {
    throw SpecError("algorithm.fedac", e.what());
  }
}

std::string config_id(const ExperimentSpec& spec, double ec, double es) {
  return to_string(spec.algorithm) + "_K" + std::to_string(spec.config.K) + "_ec" + short_g(ec) + "_es" + short_g(es);
}

std::optional<double> best_of(const RunRecord& rec, const std::string& target) {
  const std::vector<double> v = rec.metric(target);
  std::optional<double> out;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    if (!out || (maximize(target) ? x > *out : x < *out)) out = x;
  }
  return out;
}

}  // namespace

std::vector<MetricPoint> evaluate_metrics(const RunRecord& rec, const CompositeProblem& cp,
                                          const std::vector<std::string>& metrics) {
  std::vector<MetricPoint> out;
  for (const std::string& m : metrics) {
    if (is_support_metric(m) && !cp.ground_truth) throw SpecError("metrics", m + " needs a known support");
    if (m == "rank" && cp.reg.kind != RegKind::nuclear) throw SpecError("metrics", "rank needs a nuclear-norm problem");
    if ((m == "potential_psi" || m == "potential_phi") && !rec.config.snapshots) {
      throw SpecError("metrics", m + " needs snapshots");
    }
    if ((m == "potential_psi" || m == "potential_phi") && !cp.smooth->optimum()) {
      throw SpecError("metrics", m + " needs a known optimum");
    }
    if (m == kSuboptimality && !rec.f_star) throw SpecError("metrics", "suboptimality needs a known optimum");
  }
  for (const auto& [round, x] : rec.outputs) {
    for (const std::string& m : metrics) {
      if (is_engine_metric(m)) continue;
      if (!x.all_finite() && (is_support_metric(m) || m == "rank")) {
        out.push_back({round, m, std::nan("")});
        continue;
      }
      if (is_support_metric(m)) {
        const SupportMetrics s = support_metrics(x, *cp.ground_truth);
        const double v = m == "density" ? s.density : m == "precision" ? s.precision : m == "recall" ? s.recall : s.f1;
        out.push_back({round, m, v});
      } else if (m == "rank") {
        out.push_back({round, m, static_cast<double>(recovered_rank(x, cp.reg.rows, cp.reg.cols))});
      } else {
        const StepSnapshot* snap = end_of_round(rec, round);
        if (!snap) continue;
        RunRecord one;
        one.config = rec.config;
        one.snapshots.push_back(*snap);
        const PotentialPoint pp = potentials(one, *cp.smooth, rec.config.mu > 0.0 ? rec.config.mu : cp.smooth->constants().mu).front();
        out.push_back({round, m, m == "potential_psi" ? pp.psi : pp.phi});
      }
    }
  }
  return out;
}

void attach_metrics(RunRecord& rec, const CompositeProblem& cp, const std::vector<std::string>& metrics) {
  const std::vector<MetricPoint> extra = evaluate_metrics(rec, cp, metrics);
  if (extra.empty()) return;
  std::vector<MetricPoint> merged;
  merged.reserve(rec.series.size() + extra.size());
  std::size_t i = 0, j = 0;
  while (i < rec.series.size() || j < extra.size()) {
    const std::size_t round = i < rec.series.size() ? rec.series[i].round : extra[j].round;
    while (i < rec.series.size() && rec.series[i].round == round) merged.push_back(rec.series[i++]);
    while (j < extra.size() && extra[j].round == round) merged.push_back(extra[j++]);
  }
  rec.series = std::move(merged);
}

SweepResult sweep(const ExperimentSpec& spec, std::size_t workers) {
  const BuiltProblem built = build_problem(spec.problem);
  {
    FedConfig probe = spec.config;
    try {
      probe.validate(built.cp.smooth->num_clients());
    } catch (const std::invalid_argument& e) {
      const std::string w = e.what();
      const std::size_t colon = w.find(": ");
      throw SpecError("config." + w.substr(0, colon), w.substr(colon + 2));
    }
    if (probe.x0.size() > 0 && probe.x0.size() != built.cp.smooth->dim()) {
      throw SpecError("config.x0", "length must equal the problem dimension");
    }
    for (const auto& m : spec.metrics) {
      if (is_support_metric(m) && !built.cp.ground_truth) throw SpecError("metrics", m + " needs a known support");
      if (m == "rank" && built.cp.reg.kind != RegKind::nuclear) {
        throw SpecError("metrics", "rank needs a nuclear-norm problem");
      }
    }
    if (spec.target == kSuboptimality && !built.f_star) throw SpecError("target", "suboptimality needs a known optimum");
  }

  SweepResult res;
  res.spec = spec;
  for (double ec : spec.eta_client) {
    for (double es : spec.eta_server) res.points.push_back({config_id(spec, ec, es), ec, es, {}, std::nullopt});
  }
  std::vector<std::string> extra = spec.metrics;
  if (std::find(extra.begin(), extra.end(), spec.target) == extra.end()) extra.push_back(spec.target);

  parallel_for(res.points.size(), workers, [&](std::size_t i) {
    GridPoint& gp = res.points[i];
    FedConfig cfg = spec.config;
    cfg.eta_client = gp.eta_client;
    cfg.eta_server = gp.eta_server;
    cfg.workers = 1;
    if (built.f_star && !cfg.f_star) cfg.f_star = built.f_star;
    gp.record = run_algorithm(spec.algorithm, built.cp, cfg, fedac_params(spec, built.cp, gp.eta_client));
    attach_metrics(gp.record, built.cp, extra);
    gp.best = best_of(gp.record, spec.target);
  });

  res.ranking.resize(res.points.size());
  for (std::size_t i = 0; i < res.ranking.size(); ++i) res.ranking[i] = i;
  const bool up = maximize(spec.target);
  std::stable_sort(res.ranking.begin(), res.ranking.end(), [&](std::size_t a, std::size_t b) {
    const GridPoint& pa = res.points[a];
    const GridPoint& pb = res.points[b];
    if (pa.best.has_value() != pb.best.has_value()) return pa.best.has_value();
    if (pa.best && *pa.best != *pb.best) return up ? *pa.best > *pb.best : *pa.best < *pb.best;
    if (pa.eta_client != pb.eta_client) return pa.eta_client < pb.eta_client;
    return pa.eta_server < pb.eta_server;
  });
  if (!res.ranking.empty() && res.points[res.ranking.front()].best) res.winner = res.ranking.front();
  return res;
}

SweepResult run_experiment(const ExperimentSpec& spec, std::size_t workers) {
  if (spec.grid_size() != 1) throw SpecError("algorithm.eta_client", "a single run takes one step size per field");
  return sweep(spec, workers);
}

std::vector<CompareRow> compare(const std::vector<ExperimentSpec>& specs, std::size_t workers) {
  if (specs.empty()) throw std::invalid_argument("compare: no experiments");
  for (const auto& s : specs) {
    if (s.problem != specs.front().problem) {
      throw std::invalid_argument("compare: " + s.name + " uses a different problem than " + specs.front().name);
    }
  }
  std::vector<CompareRow> rows;
  for (const auto& s : specs) {
    const SweepResult res = sweep(s, workers);
    const GridPoint& gp = res.points[res.winner ? *res.winner : res.ranking.front()];
    const FedConfig& c = gp.record.config;
    const std::size_t m = c.M;
    const std::size_t budget = (c.sample_size ? c.sample_size : m) * c.K * c.R;
    rows.push_back({s.name, s.algorithm, c.K, m, gp.eta_client, gp.eta_server, gp.best, budget});
  }
  for (const auto& r : rows) {
    if (r.grad_calls != rows.front().grad_calls) {
      throw std::invalid_argument("compare: gradient budget of " + r.name + " (" + std::to_string(r.grad_calls) +
                                  ") differs from " + rows.front().name + " (" +
                                  std::to_string(rows.front().grad_calls) + ")");
    }
  }
  return rows;
}

std::string results_json(const SweepResult& res) {
  json j;
  j["schema"] = kResultsSchema;
  j["spec"] = experiment_to_json(res.spec);
  j["target"] = res.spec.target;
  j["winner"] = res.winner ? json(res.points[*res.winner].config_id) : json(nullptr);
  json ranking = json::array();
  for (std::size_t i : res.ranking) {
    const GridPoint& gp = res.points[i];
    ranking.push_back({{"config_id", gp.config_id},
                       {"eta_client", gp.eta_client},
                       {"eta_server", gp.eta_server},
                       {"best", gp.best ? json(*gp.best) : json(nullptr)},
                       {"diverged", gp.record.diverged}});
  }
  j["ranking"] = ranking;
  json runs = json::array();
  for (const GridPoint& gp : res.points) {
    runs.push_back({{"config_id", gp.config_id}, {"record", json::parse(to_json(gp.record, -1))}});
  }
  j["runs"] = runs;
  return j.dump(2) + "\n";
}

std::string metrics_csv(const SweepResult& res) {
  std::string out = std::string(kMetricsCsvHeader) + "\n";
  for (const GridPoint& gp : res.points) out += to_csv_rows(gp.record, gp.config_id);
  return out;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = "name,algorithm,K,M,eta_client,eta_server,best,grad_calls\n";
  for (const auto& r : rows) {
    out += r.name + "," + to_string(r.algorithm) + "," + std::to_string(r.K) + "," + std::to_string(r.M) + "," +
           g17(r.eta_client) + "," + g17(r.eta_server) + "," + (r.best ? g17(*r.best) : "") + "," +
           std::to_string(r.grad_calls) + "\n";
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_results(const SweepResult& res, const std::string& dir) {
  const std::filesystem::path d(dir);
  write_text((d / "results.json").string(), results_json(res));
  write_text((d / "metrics.csv").string(), metrics_csv(res));
}

std::string report(const std::string& dir) {
  const std::filesystem::path d(dir);
  std::ostringstream out;
  char line[256];
  if (std::filesystem::exists(d / "results.json")) {
    const json j = json::parse(read_text((d / "results.json").string()));
    out << "experiment " << j.at("spec").at("name").get<std::string>() << ", target "
        << j.at("target").get<std::string>() << "\n";
    out << "winner " << (j.at("winner").is_null() ? std::string("none") : j.at("winner").get<std::string>()) << "\n";
    for (const auto& r : j.at("ranking")) {
      const std::string best = r.at("best").is_null() ? "n/a" : g17(r.at("best").get<double>());
      std::snprintf(line, sizeof line, "  %-40s %s%s\n", r.at("config_id").get<std::string>().c_str(), best.c_str(),
                    r.at("diverged").get<bool>() ? " (diverged)" : "");
      out << line;
    }
    return out.str();
  }
  if (std::filesystem::exists(d / "compare.json")) {
    const json j = json::parse(read_text((d / "compare.json").string()));
    out << "comparison, target " << j.at("target").get<std::string>() << "\n";
    for (const auto& r : j.at("rows")) {
      const std::string best = r.at("best").is_null() ? "n/a" : g17(r.at("best").get<double>());
      std::snprintf(line, sizeof line, "  %-24s %-16s K=%zu eta_c=%g best=%s\n", r.at("name").get<std::string>().c_str(),
                    r.at("algorithm").get<std::string>().c_str(), r.at("K").get<std::size_t>(),
                    r.at("eta_client").get<double>(), best.c_str());
      out << line;
    }
    return out.str();
  }
  if (std::filesystem::exists(d / "summary.json")) {
    const json j = json::parse(read_text((d / "summary.json").string()));
    out << "lab " << j.at("lab").get<std::string>() << ": " << (j.at("pass").get<bool>() ? "PASS" : "FAIL") << "\n";
    for (const auto& c : j.at("checks")) {
      out << "  [" << (c.at("pass").get<bool>() ? "pass" : "FAIL") << "] " << c.at("name").get<std::string>() << ": "
          << c.at("detail").get<std::string>() << "\n";
    }
    return out.str();
  }
  throw std::runtime_error("no results.json, compare.json or summary.json in " + dir);
}

}  // namespace fedopt
