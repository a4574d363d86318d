#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "fedopt/federated/federated.hpp"

namespace fedopt {

namespace {

using nlohmann::json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double to_num(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Vec vec_from(const json& j) {
  std::vector<double> v;
  for (const auto& e : j) v.push_back(to_num(e));
  return Vec(std::move(v));
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw std::invalid_argument(std::string("run record: missing field '") + name + "'");
  return j.at(name);
}

}  // namespace

std::string to_json(const RunRecord& rec, int indent) {
  json j;
  j["schema"] = kRunSchema;
  j["algorithm"] = to_string(rec.algorithm);

  json prob;
  prob["kind"] = rec.problem_kind;
  json params = json::object();
  for (const auto& [k, v] : rec.problem_params) params[k] = num(v);
  prob["params"] = params;
  prob["regularizer"] = rec.regularizer;
  prob["f_star"] = rec.f_star ? num(*rec.f_star) : json(nullptr);
  prob["x_star"] = rec.x_star ? vec_json(*rec.x_star) : json(nullptr);
  j["problem"] = prob;

  const FedConfig& c = rec.config;
  json cfg;
  cfg["M"] = c.M;
  cfg["K"] = c.K;
  cfg["R"] = c.R;
  cfg["eta_client"] = num(c.eta_client);
  cfg["eta_server"] = num(c.eta_server);
  cfg["sample_size"] = c.sample_size;
  cfg["seed"] = c.seed;
  cfg["averaging_mode"] = to_string(c.averaging);
  cfg["eval_every"] = c.eval_every;
  cfg["mu"] = num(c.mu);
  j["config"] = cfg;

  if (rec.fedac) {
    const FedAcParams& a = *rec.fedac;
    j["fedac"] = {{"variant", to_string(a.variant)}, {"mu", num(a.mu)},       {"eta", num(a.eta)},
                  {"gamma", num(a.gamma)},           {"alpha", num(a.alpha)}, {"beta", num(a.beta)}};
  } else {
    j["fedac"] = nullptr;
  }

  j["grad_calls"] = rec.grad_calls;
  j["diverged"] = rec.diverged;
  j["diverged_round"] = rec.diverged_round;

  json series = json::array();
  for (const auto& pt : rec.series) series.push_back({{"round", pt.round}, {"metric", pt.name}, {"value", num(pt.value)}});
  j["series"] = series;

  json fin;
  fin["x"] = vec_json(rec.final_x);
  fin["x_ag"] = vec_json(rec.final_x_ag);
  fin["y"] = vec_json(rec.final_y);
  j["final"] = fin;
  return j.dump(indent);
}

RunRecord run_record_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (field(j, "schema").get<std::string>() != kRunSchema) {
    throw std::invalid_argument("run record: unsupported schema '" + j.at("schema").get<std::string>() + "'");
  }
  RunRecord rec;
  rec.algorithm = parse_algorithm(field(j, "algorithm").get<std::string>());

  const json& prob = field(j, "problem");
  rec.problem_kind = field(prob, "kind").get<std::string>();
  for (const auto& [k, v] : field(prob, "params").items()) rec.problem_params[k] = to_num(v);
  rec.regularizer = field(prob, "regularizer").get<std::string>();
  if (!field(prob, "f_star").is_null()) rec.f_star = to_num(prob.at("f_star"));
  if (!field(prob, "x_star").is_null()) rec.x_star = vec_from(prob.at("x_star"));

  const json& cfg = field(j, "config");
  FedConfig& c = rec.config;
  c.M = field(cfg, "M").get<std::size_t>();
  c.K = field(cfg, "K").get<std::size_t>();
  c.R = field(cfg, "R").get<std::size_t>();
  c.eta_client = to_num(field(cfg, "eta_client"));
  c.eta_server = to_num(field(cfg, "eta_server"));
  c.sample_size = field(cfg, "sample_size").get<std::size_t>();
  c.seed = field(cfg, "seed").get<std::uint64_t>();
  c.averaging = parse_averaging(field(cfg, "averaging_mode").get<std::string>());
  c.eval_every = field(cfg, "eval_every").get<std::size_t>();
  c.mu = to_num(field(cfg, "mu"));

  if (!field(j, "fedac").is_null()) {
    const json& a = j.at("fedac");
    FedAcParams p;
    p.variant = parse_fedac_variant(field(a, "variant").get<std::string>());
    p.mu = to_num(field(a, "mu"));
    p.eta = to_num(field(a, "eta"));
    p.gamma = to_num(field(a, "gamma"));
    p.alpha = to_num(field(a, "alpha"));
    p.beta = to_num(field(a, "beta"));
    rec.fedac = p;
  }

  rec.grad_calls = field(j, "grad_calls").get<std::size_t>();
  rec.diverged = field(j, "diverged").get<bool>();
  rec.diverged_round = field(j, "diverged_round").get<std::size_t>();
  for (const auto& pt : field(j, "series")) {
    rec.series.push_back(
        {field(pt, "round").get<std::size_t>(), field(pt, "metric").get<std::string>(), to_num(field(pt, "value"))});
  }
  const json& fin = field(j, "final");
  rec.final_x = vec_from(field(fin, "x"));
  rec.final_x_ag = vec_from(field(fin, "x_ag"));
  rec.final_y = vec_from(field(fin, "y"));
  return rec;
}

std::string to_csv_rows(const RunRecord& rec, const std::string& config_id) {
  std::string out;
  char buf[64];
  for (const auto& pt : rec.series) {
    std::snprintf(buf, sizeof buf, "%.17g", pt.value);
    out += std::to_string(pt.round) + "," + pt.name + "," + buf + "," + config_id + "\n";
  }
  return out;
}

}  // namespace fedopt
