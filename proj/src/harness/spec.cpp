#include <algorithm>
#include <cmath>
#include <set>

#include "fedopt/harness/harness.hpp"
#include "fedopt/sequential/sequential.hpp"

namespace fedopt {

namespace {

using nlohmann::json;

// Typed access to one JSON object that rejects unread keys on finish().
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SpecError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw SpecError(at(key), "missing required field");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw SpecError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SpecError(at(key), "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::size_t count(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw SpecError(at(key), "expected a non-negative integer");
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) { return has(key) ? count(key) : fallback; }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw SpecError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw SpecError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    std::vector<double> out;
    if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_array() && !v.empty()) {
      for (const auto& e : v) {
        if (!e.is_number()) throw SpecError(at(key), "expected numbers");
        out.push_back(e.get<double>());
      }
    } else {
      throw SpecError(at(key), "expected a number or a non-empty array of numbers");
    }
    for (double d : out) {
      if (!std::isfinite(d)) throw SpecError(at(key), "must be finite");
    }
    return out;
  }

  Vec vec(const std::string& key) { return Vec(numbers(key)); }

  Mat matrix(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array() || v.empty() || !v[0].is_array()) throw SpecError(at(key), "expected an array of rows");
    const std::size_t rows = v.size(), cols = v[0].size();
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      if (!v[i].is_array() || v[i].size() != cols) throw SpecError(at(key), "rows must have equal length");
      for (std::size_t c = 0; c < cols; ++c) {
        if (!v[i][c].is_number()) throw SpecError(at(key), "expected numbers");
        m(i, c) = v[i][c].get<double>();
      }
    }
    return m;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw SpecError(at(k), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Regularizer read_regularizer(Reader& r) {
  const std::string kind = r.text("kind");
  const std::size_t tail = r.count("unpenalized", 0);
  Regularizer reg;
  try {
    if (kind == "zero") {
      reg = Regularizer::zero();
    } else if (kind == "l1") {
      reg = Regularizer::l1(r.number("lambda"), tail);
    } else if (kind == "l2_square") {
      reg = Regularizer::l2_square(r.number("lambda"), tail);
    } else if (kind == "l2_ball") {
      reg = Regularizer::l2_ball(r.number("radius"), tail);
    } else if (kind == "l1_ball") {
      reg = Regularizer::l1_ball(r.number("radius"), tail);
    } else if (kind == "nuclear") {
      reg = Regularizer::nuclear(r.number("lambda"), r.count("rows"), r.count("cols"), tail);
    } else {
      throw SpecError(r.at("kind"), "unknown regularizer '" + kind + "'");
    }
  } catch (const SpecError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SpecError(r.at("kind"), e.what());
  }
  r.finish();
  return reg;
}

CompositeProblem smooth_only(ProblemHandle p) { return CompositeProblem{std::move(p), {}, Geometry::euclidean(), {}, {}, {}}; }

CompositeProblem build_cp(const json& j) {
  Reader r(j, "problem");
  const std::string kind = r.text("kind");
  CompositeProblem cp;
  bool allow_reg = true;
  if (kind == "quadratic") {
    Mat a = r.has("matrix") ? r.matrix("matrix") : Mat::diag(r.vec("diag"));
    Vec c = r.has("linear") ? r.vec("linear") : Vec(a.rows());
    std::vector<Vec> shifts;
    if (r.has("shifts")) {
      const Mat s = r.matrix("shifts");
      for (std::size_t i = 0; i < s.rows(); ++i) shifts.emplace_back(std::vector<double>(s.row(i), s.row(i) + s.cols()));
    }
    cp = smooth_only(make_quadratic(a, c, shifts, r.number("sigma", 0.0), r.count("clients", 1)));
  } else if (kind == "logreg") {
    const double lambda = r.number("lambda");
    if (r.has("data")) {
      cp = smooth_only(make_logreg(read_dataset_csv(r.text("data")), lambda));
    } else {
      const Dataset d = make_synthetic_classification(r.count("samples"), r.count("dim"), r.count("clients"),
                                                      static_cast<std::uint64_t>(r.count("seed", 0)));
      cp = smooth_only(make_logreg(d, lambda));
    }
  } else if (kind == "least_squares") {
    cp = smooth_only(make_least_squares(read_dataset_csv(r.text("data")), r.count("batch_size", 10)));
  } else if (kind == "lasso" || kind == "lowrank") {
    SyntheticOptions opts;
    opts.noiseless = r.flag("noiseless", false);
    opts.batch_size = r.count("batch_size", 10);
    const auto seed = static_cast<std::uint64_t>(r.count("seed", 0));
    if (kind == "lasso") {
      cp = make_lasso_synthetic(r.count("d1"), r.count("d0"), r.count("clients"), r.count("samples_per_client"),
                                r.number("lambda"), seed, opts);
    } else {
      cp = make_lowrank_synthetic(r.count("d"), r.count("r"), r.count("clients"), r.count("samples_per_client"),
                                  r.number("lambda"), seed, opts);
    }
    allow_reg = false;
  } else if (kind == "lb4d") {
    cp = smooth_only(make_lb4d(r.number("L"), r.number("sigma", 0.0), r.number("mu"), r.number("zeta_star"),
                               r.count("clients", 2)));
  } else if (kind == "piecewise") {
    cp = smooth_only(make_piecewise_quadratic(r.number("L"), r.number("sigma")));
  } else if (kind == "bias_demo") {
    cp = smooth_only(make_bias_demo());
  } else if (kind == "logcosh") {
    cp = smooth_only(make_logcosh_instance(r.number("L"), r.number("Q"), r.number("sigma")));
  } else {
    throw SpecError("problem.kind", "unknown problem '" + kind + "'");
  }
  if (r.has("regularizer")) {
    if (!allow_reg) throw SpecError("problem.regularizer", "the " + kind + " problem fixes its own regularizer");
    Reader rr(r.raw("regularizer"), "problem.regularizer");
    cp.reg = read_regularizer(rr);
  }
  r.finish();
  return cp;
}

}  // namespace

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names{kSuboptimality, kObjective, "density", "precision", "recall", "f1",
                                              "rank", "potential_psi", "potential_phi", kGradCalls};
  return names;
}

bool maximize(const std::string& target) { return target == "f1" || target == "precision" || target == "recall"; }

BuiltProblem build_problem(const nlohmann::json& problem) {
  BuiltProblem b;
  try {
    b.cp = build_cp(problem);
  } catch (const SpecError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SpecError("problem", e.what());
  }
  const Regularizer& reg = b.cp.reg;
  const bool inert = reg.kind == RegKind::zero || (!reg.is_constraint() && reg.lambda == 0.0);
  if (inert) {
    if (auto opt = b.cp.smooth->optimum()) b.f_star = opt->value;
  } else if (std::isfinite(b.cp.smooth->constants().L)) {
    b.f_star = solve_composite(b.cp, 200000, 1e-12).value;
  }
  return b;
}

ExperimentSpec parse_experiment(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SpecError("line " + std::to_string(line) + " column " + std::to_string(col), "malformed JSON");
  }

  Reader root(j, "");
  ExperimentSpec s;
  const std::string schema = root.text("schema");
  if (schema != kExperimentSchema) throw SpecError("schema", "unsupported version '" + schema + "'");
  s.name = root.text("name", "experiment");
  s.problem = root.raw("problem");
  if (!s.problem.is_object() || !s.problem.contains("kind")) throw SpecError("problem.kind", "missing required field");

  {
    Reader a(root.raw("algorithm"), "algorithm");
    try {
      s.algorithm = parse_algorithm(a.text("kind"));
    } catch (const std::invalid_argument& e) {
      throw SpecError("algorithm.kind", e.what());
    }
    s.eta_client = a.numbers("eta_client");
    s.eta_server = a.has("eta_server") ? a.numbers("eta_server") : std::vector<double>{1.0};
    for (double v : s.eta_client) {
      if (!(v > 0.0)) throw SpecError("algorithm.eta_client", "must be > 0");
    }
    for (double v : s.eta_server) {
      if (!(v > 0.0)) throw SpecError("algorithm.eta_server", "must be > 0");
    }
    auto unique = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return std::adjacent_find(v.begin(), v.end()) == v.end();
    };
    if (!unique(s.eta_client)) throw SpecError("algorithm.eta_client", "grid values must be distinct");
    if (!unique(s.eta_server)) throw SpecError("algorithm.eta_server", "grid values must be distinct");
    if (a.has("fedac")) {
      Reader f(a.raw("fedac"), "algorithm.fedac");
      try {
        s.fedac.variant = parse_fedac_variant(f.text("variant", "I"));
      } catch (const std::invalid_argument& e) {
        throw SpecError("algorithm.fedac.variant", e.what());
      }
      if (f.has("mu")) {
        s.fedac.mu = f.number("mu");
        if (!(*s.fedac.mu > 0.0)) throw SpecError("algorithm.fedac.mu", "must be > 0");
      }
      if (s.fedac.variant == FedAcVariant::custom) {
        s.fedac.alpha = f.number("alpha");
        s.fedac.beta = f.number("beta");
        s.fedac.gamma = f.number("gamma");
      }
      f.finish();
    }
    a.finish();
  }

  {
    Reader c(root.raw("config"), "config");
    FedConfig& f = s.config;
    f.M = c.count("M", 0);
    f.K = c.count("K");
    f.R = c.count("R");
    f.sample_size = c.count("sample_size", 0);
    f.seed = static_cast<std::uint64_t>(c.count("seed", 0));
    try {
      f.averaging = parse_averaging(c.text("averaging_mode", "final"));
    } catch (const std::invalid_argument& e) {
      throw SpecError("config.averaging_mode", e.what());
    }
    f.eval_every = c.count("eval_every", 1);
    f.mu = c.number("mu", 0.0);
    f.snapshots = c.flag("snapshots", false);
    if (c.has("x0")) f.x0 = c.vec("x0");
    c.finish();
    try {
      FedConfig probe = f;
      probe.eta_client = s.eta_client.front();
      probe.eta_server = s.eta_server.front();
      probe.validate(f.M == 0 ? std::max<std::size_t>(1, f.sample_size) : f.M);
    } catch (const std::invalid_argument& e) {
      const std::string w = e.what();
      const std::size_t colon = w.find(": ");
      throw SpecError("config." + w.substr(0, colon), w.substr(colon + 2));
    }
  }

  if (root.has("metrics")) {
    const json& m = root.raw("metrics");
    if (!m.is_array()) throw SpecError("metrics", "expected an array of names");
    for (const auto& e : m) {
      if (!e.is_string()) throw SpecError("metrics", "expected an array of names");
      const std::string name = e.get<std::string>();
      const auto& known = known_metrics();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        throw SpecError("metrics", "unknown metric '" + name + "'");
      }
      s.metrics.push_back(name);
    }
  }
  s.target = root.text("target", kSuboptimality);
  {
    const auto& known = known_metrics();
    if (std::find(known.begin(), known.end(), s.target) == known.end()) {
      throw SpecError("target", "unknown metric '" + s.target + "'");
    }
  }
  s.output = root.text("output", "");
  root.finish();

  if ((s.config.averaging == Averaging::rho_weighted) && !(s.config.mu > 0.0)) {
    throw SpecError("config.mu", "rho_weighted averaging needs mu > 0");
  }
  for (const auto& m : s.metrics) {
    if ((m == "potential_psi" || m == "potential_phi") && !s.config.snapshots) {
      throw SpecError("config.snapshots", "potential metrics need snapshots");
    }
  }
  return s;
}

ExperimentSpec load_experiment(const std::string& path) { return parse_experiment(read_text(path)); }

nlohmann::json experiment_to_json(const ExperimentSpec& s) {
  json j;
  j["schema"] = kExperimentSchema;
  j["name"] = s.name;
  j["problem"] = s.problem;
  json a;
  a["kind"] = to_string(s.algorithm);
  a["eta_client"] = s.eta_client;
  a["eta_server"] = s.eta_server;
  if (s.algorithm == Algorithm::fedac || s.algorithm == Algorithm::minibatch_acsgd) {
    json f;
    f["variant"] = to_string(s.fedac.variant);
    if (s.fedac.mu) f["mu"] = *s.fedac.mu;
    if (s.fedac.variant == FedAcVariant::custom) {
      f["alpha"] = s.fedac.alpha;
      f["beta"] = s.fedac.beta;
      f["gamma"] = s.fedac.gamma;
    }
    a["fedac"] = f;
  }
  j["algorithm"] = a;
  const FedConfig& f = s.config;
  json c;
  c["M"] = f.M;
  c["K"] = f.K;
  c["R"] = f.R;
  c["sample_size"] = f.sample_size;
  c["seed"] = f.seed;
  c["averaging_mode"] = to_string(f.averaging);
  c["eval_every"] = f.eval_every;
  c["mu"] = f.mu;
  c["snapshots"] = f.snapshots;
  if (f.x0.size() > 0) c["x0"] = f.x0.values();
  j["config"] = c;
  j["metrics"] = s.metrics;
  j["target"] = s.target;
  j["output"] = s.output;
  return j;
}

}  // namespace fedopt
