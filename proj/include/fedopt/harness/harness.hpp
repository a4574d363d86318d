#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedopt/federated/federated.hpp"
#include "fedopt/problems/problem.hpp"

namespace fedopt {

inline constexpr const char* kExperimentSchema = "fedopt.experiment/1";
inline constexpr const char* kResultsSchema = "fedopt.results/1";
inline constexpr const char* kCompareSchema = "fedopt.compare/1";

/// Validation failure; `field` is a dotted path such as "config.K".
class SpecError : public std::invalid_argument {
 public:
  SpecError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Metric names accepted in an experiment's metric list.
const std::vector<std::string>& known_metrics();

struct FedAcSpec {
  FedAcVariant variant = FedAcVariant::I;
  /// Strong-convexity estimate; empty means the problem's μ.
  std::optional<double> mu;
  // custom variant only
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
};

/// A parsed and validated experiment. Grids over η_client × η_server are
/// expanded in row-major order (η_client outer).
struct ExperimentSpec {
  std::string name;
  nlohmann::json problem;  // {"kind": ..., parameters}
  Algorithm algorithm = Algorithm::fedavg;
  FedAcSpec fedac;
  std::vector<double> eta_client;
  std::vector<double> eta_server;
  FedConfig config;  // eta fields are overwritten per grid point
  std::vector<std::string> metrics;
  std::string target = kSuboptimality;
  std::string output;

  std::size_t grid_size() const { return eta_client.size() * eta_server.size(); }
};

/// Parses and validates; throws SpecError naming the offending field (or the
/// line and column for malformed JSON).
ExperimentSpec parse_experiment(const std::string& text);
ExperimentSpec load_experiment(const std::string& path);
nlohmann::json experiment_to_json(const ExperimentSpec& spec);

/// The instance described by a problem block.
struct BuiltProblem {
  CompositeProblem cp;
  std::optional<double> f_star;  // optimal composite objective, when computable
};

BuiltProblem build_problem(const nlohmann::json& problem);

/// Adds the requested metrics to each evaluation round of the record, after
/// the engine's own rows, so JSON and CSV stay in one-to-one correspondence.
/// Throws SpecError when a metric needs metadata the problem lacks.
std::vector<MetricPoint> evaluate_metrics(const RunRecord& rec, const CompositeProblem& cp,
                                          const std::vector<std::string>& metrics);
void attach_metrics(RunRecord& rec, const CompositeProblem& cp, const std::vector<std::string>& metrics);

struct GridPoint {
  std::string config_id;
  double eta_client;
  double eta_server;
  RunRecord record;
  std::optional<double> best;  // best target value over evaluations
};

struct SweepResult {
  ExperimentSpec spec;
  std::vector<GridPoint> points;  // grid order
  std::vector<std::size_t> ranking;  // indices, best first
  std::optional<std::size_t> winner;
};

/// Higher is better for these targets; lower for everything else.
bool maximize(const std::string& target);

/// Runs every grid point (in parallel over `workers`) and ranks them. Ties go
/// to the smaller η_client, then the smaller η_server; runs with no finite
/// evaluation rank last.
SweepResult sweep(const ExperimentSpec& spec, std::size_t workers = 1);
/// A single-point sweep.
SweepResult run_experiment(const ExperimentSpec& spec, std::size_t workers = 1);

struct CompareRow {
  std::string name;
  Algorithm algorithm;
  std::size_t K;
  std::size_t M;
  double eta_client;
  double eta_server;
  std::optional<double> best;
  std::size_t grad_calls;
};

/// Best target value per experiment. Throws std::invalid_argument when the
/// problems differ or the gradient budgets (S·K·R) disagree.
std::vector<CompareRow> compare(const std::vector<ExperimentSpec>& specs, std::size_t workers = 1);

// ---- persistence ----------------------------------------------------------------

/// results.json text: spec echo, every grid point's record and the ranking.
std::string results_json(const SweepResult& res);
/// metrics.csv text with header `round,metric,value,config_id`.
std::string metrics_csv(const SweepResult& res);
std::string compare_csv(const std::vector<CompareRow>& rows);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Writes results.json and metrics.csv into `dir` (created if needed).
void write_results(const SweepResult& res, const std::string& dir);

/// Plain-text summary of a results.json, compare.json or lab summary.json in `dir`.
std::string report(const std::string& dir);

}  // namespace fedopt
