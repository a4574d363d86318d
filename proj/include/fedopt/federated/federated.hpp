#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedopt/problems/problem.hpp"
#include "fedopt/sequential/sequential.hpp"

namespace fedopt {

enum class Algorithm {
  fedavg,
  fedac,
  fedmid,
  feddualavg,
  fedmid_osp,
  feddualavg_osp,
  minibatch_sgd,
  minibatch_acsgd,
};

std::string to_string(Algorithm a);
/// Throws std::invalid_argument naming the unknown value.
Algorithm parse_algorithm(const std::string& name);

/// Which iterate is evaluated at each checkpoint.
///  final:        the server's current output
///  uniform:      uniform average of the server outputs so far
///  rho_weighted: Σ ρ^{(r,k)} x̄^{(r,k)}, ρ ∝ (1 − ½ημ)^{T − t − 1} over steps t < T so far
///  xhat:         uniform average over steps of the shadow primal point
enum class Averaging { final, uniform, rho_weighted, xhat };

std::string to_string(Averaging a);
Averaging parse_averaging(const std::string& name);

struct FedConfig {
  std::size_t M = 0;  // 0: the problem's client count
  std::size_t K = 1;
  std::size_t R = 1;
  double eta_client = 0.01;
  double eta_server = 1.0;
  std::size_t sample_size = 0;  // 0: all M clients every round
  std::uint64_t seed = 0;
  Averaging averaging = Averaging::final;
  std::size_t eval_every = 1;
  std::size_t workers = 1;
  /// Record every client's per-step state (needed by shadow_series and potentials).
  bool snapshots = false;
  /// Strong convexity used by rho_weighted averaging.
  double mu = 0.0;
  /// Initial point; empty means the origin.
  Vec x0;
  /// Optimal objective value; when absent it is taken from the problem.
  std::optional<double> f_star;

  /// Throws std::invalid_argument naming the offending field.
  void validate(std::size_t problem_clients) const;
};

enum class FedAcVariant { I, II, vanilla, custom };

std::string to_string(FedAcVariant v);
FedAcVariant parse_fedac_variant(const std::string& name);

/// Coupling hyperparameters of FedAc.
struct FedAcParams {
  FedAcVariant variant = FedAcVariant::I;
  double mu = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  double alpha = 1.0;
  double beta = 1.0;

  /// Derives (γ, α, β) for variants I, II and vanilla. Throws when α < 1.
  static FedAcParams make(FedAcVariant variant, double mu, double eta, std::size_t k);
  /// Explicit (α, β, γ, η).
  static FedAcParams custom(double alpha, double beta, double gamma, double eta);
};

struct MetricPoint {
  std::size_t round;
  std::string name;
  double value;
};

/// Every sampled client's state at local step k of round r.
struct StepSnapshot {
  std::size_t round;
  std::size_t step;
  std::vector<std::size_t> clients;
  std::vector<Vec> x;     // primal iterate (x_md-free main sequence)
  std::vector<Vec> x_ag;  // aggregate sequence (accelerated methods), else empty
  std::vector<Vec> y;     // dual state (dual-averaging methods), else empty
  std::vector<Vec> g;     // gradient taken at this step; empty at step K
};

struct RunRecord {
  Algorithm algorithm = Algorithm::fedavg;
  std::string problem_kind;
  std::map<std::string, double> problem_params;
  FedConfig config;
  std::optional<FedAcParams> fedac;
  std::string regularizer = "zero";
  std::optional<double> f_star;
  std::optional<Vec> x_star;

  std::vector<MetricPoint> series;
  /// Evaluated iterate at each checkpoint (same rounds as the series).
  std::vector<std::pair<std::size_t, Vec>> outputs;
  Vec final_x;
  Vec final_x_ag;
  Vec final_y;
  std::size_t grad_calls = 0;
  bool diverged = false;
  std::size_t diverged_round = 0;
  std::vector<StepSnapshot> snapshots;

  /// Values of `name` in round order.
  std::vector<double> metric(const std::string& name) const;
  /// Smallest recorded value of `name`, if any.
  std::optional<double> best(const std::string& name) const;
};

/// Metric names written by the engine.
inline constexpr const char* kSuboptimality = "suboptimality";
inline constexpr const char* kObjective = "objective";
inline constexpr const char* kGradCalls = "grad_calls";

RunRecord fedavg_run(const Problem& p, const FedConfig& cfg);
RunRecord fedac_run(const Problem& p, const FedConfig& cfg, const FedAcParams& params);
RunRecord minibatch_sgd_run(const Problem& p, const FedConfig& cfg);
RunRecord minibatch_acsgd_run(const Problem& p, const FedConfig& cfg, double mu);
RunRecord fedmid_run(const CompositeProblem& cp, const FedConfig& cfg);
RunRecord feddualavg_run(const CompositeProblem& cp, const FedConfig& cfg);
RunRecord fedmid_osp_run(const CompositeProblem& cp, const FedConfig& cfg);
RunRecord feddualavg_osp_run(const CompositeProblem& cp, const FedConfig& cfg);

/// Dispatch by algorithm. `fedac` is required for fedac and minibatch_acsgd
/// (only its μ is used by the latter).
RunRecord run_algorithm(Algorithm a, const CompositeProblem& cp, const FedConfig& cfg,
                        const std::optional<FedAcParams>& fedac = std::nullopt);

/// η̃^{(r,k)} = η_c (η_s r K + k).
double dual_step_weight(double eta_client, double eta_server, std::size_t k_steps, std::size_t r, std::size_t k);

/// Sampled client ids for round r, ascending.
std::vector<std::size_t> sample_clients(std::uint64_t seed, std::size_t round, std::size_t m, std::size_t s);

struct ShadowPoint {
  std::size_t round;
  std::size_t step;
  Vec y_bar;  // averaged dual (primal average for primal methods)
  Vec x_hat;  // its primal image ∇(h + η̃ψ)*(ȳ)
  Vec g_bar;  // mean gradient at this step; empty at step K
};

/// Shadow sequence reconstructed from snapshots. Throws if snapshots are off.
std::vector<ShadowPoint> shadow_series(const RunRecord& rec, const CompositeProblem& cp);

struct PotentialPoint {
  std::size_t round;
  std::size_t step;
  double psi;
  double phi;
};

/// Ψ = (1/M) Σ F(x_ag,m) − F* + ½μ‖x̄ − x*‖² and Φ = F(x̄_ag) − F* + (1/6)μ‖x̄ − x*‖²
/// for every snapshot. Throws when the optimum is unknown or snapshots are off.
std::vector<PotentialPoint> potentials(const RunRecord& rec, const Problem& p, double mu);

// Serialization. The JSON schema is versioned as "fedopt.run/1".

inline constexpr const char* kRunSchema = "fedopt.run/1";
inline constexpr const char* kMetricsCsvHeader = "round,metric,value,config_id";

/// JSON document with config, metadata, series and final iterates.
std::string to_json(const RunRecord& rec, int indent = 2);
RunRecord run_record_from_json(const std::string& text);
/// Rows `round,metric,value,config_id` (no header), values printed with %.17g.
std::string to_csv_rows(const RunRecord& rec, const std::string& config_id);

}  // namespace fedopt
