#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedopt/federated/federated.hpp"
#include "fedopt/problems/problem.hpp"

namespace fedopt {

// ---- iterate bias -----------------------------------------------------------

/// E[x_SGD^{(k)}] − z_GD^{(k)} estimated over `reps` independent trajectories.
struct BiasEstimate {
  Vec mean_bias;
  Vec std_error;  // sample std / √reps
  std::size_t reps = 0;
  std::size_t k = 0;
  double eta = 0.0;
};

struct BiasOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  /// Start point; defaults to the optimum.
  std::optional<Vec> x0;
  /// Subtract SGD on the local quadratic model at x0 driven by the same noise.
  /// Unbiased for the same quantity with much smaller variance near x0.
  bool control_variate = false;
};

/// Bias at every k in `ks` (ascending) from one set of trajectories.
/// Repetition i draws from RngStream(seed, i).
std::vector<BiasEstimate> measure_bias(const Problem& p, double eta, const std::vector<std::size_t>& ks,
                                       std::size_t reps, const BiasOptions& opts = {});
BiasEstimate measure_bias(const Problem& p, double eta, std::size_t k, std::size_t reps, std::uint64_t seed);

/// −¼ η³ k² v F‴ where v is the gradient-noise variance.
double sde_bias(double eta, std::size_t k, double noise_var, double third_derivative);

/// sde_bias with the instance's noise variance and F‴(x0). Throws
/// std::invalid_argument when F‴ or the noise variance is unavailable.
double predict_bias_sde(const Problem& p, double eta, std::size_t k, double x0);

/// Least-squares slope of log|bias| against log k. Needs ≥ 4 points, none zero.
double fit_bias_exponent(const std::vector<std::pair<double, double>>& points);

// ---- accelerated-method instability -----------------------------------------

using Mat2 = std::array<std::array<double, 2>, 2>;

Mat2 mul(const Mat2& a, const Mat2& b);
double max_abs_diff(const Mat2& a, const Mat2& b);

/// Difference propagation of one Nesterov step at curvature h.
Mat2 agd_step_matrix(double kappa, double h_over_l);

struct DivergenceTrace {
  double kappa = 0.0;
  double epsilon = 0.0;
  /// (Δ_ag, Δ) for t = 0..3K.
  std::vector<std::pair<double, double>> steps;
  /// Δ^{(3j+3)} / Δ^{(3j)} for each block j ≥ 1.
  std::vector<double> growth_ratio;
  Mat2 block;        // product of the three step matrices
  Mat2 projector;    // [[½, 1/(2√κ)], [√κ/2, ½]]
  double factor;     // block = factor · projector
  double predicted;  // −2(1 − 1/√κ)³
  double idempotency_residual;  // ‖E² − E‖_max
  double projector_residual;    // ‖block − factor·E‖_max
};

/// Runs the exact linear recursion for K blocks from (ε, ε). Curvature is L at
/// steps t ≡ 1 (mod 3) and μ otherwise. Throws for κ < 25 unless `allow_small`.
DivergenceTrace agd_divergence(double kappa, std::size_t blocks, double epsilon, bool allow_small = false);

// ---- heterogeneous lower bound ----------------------------------------------

struct LbCoefficients {
  double a;
  double b;
};

/// a = ½((1 − ηL/4)^K + (1 − ηL/8)^K),
/// b = (2/L)(1 − (1 − ηL/4)^K) − (4/L)(1 − (1 − ηL/8)^K).
LbCoefficients lb_coefficients(double eta, double l, std::size_t k);

struct LbTrajectory {
  double simulated;
  double closed_form;
  double a;
  double b;
};

/// Deterministic two-client FedAvg on the heterogeneous coordinate of the
/// four-dimensional instance, against a^R x0 + (1 − a^R)/(1 − a)·bζ*.
LbTrajectory hetero_lb_trajectory(double eta, double l, std::size_t k, std::size_t r, double zeta_star,
                                  double x0 = 1.0);

/// b ≤ −(0.001/L)·min{1, (ηLK)²}.
bool verify_b_bound(double eta, double l, std::size_t k);

// ---- sparsity and rank ------------------------------------------------------

struct SupportMetrics {
  double density;
  double precision;
  double recall;
  double f1;
};

inline constexpr double kSupportThreshold = 1e-2;

/// Support recovery of the first truth.size() coordinates of x; entries with
/// |v| < threshold count as zero.
SupportMetrics support_metrics(const Vec& x, const Vec& truth, double threshold = kSupportThreshold);

/// Number of singular values above `threshold` of the leading rows × cols block.
std::size_t recovered_rank(const Vec& x, std::size_t rows, std::size_t cols, double threshold = kSupportThreshold);

struct CurseRow {
  std::size_t round;
  SupportMetrics fedmid;
  SupportMetrics feddualavg;
};

/// FedMiD and FedDualAvg with identical configuration and budget.
std::vector<CurseRow> curse_demo(const CompositeProblem& lasso, const FedConfig& cfg);

// ---- lab artifacts ----------------------------------------------------------

struct LabCheck {
  std::string name;
  bool pass;
  std::string detail;
};

/// CSV text of the sweep plus a pass/fail summary.
struct LabReport {
  std::string name;
  std::string csv;
  std::vector<LabCheck> checks;

  bool pass() const;
  std::string summary_json() const;
};

struct BiasLabOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t demo_reps = 65536;
  std::size_t logcosh_reps = std::size_t{1} << 18;
  std::size_t quadratic_reps = 65536;
};

/// Bias demo sign and exponent, log-cosh SDE agreement and exponent, and the
/// quadratic null.
LabReport bias_lab(const BiasLabOptions& opts = {});

/// κ = 25, ε = 1e-6, K ∈ {5, 10, 20, 50}.
LabReport instability_lab();

/// Closed-form agreement over ηL × K × R and the b-bound grid.
LabReport lb_lab();

}  // namespace fedopt
