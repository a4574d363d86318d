#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedopt/composite/composite.hpp"
#include "fedopt/numerics/mat.hpp"
#include "fedopt/numerics/rng.hpp"
#include "fedopt/numerics/vec.hpp"

namespace fedopt {

inline constexpr double kUnknown = std::numeric_limits<double>::quiet_NaN();

/// Problem constants. NaN marks a constant the instance does not know.
struct ProblemConstants {
  double L = kUnknown;          // smoothness of every F_m
  double mu = 0.0;              // strong convexity of F
  double Q = kUnknown;          // third-order smoothness
  double sigma = kUnknown;      // bound on the stochastic-gradient noise
  double noise_var = kUnknown;  // E‖∇f(x; ξ) − ∇F_m(x)‖²
  double zeta = kUnknown;       // sup_x ‖∇F_m(x) − ∇F(x)‖
  double zeta_star = kUnknown;  // heterogeneity at the optimum
};

struct Optimum {
  Vec x;
  double value;
};

/// A stochastic objective F = (1/M) Σ_m F_m with per-client oracles.
///
/// Instances are immutable after construction. `client_grad` draws all its
/// randomness from the stream it is handed, so concurrent calls with distinct
/// streams are race-free.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t num_clients() const = 0;
  const ProblemConstants& constants() const noexcept { return constants_; }

  virtual double value(const Vec& x) const = 0;
  virtual Vec client_full_grad(std::size_t m, const Vec& x) const = 0;
  virtual Vec client_grad(std::size_t m, const Vec& x, RngStream& rng) const = 0;
  /// (1/M) Σ_m ∇F_m(x), reduced in client order.
  virtual Vec full_grad(const Vec& x) const;

  virtual std::optional<Optimum> optimum() const { return std::nullopt; }
  /// Every client shares the same F_m.
  virtual bool homogeneous() const { return num_clients() == 1; }

  /// One-dimensional instances: F″ and F‴ where defined.
  virtual std::optional<double> second_derivative(double) const { return std::nullopt; }
  virtual std::optional<double> third_derivative(double) const { return std::nullopt; }
  /// One-dimensional instances: a stochastic derivative without allocation.
  /// Must consume the stream exactly as client_grad(0, ·, rng) does.
  virtual double scalar_grad(double x, RngStream& rng) const;
  virtual double scalar_full_grad(double x) const;

  /// Instance parameters echoed into run metadata.
  virtual std::map<std::string, double> params() const { return {}; }

 protected:
  ProblemConstants constants_;
};

using ProblemHandle = std::shared_ptr<const Problem>;

/// Φ = F + ψ under geometry h.
struct CompositeProblem {
  ProblemHandle smooth;
  Regularizer reg;
  Geometry geo;
  /// Known sparse/low-rank ground truth (penalized block only).
  std::optional<Vec> ground_truth;
  std::optional<std::size_t> true_rank;
  std::optional<double> true_intercept;

  double objective(const Vec& x) const { return smooth->value(x) + reg.value(x); }
};

/// Per-client samples: features[m] is n_m × p, labels[m] has n_m entries.
struct Dataset {
  std::vector<Mat> features;
  std::vector<Vec> labels;

  std::size_t num_clients() const { return features.size(); }
  std::size_t num_features() const { return features.empty() ? 0 : features[0].cols(); }
  std::size_t num_samples() const;
};

/// CSV with header `client_id,f0,...,f{p-1},label`, one row per sample.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

// ---- instances ------------------------------------------------------------

/// F_m(x) = ½xᵀAx + (c + s_m)ᵀx with additive Gaussian noise of total
/// variance σ². Without shifts the problem has `num_clients` identical clients.
ProblemHandle make_quadratic(const Mat& a, const Vec& c, const std::vector<Vec>& per_client_shift = {},
                             double sigma = 0.0, std::size_t num_clients = 1);

/// ψ(x) = x² for x ≥ 0 and ½x² for x < 0.
double psi_piecewise(double x);

/// F(x) = (L/24)ψ(x) with derivative noise N(0, σ²).
ProblemHandle make_piecewise_quadratic(double l, double sigma);

/// F(x) = x² (x ≥ 0), x²/10 (x < 0), derivative noise N(0, 0.01).
ProblemHandle make_bias_demo();

/// Four decoupled coordinates: (L/24)ψ(x₁) + ξx₁, ½μx₂², ½Lx₃², and a
/// client-dependent last coordinate (L/8)x₄² − ζ*x₄ for even m (0-based),
/// (L/16)x₄² + ζ*x₄ for odd m.
ProblemHandle make_lb4d(double l, double sigma, double mu, double zeta_star, std::size_t m);

/// μ for the lower-bound instance given the budget (B = initial distance).
double lb4d_mu(double l, double sigma, double zeta_star, double b, std::size_t k, std::size_t r);

/// φ(u) = ∫₀ᵘ log cosh t dt.
double phi_logcosh(double u);

/// F(x) = (3/8)Lx² + (L³/64Q²)φ(4Qx/L), derivative noise U[−σ, σ].
ProblemHandle make_logcosh_instance(double l, double q, double sigma);

/// ℓ2-regularized logistic regression over client shards of `features`.
ProblemHandle make_logreg(const Mat& features, const Vec& labels, double lambda,
                          const std::vector<std::vector<std::size_t>>& client_partition);
ProblemHandle make_logreg(const Dataset& data, double lambda);

/// Synthetic binary classification data, i.i.d. across `m` equal shards.
Dataset make_synthetic_classification(std::size_t n, std::size_t d, std::size_t m, std::uint64_t seed);

struct SyntheticOptions {
  bool noiseless = false;
  std::size_t batch_size = 10;
};

/// Least squares with intercept, ℓ1 penalty, heterogeneous client means.
CompositeProblem make_lasso_synthetic(std::size_t d1, std::size_t d0, std::size_t m, std::size_t n_per_client,
                                      double lambda, std::uint64_t seed, SyntheticOptions opts = {});

/// Matrix least squares with intercept, nuclear penalty, rank-r block identity truth.
CompositeProblem make_lowrank_synthetic(std::size_t d, std::size_t r, std::size_t m, std::size_t n_per_client,
                                        double lambda, std::uint64_t seed, SyntheticOptions opts = {});

/// Least-squares objective (1/M) Σ_m mean_i (aᵢᵀx + x⁰ − bᵢ)² over a dataset;
/// the intercept is the last coordinate. client_grad averages `batch_size`
/// samples drawn with replacement.
ProblemHandle make_least_squares(const Dataset& data, std::size_t batch_size);

/// F̃(x) = F(x) + (λ/2)‖x − x0‖².
ProblemHandle augment_l2(ProblemHandle p, double lambda, const Vec& x0);

/// The Dataset behind a sample-based problem, if any.
const Dataset* dataset_of(const Problem& p);

}  // namespace fedopt
