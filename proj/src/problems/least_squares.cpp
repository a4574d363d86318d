#include <cmath>
#include <stdexcept>

#include "fedopt/kernels/kernels.hpp"
#include "fedopt/problems/problem.hpp"

namespace fedopt {

namespace {

class LeastSquares final : public Problem {
 public:
  LeastSquares(Dataset data, std::size_t batch_size) : data_(std::move(data)), batch_(batch_size) {
    if (data_.num_clients() == 0) throw std::invalid_argument("least_squares: no clients");
    if (batch_ == 0) throw std::invalid_argument("least_squares: batch_size must be >= 1");
    p_ = data_.num_features();
    for (std::size_t m = 0; m < data_.num_clients(); ++m) {
      if (data_.features[m].rows() == 0) throw std::invalid_argument("least_squares: client " + std::to_string(m) + " has no samples");
      if (data_.features[m].cols() != p_ || data_.labels[m].size() != data_.features[m].rows()) {
        throw std::invalid_argument("least_squares: inconsistent client data");
      }
    }
    double l = 0.0;
    for (std::size_t m = 0; m < data_.num_clients(); ++m) l = std::max(l, client_curvature(m));
    // Power iteration approaches λ_max from below; 1% headroom.
    constants_.L = 1.01 * l;
    constants_.mu = 0.0;
  }

  std::string kind() const override { return "least_squares"; }
  std::size_t dim() const override { return p_ + 1; }
  std::size_t num_clients() const override { return data_.num_clients(); }

  double value(const Vec& x) const override {
    double total = 0.0;
    for (std::size_t m = 0; m < num_clients(); ++m) {
      const Mat& a = data_.features[m];
      double s = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const double r = residual(m, i, x);
        s += r * r;
      }
      total += s / static_cast<double>(a.rows());
    }
    return total / static_cast<double>(num_clients());
  }

  Vec client_full_grad(std::size_t m, const Vec& x) const override {
    if (m >= num_clients()) throw std::out_of_range("least_squares: client index out of range");
    const Mat& a = data_.features[m];
    Vec g(dim());
    for (std::size_t i = 0; i < a.rows(); ++i) accumulate(m, i, x, g);
    return (2.0 / static_cast<double>(a.rows())) * g;
  }

  Vec client_grad(std::size_t m, const Vec& x, RngStream& rng) const override {
    if (m >= num_clients()) throw std::out_of_range("least_squares: client index out of range");
    const std::size_t n = data_.features[m].rows();
    Vec g(dim());
    for (std::size_t j = 0; j < batch_; ++j) accumulate(m, rng.below(n), x, g);
    return (2.0 / static_cast<double>(batch_)) * g;
  }

  std::map<std::string, double> params() const override {
    return {{"features", static_cast<double>(p_)}, {"clients", static_cast<double>(num_clients())},
            {"batch_size", static_cast<double>(batch_)}};
  }

  const Dataset& data() const { return data_; }

 private:
  double residual(std::size_t m, std::size_t i, const Vec& x) const {
    return kernels::active().dot(data_.features[m].row(i), x.data(), p_) + x[p_] - data_.labels[m][i];
  }

  // g += r * (a_i, 1)
  void accumulate(std::size_t m, std::size_t i, const Vec& x, Vec& g) const {
    const double r = residual(m, i, x);
    kernels::active().axpy(r, data_.features[m].row(i), g.data(), p_);
    g[p_] = g[p_] + r;
  }

  // 2 λ_max((1/n) Σ ãᵢãᵢᵀ) with ã = (a, 1), by power iteration.
  double client_curvature(std::size_t m) const {
    const Mat& a = data_.features[m];
    Vec v(dim(), 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 1000; ++it) {
      const double prev = lambda;
      v = (1.0 / norm2(v)) * v;
      Vec w(dim());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const double s = kernels::active().dot(a.row(i), v.data(), p_) + v[p_];
        kernels::active().axpy(s, a.row(i), w.data(), p_);
        w[p_] = w[p_] + s;
      }
      w = (1.0 / static_cast<double>(a.rows())) * w;
      lambda = dot(v, w);
      v = std::move(w);
      if (it > 5 && std::fabs(lambda - prev) <= 1e-12 * lambda) break;
    }
    return 2.0 * lambda;
  }

  Dataset data_;
  std::size_t batch_;
  std::size_t p_ = 0;
};

Dataset synthetic_regression(std::size_t p, std::size_t m, std::size_t n, const Vec& truth, std::uint64_t seed,
                             bool noiseless, double& intercept) {
  RngStream global(seed, 0);
  intercept = global.normal();
  Dataset data;
  for (std::size_t c = 0; c < m; ++c) {
    RngStream client(seed, 1 + c);
    const Vec mean = gaussian(client, p);
    Mat a(n, p);
    Vec b(n);
    for (std::size_t i = 0; i < n; ++i) {
      client.fill_normal(a.row(i), p);
      kernels::active().add(a.row(i), mean.data(), a.row(i), p);
      const double eps = client.normal();
      b[i] = kernels::active().dot(a.row(i), truth.data(), p) + intercept + (noiseless ? 0.0 : eps);
    }
    data.features.push_back(std::move(a));
    data.labels.push_back(std::move(b));
  }
  return data;
}

}  // namespace

ProblemHandle make_least_squares(const Dataset& data, std::size_t batch_size) {
  return std::make_shared<LeastSquares>(data, batch_size);
}

const Dataset* dataset_of(const Problem& p) {
  if (const auto* ls = dynamic_cast<const LeastSquares*>(&p)) return &ls->data();
  return nullptr;
}

CompositeProblem make_lasso_synthetic(std::size_t d1, std::size_t d0, std::size_t m, std::size_t n_per_client,
                                      double lambda, std::uint64_t seed, SyntheticOptions opts) {
  if (d1 + d0 == 0 || m == 0 || n_per_client == 0) throw std::invalid_argument("make_lasso_synthetic: counts must be positive");
  const std::size_t d = d1 + d0;
  Vec truth(d);
  for (std::size_t i = 0; i < d1; ++i) truth[i] = 1.0;
  double intercept = 0.0;
  Dataset data = synthetic_regression(d, m, n_per_client, truth, seed, opts.noiseless, intercept);
  CompositeProblem cp;
  cp.smooth = make_least_squares(data, opts.batch_size);
  cp.reg = Regularizer::l1(lambda, 1);
  cp.geo = Geometry::euclidean();
  cp.ground_truth = truth;
  cp.true_intercept = intercept;
  return cp;
}

CompositeProblem make_lowrank_synthetic(std::size_t d, std::size_t r, std::size_t m, std::size_t n_per_client,
                                        double lambda, std::uint64_t seed, SyntheticOptions opts) {
  if (d == 0 || m == 0 || n_per_client == 0) throw std::invalid_argument("make_lowrank_synthetic: counts must be positive");
  if (r > d) throw std::invalid_argument("make_lowrank_synthetic: rank exceeds dimension");
  Mat x_real(d, d);
  for (std::size_t i = 0; i < r; ++i) x_real(i, i) = 1.0;
  const Vec truth = x_real.to_vec();
  double intercept = 0.0;
  Dataset data = synthetic_regression(d * d, m, n_per_client, truth, seed, opts.noiseless, intercept);
  CompositeProblem cp;
  cp.smooth = make_least_squares(data, opts.batch_size);
  cp.reg = Regularizer::nuclear(lambda, d, d, 1);
  cp.geo = Geometry::euclidean();
  cp.ground_truth = truth;
  cp.true_rank = r;
  cp.true_intercept = intercept;
  return cp;
}

}  // namespace fedopt
