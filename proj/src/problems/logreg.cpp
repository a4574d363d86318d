#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedopt/kernels/kernels.hpp"
#include "fedopt/numerics/linalg.hpp"
#include "fedopt/problems/problem.hpp"

namespace fedopt {

namespace {

// log(1 + exp(-z))
double logistic_loss(double z) { return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

// 1 / (1 + exp(z))
double sigmoid_neg(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

class LogReg final : public Problem {
 public:
  LogReg(Mat features, Vec labels, double lambda, std::vector<std::vector<std::size_t>> shards)
      : a_(std::move(features)), b_(std::move(labels)), lambda_(lambda), shards_(std::move(shards)) {
    if (a_.rows() != b_.size()) throw std::invalid_argument("make_logreg: features and labels disagree on row count");
    if (a_.rows() == 0 || a_.cols() == 0) throw std::invalid_argument("make_logreg: empty data");
    if (!(lambda >= 0.0)) throw std::invalid_argument("make_logreg: lambda must be >= 0");
    if (!a_.all_finite()) throw std::invalid_argument("make_logreg: non-finite feature");
    for (double v : b_) {
      if (v != 1.0 && v != -1.0) throw std::invalid_argument("make_logreg: labels must be -1 or +1");
    }
    if (shards_.empty()) throw std::invalid_argument("make_logreg: no clients");
    std::vector<bool> covered(a_.rows(), false);
    for (std::size_t m = 0; m < shards_.size(); ++m) {
      if (shards_[m].empty()) throw std::invalid_argument("make_logreg: client " + std::to_string(m) + " has an empty shard");
      for (std::size_t i : shards_[m]) {
        if (i >= a_.rows()) throw std::invalid_argument("make_logreg: partition index out of range");
        covered[i] = true;
      }
    }
    for (bool c : covered) {
      if (!c) throw std::invalid_argument("make_logreg: partition does not cover all rows");
    }
    const auto& k = kernels::active();
    double max_sq = 0.0;
    for (std::size_t i = 0; i < a_.rows(); ++i) max_sq = std::max(max_sq, k.sum_squares(a_.row(i), a_.cols()));
    constants_.L = lambda + max_sq / 4.0;
    constants_.mu = lambda;
    constants_.sigma = 2.0 * std::sqrt(max_sq);
    compute_optimum();
  }

  std::string kind() const override { return "logreg"; }
  std::size_t dim() const override { return a_.cols(); }
  std::size_t num_clients() const override { return shards_.size(); }

  double value(const Vec& x) const override {
    const auto& k = kernels::active();
    double total = 0.0;
    for (const auto& shard : shards_) {
      double s = 0.0;
      for (std::size_t i : shard) s += logistic_loss(b_[i] * k.dot(a_.row(i), x.data(), dim()));
      total += s / static_cast<double>(shard.size());
    }
    return total / static_cast<double>(shards_.size()) + 0.5 * lambda_ * dot(x, x);
  }

  Vec client_full_grad(std::size_t m, const Vec& x) const override {
    if (m >= shards_.size()) throw std::out_of_range("logreg: client index out of range");
    const auto& k = kernels::active();
    Vec g(dim());
    for (std::size_t i : shards_[m]) {
      const double z = b_[i] * k.dot(a_.row(i), x.data(), dim());
      k.axpy(-b_[i] * sigmoid_neg(z), a_.row(i), g.data(), dim());
    }
    g = lincomb(1.0 / static_cast<double>(shards_[m].size()), g, lambda_, x);
    return g;
  }

  Vec client_grad(std::size_t m, const Vec& x, RngStream& rng) const override {
    if (m >= shards_.size()) throw std::out_of_range("logreg: client index out of range");
    const auto& k = kernels::active();
    const std::size_t i = shards_[m][rng.below(shards_[m].size())];
    const double z = b_[i] * k.dot(a_.row(i), x.data(), dim());
    Vec g = lambda_ * x;
    k.axpy(-b_[i] * sigmoid_neg(z), a_.row(i), g.data(), dim());
    return g;
  }

  std::optional<Optimum> optimum() const override { return optimum_; }

  std::map<std::string, double> params() const override {
    return {{"lambda", lambda_}, {"samples", static_cast<double>(a_.rows())}, {"dim", static_cast<double>(dim())},
            {"clients", static_cast<double>(shards_.size())}};
  }

 private:
  // Damped Newton with Cholesky solves.
  void compute_optimum() {
    if (lambda_ <= 0.0) return;
    const std::size_t d = dim();
    Vec x(d);
    double fx = value(x);
    for (int it = 0; it < 100; ++it) {
      const Vec g = full_grad(x);
      if (norm2(g) < 1e-15) break;
      Mat h(d, d);
      for (const auto& shard : shards_) {
        const double w_shard = 1.0 / (static_cast<double>(shard.size()) * static_cast<double>(shards_.size()));
        for (std::size_t i : shard) {
          const double z = b_[i] * kernels::active().dot(a_.row(i), x.data(), d);
          const double s = sigmoid_neg(z);
          const double w = w_shard * s * (1.0 - s);
          for (std::size_t p = 0; p < d; ++p) {
            const double ap = w * a_(i, p);
            for (std::size_t q = 0; q <= p; ++q) h(p, q) += ap * a_(i, q);
          }
        }
      }
      for (std::size_t p = 0; p < d; ++p) {
        h(p, p) += lambda_;
        for (std::size_t q = 0; q < p; ++q) h(q, p) = h(p, q);
      }
      const Vec step = solve_spd(h, g);
      double t = 1.0;
      Vec next = x - step;
      double fn = value(next);
      while (fn > fx && t > 1e-10) {
        t *= 0.5;
        next = x - t * step;
        fn = value(next);
      }
      if (!(fn <= fx)) break;
      const bool done = norm2(next - x) <= 1e-15 * (1.0 + norm2(x));
      x = std::move(next);
      fx = fn;
      if (done) break;
    }
    optimum_ = Optimum{x, fx};
  }

  Mat a_;
  Vec b_;
  double lambda_;
  std::vector<std::vector<std::size_t>> shards_;
  std::optional<Optimum> optimum_;
};

}  // namespace

ProblemHandle make_logreg(const Mat& features, const Vec& labels, double lambda,
                          const std::vector<std::vector<std::size_t>>& client_partition) {
  return std::make_shared<LogReg>(features, labels, lambda, client_partition);
}

ProblemHandle make_logreg(const Dataset& data, double lambda) {
  const std::size_t p = data.num_features();
  std::vector<double> rows;
  std::vector<double> labels;
  std::vector<std::vector<std::size_t>> shards(data.num_clients());
  std::size_t next = 0;
  for (std::size_t m = 0; m < data.num_clients(); ++m) {
    const Mat& a = data.features[m];
    rows.insert(rows.end(), a.values().begin(), a.values().end());
    labels.insert(labels.end(), data.labels[m].begin(), data.labels[m].end());
    for (std::size_t i = 0; i < a.rows(); ++i) shards[m].push_back(next++);
  }
  return make_logreg(Mat(next, p, std::move(rows)), Vec(std::move(labels)), lambda, shards);
}

Dataset make_synthetic_classification(std::size_t n, std::size_t d, std::size_t m, std::uint64_t seed) {
  if (n == 0 || d == 0 || m == 0 || n % m != 0) {
    throw std::invalid_argument("make_synthetic_classification: need n, d, m > 0 with m dividing n");
  }
  RngStream truth(seed, 0);
  const Vec w = gaussian(truth, d);
  RngStream feats(seed, 1);
  RngStream coins(seed, 2);
  const double scale = 2.0 / std::sqrt(static_cast<double>(d));
  const std::size_t per = n / m;
  Dataset data;
  for (std::size_t c = 0; c < m; ++c) {
    Mat a(per, d);
    Vec b(per);
    for (std::size_t i = 0; i < per; ++i) {
      feats.fill_normal(a.row(i), d);
      for (std::size_t j = 0; j < d; ++j) a(i, j) *= scale;
      const double z = kernels::active().dot(a.row(i), w.data(), d);
      b[i] = coins.uniform01() < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : -1.0;
    }
    data.features.push_back(std::move(a));
    data.labels.push_back(std::move(b));
  }
  return data;
}

}  // namespace fedopt
