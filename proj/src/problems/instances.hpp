#pragma once

// Concrete problem classes shared between the instance factories.

#include "fedopt/problems/problem.hpp"

namespace fedopt::detail {

class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(Mat a, Vec c, std::vector<Vec> shifts, double sigma, std::size_t num_clients);

  std::string kind() const override { return "quadratic"; }
  std::size_t dim() const override { return c_.size(); }
  std::size_t num_clients() const override { return m_; }
  double value(const Vec& x) const override;
  Vec client_full_grad(std::size_t m, const Vec& x) const override;
  Vec client_grad(std::size_t m, const Vec& x, RngStream& rng) const override;
  Vec full_grad(const Vec& x) const override;
  std::optional<Optimum> optimum() const override { return optimum_; }
  bool homogeneous() const override { return shifts_.empty(); }
  std::optional<double> second_derivative(double) const override;
  std::optional<double> third_derivative(double) const override;
  std::map<std::string, double> params() const override;

  const Mat& hessian() const { return a_; }
  const Vec& linear() const { return c_; }

 private:
  Mat a_;
  Vec c_;
  std::vector<Vec> shifts_;
  double sigma_;
  std::size_t m_;
  std::optional<Optimum> optimum_;
};

}  // namespace fedopt::detail
