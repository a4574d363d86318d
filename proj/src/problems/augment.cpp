#include <stdexcept>

#include "fedopt/numerics/linalg.hpp"
#include "instances.hpp"

namespace fedopt {

namespace {

class Augmented final : public Problem {
 public:
  Augmented(ProblemHandle base, double lambda, Vec x0) : base_(std::move(base)), lambda_(lambda), x0_(std::move(x0)) {
    if (!base_) throw std::invalid_argument("augment_l2: null problem");
    if (!(lambda > 0.0)) throw std::invalid_argument("augment_l2: lambda must be > 0");
    if (x0_.size() != base_->dim()) throw std::invalid_argument("augment_l2: x0 dimension mismatch");
    constants_ = base_->constants();
    constants_.L = base_->constants().L + lambda;
    constants_.mu = base_->constants().mu + lambda;
    if (const auto* q = dynamic_cast<const detail::QuadraticProblem*>(base_.get())) {
      Mat a = q->hessian();
      for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += lambda;
      Vec x = solve_spd(a, lincomb(lambda, x0_, -1.0, q->linear()));
      const double v = value(x);
      optimum_ = Optimum{std::move(x), v};
    }
  }

  std::string kind() const override { return base_->kind() + "+l2"; }
  std::size_t dim() const override { return base_->dim(); }
  std::size_t num_clients() const override { return base_->num_clients(); }
  bool homogeneous() const override { return base_->homogeneous(); }

  double value(const Vec& x) const override {
    const Vec d = x - x0_;
    return base_->value(x) + 0.5 * lambda_ * dot(d, d);
  }
  Vec client_full_grad(std::size_t m, const Vec& x) const override { return add_term(base_->client_full_grad(m, x), x); }
  Vec client_grad(std::size_t m, const Vec& x, RngStream& rng) const override {
    return add_term(base_->client_grad(m, x, rng), x);
  }
  Vec full_grad(const Vec& x) const override { return add_term(base_->full_grad(x), x); }
  std::optional<Optimum> optimum() const override { return optimum_; }
  std::map<std::string, double> params() const override {
    auto p = base_->params();
    p["augment_lambda"] = lambda_;
    return p;
  }

 private:
  Vec add_term(Vec g, const Vec& x) const {
    axpy(lambda_, x - x0_, g);
    return g;
  }

  ProblemHandle base_;
  double lambda_;
  Vec x0_;
  std::optional<Optimum> optimum_;
};

}  // namespace

ProblemHandle augment_l2(ProblemHandle p, double lambda, const Vec& x0) {
  return std::make_shared<Augmented>(std::move(p), lambda, x0);
}

}  // namespace fedopt
