#pragma once

#include <cstddef>
#include <string>

#include "fedopt/numerics/mat.hpp"
#include "fedopt/numerics/vec.hpp"

namespace fedopt {

enum class GeometryKind { euclidean };

/// Distance-generating function h. Only h(x) = ½‖x‖₂² ships.
struct Geometry {
  GeometryKind kind = GeometryKind::euclidean;

  static Geometry euclidean() { return Geometry{}; }

  double h(const Vec& x) const;
  Vec grad_h(const Vec& x) const;
  /// ∇h*, the inverse of ∇h.
  Vec grad_h_conj(const Vec& y) const;
};

/// D_h(x, y) = h(x) − h(y) − ⟨∇h(y), x − y⟩
double bregman(const Geometry& geo, const Vec& x, const Vec& y);

enum class RegKind { zero, l1, l2_ball, l1_ball, nuclear, l2_square };

/// Composite term ψ. The last `unpenalized` coordinates (an intercept, say)
/// are left untouched by both the value and the conjugate map.
struct Regularizer {
  RegKind kind = RegKind::zero;
  double lambda = 0.0;  // l1, nuclear, l2_square
  double radius = 0.0;  // l2_ball, l1_ball
  std::size_t rows = 0;  // nuclear: matrix shape of the penalized block
  std::size_t cols = 0;
  std::size_t unpenalized = 0;

  static Regularizer zero() { return Regularizer{}; }
  static Regularizer l1(double lambda, std::size_t unpenalized = 0);
  static Regularizer l2_ball(double radius, std::size_t unpenalized = 0);
  static Regularizer l1_ball(double radius, std::size_t unpenalized = 0);
  static Regularizer nuclear(double lambda, std::size_t rows, std::size_t cols, std::size_t unpenalized = 0);
  static Regularizer l2_square(double lambda, std::size_t unpenalized = 0);

  bool is_constraint() const { return kind == RegKind::l2_ball || kind == RegKind::l1_ball; }
  std::string name() const;

  /// ψ(x); +infinity outside the feasible set of a constraint.
  double value(const Vec& x) const;
  bool feasible(const Vec& x) const;
};

/// argmin_x { −⟨y, x⟩ + η ψ(x) + h(x) }, i.e. ∇(h + ηψ)*(y).
/// Constraint kinds project even at η = 0.
Vec conjugate_map(const Geometry& geo, const Regularizer& reg, double eta, const Vec& y);

/// sign(yᵢ) max(|yᵢ| − τ, 0)
Vec soft_threshold(const Vec& y, double tau);

/// U diag(max(s − τ, 0)) Vᵀ
Mat svt(const Mat& a, double tau);

/// Euclidean projection onto {x : ‖x‖₁ ≤ r} by sort-and-threshold.
Vec project_l1_ball(const Vec& y, double r);

/// Radial projection onto {x : ‖x‖₂ ≤ r}.
Vec project_l2_ball(const Vec& y, double r);

}  // namespace fedopt
