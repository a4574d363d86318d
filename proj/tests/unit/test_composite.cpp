#include <cmath>
#include <limits>

#include "../support/composite_props.hpp"
#include "doctest.h"

using namespace fedopt;
using namespace fedopt::testing;

TEST_CASE("bregman closed forms") {
  const Geometry geo = Geometry::euclidean();
  CHECK(bregman(geo, Vec{1.0, 0.0}, Vec{0.0, 0.0}) == 0.5);
  CHECK(bregman(geo, Vec{3.0, 4.0}, Vec{0.0, 0.0}) == 12.5);
  CHECK(bregman(geo, Vec{0.3, -2.0}, Vec{0.3, -2.0}) == 0.0);
  CHECK_THROWS(bregman(geo, Vec{1.0}, Vec{1.0, 2.0}));
}

TEST_CASE("conjugate map closed forms") {
  const Geometry geo = Geometry::euclidean();
  CHECK(conjugate_map(geo, Regularizer::zero(), 1.0, Vec{2.0, -1.0}) == Vec{2.0, -1.0});
  CHECK(conjugate_map(geo, Regularizer::l1(1.0), 0.5, Vec{2.0, -0.3, 0.0}) == Vec{1.5, 0.0, 0.0});
  const Vec p = conjugate_map(geo, Regularizer::l2_ball(1.0), 0.0, Vec{3.0, 4.0});
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(conjugate_map(geo, Regularizer::l2_square(0.5), 1.0, Vec{4.0}) == Vec{2.0});
  // Intercept tail is passed through untouched.
  CHECK(conjugate_map(geo, Regularizer::l1(1.0, 1), 1.0, Vec{0.5, 0.5}) == Vec{0.0, 0.5});
  CHECK_THROWS(conjugate_map(geo, Regularizer::l1(1.0), -1.0, Vec{1.0}));
  CHECK_THROWS(conjugate_map(geo, Regularizer::nuclear(1.0, 2, 2), 1.0, Vec{1.0, 2.0, 3.0}));
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(Vec{2.0, -0.3, 0.0}, 0.5) == Vec{1.5, 0.0, 0.0});
  CHECK(soft_threshold(Vec{2.0, -0.3}, 0.0) == Vec{2.0, -0.3});
  CHECK(soft_threshold(Vec{-5.0}, 10.0) == Vec{0.0});
}

TEST_CASE("svt closed forms") {
  const Mat d = svt(Mat::diag(Vec{3.0, 1.0, 0.2}), 0.5);
  CHECK(max_abs(d - Mat::diag(Vec{2.5, 0.5, 0.0})) < 1e-14);
  RngStream rng(5, 0);
  Mat a(4, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = rng.normal();
  CHECK(max_abs(svt(a, 0.0) - a) < 1e-10);
  const double s2 = std::sqrt(0.5);
  Mat uv(2, 2, {s2 * 0.6, s2 * 0.8, s2 * 0.6, s2 * 0.8});
  CHECK(max_abs(svt(uv, 2.0)) == 0.0);
}

TEST_CASE("l1 ball projection") {
  CHECK(project_l1_ball(Vec{0.2, -0.3}, 1.0) == Vec{0.2, -0.3});
  CHECK(project_l1_ball(Vec{1.0, 1.0}, 1.0) == Vec{0.5, 0.5});
  CHECK(project_l1_ball(Vec{2.0, 0.0}, 1.0) == Vec{1.0, 0.0});
  const Vec p = project_l1_ball(Vec{3.0, -1.0, 0.5, 2.0}, 2.0);
  CHECK(norm1(p) == doctest::Approx(2.0));
}

TEST_CASE("regularizer values") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(Regularizer::l1(2.0).value(Vec{1.0, -1.0}) == 4.0);
  CHECK(Regularizer::l2_ball(1.0).value(Vec{3.0, 4.0}) == inf);
  CHECK(Regularizer::l2_ball(5.0).value(Vec{3.0, 4.0}) == 0.0);
  CHECK(Regularizer::l1_ball(1.0).value(Vec{0.5, 0.6}) == inf);
  CHECK(Regularizer::nuclear(1.0, 2, 2).value(Vec{3.0, 0.0, 0.0, -2.0}) == doctest::Approx(5.0));
  CHECK(Regularizer::l2_square(0.5).value(Vec{2.0}) == 2.0);
  CHECK(Regularizer::l1(1.0, 1).value(Vec{1.0, 100.0}) == 1.0);
}

TEST_CASE("composite properties on random instances") {
  RngStream rng(2024, 10);
  for (RegKind kind : {RegKind::zero, RegKind::l1, RegKind::l2_ball, RegKind::l1_ball, RegKind::nuclear,
                       RegKind::l2_square}) {
    for (int i = 0; i < 30; ++i) {
      const Instance inst = random_instance(kind, rng);
      CAPTURE(static_cast<int>(kind));
      CHECK(nonexpansive(inst, rng));
      CHECK(optimal(inst, kind == RegKind::nuclear ? 1500 : 4000));
    }
  }
  for (int i = 0; i < 50; ++i) {
    CHECK(svt_law(rng));
    CHECK(bregman_nonneg(rng));
  }
}
