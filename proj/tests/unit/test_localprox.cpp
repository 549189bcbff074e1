#include "support/fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace lagranet;
using lagranet::testing::error_code;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

// Objective of the prox subproblem for scalar problems.
double prox_objective(const LocalProblem& prob, double linear, double anchor, double eta, double y) {
  return prob.value(v1(y)) - linear * y + 0.5 * eta * (y - anchor) * (y - anchor);
}

// Objective of the dispatch x-subproblem.
double dispatch_objective(const GeneratorCost& c, double jbase, double eta, double xi) {
  const double j = jbase + xi / eta;
  return c.a * xi * xi + c.b * xi + c.c + 0.5 * eta * j * j;
}

}  // namespace

TEST_SUITE("localprox") {
  TEST_CASE("quadratic prox examples") {
    const auto prob = LocalProblem::quadratic(v1(1.0), v1(0.0));
    CHECK(prox_step(prob, v1(0.0), v1(2.0), 1.0)(0) == doctest::Approx(1.0));
    // Box clips the unconstrained point.
    const auto boxed = LocalProblem::quadratic_box(v1(1.0), v1(0.0), v1(1.5), v1(3.0));
    CHECK(prox_step(boxed, v1(0.0), v1(2.0), 1.0)(0) == doctest::Approx(1.5));
  }

  TEST_CASE("absolute value prox examples") {
    const auto prob = LocalProblem::absolute_value(1.0, 0.0);
    CHECK(prox_step(prob, v1(0.0), v1(2.0), 1.0)(0) == doctest::Approx(1.0));
    CHECK(prox_step(prob, v1(0.0), v1(0.5), 1.0)(0) == 0.0);
    const auto shifted = LocalProblem::absolute_value(1.0, 3.0);
    CHECK(prox_step(shifted, v1(0.0), v1(0.0), 1.0)(0) == doctest::Approx(1.0));
  }

  TEST_CASE("prox errors") {
    const auto prob = LocalProblem::quadratic(v1(1.0), v1(0.0));
    CHECK(error_code([&] { prox_step(prob, v1(0.0), v1(0.0), 0.0); }) == ErrorCode::NonPositiveEta);
    CHECK(error_code([&] { prox_step(prob, v1(0.0), v1(0.0), -1.0); }) == ErrorCode::NonPositiveEta);
    CHECK(error_code([&] { prox_step(prob, Vector::Zero(2), v1(0.0), 1.0); }) == ErrorCode::DimensionMismatch);
    CHECK(error_code([] { LocalProblem::quadratic(v1(-1.0), v1(0.0)); }) == ErrorCode::InvalidProblem);
    CHECK(error_code([] { LocalProblem::quadratic_box(v1(1.0), v1(0.0), v1(2.0), v1(1.0)); }) ==
          ErrorCode::InvalidProblem);
    CHECK(error_code([] { LocalProblem::absolute_value(-1.0, 0.0); }) == ErrorCode::InvalidProblem);
  }

  TEST_CASE("custom prox failures carry the agent index") {
    CustomProx cp;
    cp.dim = 1;
    cp.solve = [](const Vector&, const Vector&, double) -> Vector { throw std::runtime_error("boom"); };
    const auto prob = LocalProblem::custom(cp);
    try {
      prox_step(prob, v1(0.0), v1(0.0), 1.0, 7);
      FAIL("expected CustomSolverFailure");
    } catch (const CustomSolverFailure& e) {
      CHECK(e.agent() == 7);
      CHECK(e.code() == ErrorCode::CustomSolverFailure);
    }
    CustomProx wrong = cp;
    wrong.solve = [](const Vector&, const Vector&, double) { return Vector::Zero(3).eval(); };
    CHECK(error_code([&] { prox_step(LocalProblem::custom(wrong), v1(0.0), v1(0.0), 1.0, 2); }) ==
          ErrorCode::CustomSolverFailure);

    CustomProx good = cp;
    good.solve = [](const Vector& linear, const Vector& anchor, double eta) {
      return (anchor + linear / eta).eval();
    };
    CHECK(prox_step(LocalProblem::custom(good), v1(1.0), v1(2.0), 2.0)(0) == doctest::Approx(2.5));
    CHECK(std::isnan(LocalProblem::custom(good).value(v1(0.0))));
  }

  TEST_CASE("prox optimality by directional probes") {
    SeededRng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const bool absval = trial % 2 == 0;
      const LocalProblem prob =
          absval ? LocalProblem::absolute_value(rng.uniform(0.0, 3.0), rng.uniform(-2.0, 2.0))
                 : LocalProblem::quadratic_box(v1(rng.uniform(0.0, 2.0)), v1(rng.uniform(-2.0, 2.0)),
                                               v1(rng.uniform(-3.0, 0.0)), v1(rng.uniform(0.0, 3.0)));
      const double linear = rng.uniform(-3.0, 3.0);
      const double anchor = rng.uniform(-3.0, 3.0);
      const double eta = rng.uniform(0.2, 4.0);
      const double y = prox_step(prob, v1(linear), v1(anchor), eta)(0);
      REQUIRE(prob.contains(v1(y), 0.0));
      const double f0 = prox_objective(prob, linear, anchor, eta, y);
      for (double h : {1e-3, 1e-4}) {
        for (double dir : {-1.0, 1.0}) {
          const double z = y + dir * h;
          if (!prob.contains(v1(z), 0.0)) continue;
          // Directional derivative estimate must be nonnegative.
          CHECK((prox_objective(prob, linear, anchor, eta, z) - f0) / h >= -1e-8);
        }
      }
    }
  }

  TEST_CASE("prox is nonexpansive in the anchor") {
    SeededRng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
      const int p = 1 + static_cast<int>(rng.index(3));
      Vector qd(p), q(p), lo(p), hi(p);
      for (int j = 0; j < p; ++j) {
        qd(j) = rng.uniform(0.0, 2.0);
        q(j) = rng.uniform(-1.0, 1.0);
        lo(j) = rng.uniform(-2.0, 0.0);
        hi(j) = rng.uniform(0.0, 2.0);
      }
      const auto prob = LocalProblem::quadratic_box(qd, q, lo, hi);
      const Vector lin = testing::random_vector(p, rng);
      const Vector a1 = testing::random_vector(p, rng, -3.0, 3.0);
      const Vector a2 = testing::random_vector(p, rng, -3.0, 3.0);
      const double eta = rng.uniform(0.5, 3.0);
      const Vector y1 = prox_step(prob, lin, a1, eta);
      const Vector y2 = prox_step(prob, lin, a2, eta);
      CHECK((y1 - y2).norm() <= (a1 - a2).norm() * (1.0 + 1e-12));
    }
  }

  TEST_CASE("dispatch x-step examples") {
    GeneratorCost off;
    CHECK(dispatch_x_step(off, v1(-123.0), 1.0)(0) == 0.0);
    GeneratorCost free_gen{1.0, 0.0, 0.0, -kInf, kInf};
    CHECK(dispatch_x_step(free_gen, v1(0.0), 1.0)(0) == doctest::Approx(0.0));
    GeneratorCost boxed{1.0, 2.0, 0.0, 0.0, 10.0};
    CHECK(dispatch_x_step(boxed, v1(-5.0), 1.0)(0) == doctest::Approx(1.0));
    CHECK(error_code([&] { dispatch_x_step(boxed, v1(0.0), 0.0); }) == ErrorCode::NonPositiveEta);
  }

  TEST_CASE("dispatch x-step agrees with a grid search and stays in the box") {
    SeededRng rng(13);
    for (int trial = 0; trial < 40; ++trial) {
      GeneratorCost c;
      c.a = trial % 5 == 0 ? 0.0 : rng.uniform(0.0, 2.0);
      c.b = rng.uniform(-5.0, 5.0);
      c.lo = rng.uniform(-5.0, 0.0);
      c.hi = c.lo + rng.uniform(0.1, 10.0);
      const double jbase = rng.uniform(-10.0, 10.0);
      const double eta = rng.uniform(0.2, 4.0);
      const double x = dispatch_x_step(c, v1(jbase), eta)(0);
      CHECK(x >= c.lo);
      CHECK(x <= c.hi);
      constexpr int kGrid = 100000;
      const double h = (c.hi - c.lo) / kGrid;
      double best = c.lo;
      double best_val = dispatch_objective(c, jbase, eta, best);
      for (int g = 1; g <= kGrid; ++g) {
        const double z = c.lo + h * g;
        const double val = dispatch_objective(c, jbase, eta, z);
        if (val < best_val) {
          best_val = val;
          best = z;
        }
      }
      CHECK(std::abs(x - best) <= h);
      CHECK(dispatch_objective(c, jbase, eta, x) <= best_val + 1e-12 * (1.0 + std::abs(best_val)));
    }
  }

  TEST_CASE("cost evaluation") {
    CHECK(eval_cost(GeneratorCost{}, v1(7.0)) == 0.0);
    CHECK(eval_cost(GeneratorCost{1.0, 2.0, 3.0, 0.0, 10.0}, v1(2.0)) == 11.0);
    const std::vector<GeneratorCost> two = {{1.0, 0.0, 0.0, 0.0, 10.0}, {2.0, 0.0, 0.0, 0.0, 10.0}};
    Vector x(2);
    x << 2.0, 1.0;
    CHECK(total_cost(two, x, 1) == 6.0);
  }

  TEST_CASE("generator cost validation") {
    CHECK(error_code([] { GeneratorCost{-1.0, 0.0, 0.0, 0.0, 1.0}.validate(); }) == ErrorCode::InvalidProblem);
    CHECK(error_code([] { GeneratorCost{1.0, 0.0, 0.0, 2.0, 1.0}.validate(); }) == ErrorCode::InvalidProblem);
    CHECK_FALSE(GeneratorCost{}.is_generator());
    CHECK(GeneratorCost{}.pinned());
  }

  TEST_CASE("interval minimizer") {
    CHECK(minimize_quadratic_on_interval(1.0, -4.0, 0.0, 10.0) == doctest::Approx(2.0));
    CHECK(minimize_quadratic_on_interval(1.0, -4.0, 3.0, 10.0) == doctest::Approx(3.0));
    CHECK(minimize_quadratic_on_interval(0.0, 1.0, -1.0, 5.0) == -1.0);
    CHECK(minimize_quadratic_on_interval(0.0, -1.0, -1.0, 5.0) == 5.0);
  }
}
