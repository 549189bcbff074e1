#include "support/fixtures.hpp"

#include "lagranet/dispatch.hpp"

#include <doctest.h>

using namespace lagranet;
using lagranet::testing::error_code;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

Network pair_network() {
  const std::vector<Edge> edges = {{0, 1, 1.0}};
  return build_network(2, 1, edges);
}

AlgoParams auto_params(const Network& net) {
  const SpectralData spec = spectral(net);
  return validate_params(spec, 1.0, suggest_eta(spec, 1.0));
}

// -min over a fine grid of f(x) + delta x, plus delta d.
double grid_dual(const GeneratorCost& c, double d, double delta) {
  double best = kInf;
  constexpr int kGrid = 200000;
  for (int g = 0; g <= kGrid; ++g) {
    const double x = c.lo + (c.hi - c.lo) * g / kGrid;
    best = std::min(best, c.a * x * x + c.b * x + c.c + delta * x);
  }
  return -best + delta * d;
}

}  // namespace

TEST_SUITE("dispatch") {
  TEST_CASE("dual local objective examples") {
    const GeneratorCost g{1.0, 0.0, 0.0, 0.0, 10.0};
    CHECK(dual_local_objective(g, v1(0.0), v1(0.0)) == doctest::Approx(0.0));
    CHECK(dual_local_objective(GeneratorCost{}, v1(0.0), v1(3.7)) == 0.0);
    CHECK(dual_local_objective(g, v1(0.0), v1(-4.0)) == doctest::Approx(4.0));
    CHECK(error_code([&] { dual_local_objective(g, Vector::Zero(2), v1(0.0)); }) ==
          ErrorCode::DimensionMismatch);
  }

  TEST_CASE("dual local objective matches a grid oracle") {
    SeededRng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
      GeneratorCost c;
      c.a = trial % 4 == 0 ? 0.0 : rng.uniform(0.0, 2.0);
      c.b = rng.uniform(-3.0, 3.0);
      c.c = rng.uniform(0.0, 5.0);
      c.lo = rng.uniform(-5.0, 0.0);
      c.hi = c.lo + rng.uniform(0.5, 10.0);
      const double d = rng.uniform(-2.0, 2.0);
      const double delta = rng.uniform(-8.0, 8.0);
      const double exact = dual_local_objective(c, v1(d), v1(delta));
      const double grid = grid_dual(c, d, delta);
      // Grid minimum is never below the true minimum.
      CHECK(exact >= grid - 1e-9);
      CHECK(exact - grid <= 1e-6 * (1.0 + std::abs(grid)));
    }
  }

  TEST_CASE("problem validation") {
    const std::vector<GeneratorCost> costs = {{1.0, 0.0, 0.0, 0.0, 10.0}, {1.0, 0.0, 0.0, 0.0, 10.0}};
    CHECK(error_code([&] { DispatchProblem(pair_network(), costs, vec({2.0, 2.0}), v1(5.0)); }) ==
          ErrorCode::DemandMismatch);
    CHECK(error_code([&] { DispatchProblem(pair_network(), costs, vec({15.0, 15.0})); }) ==
          ErrorCode::InfeasibleDemand);
    CHECK(error_code([&] { DispatchProblem(pair_network(), costs, vec({2.0})); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(DispatchProblem(pair_network(), costs, vec({2.0, 2.0})).slater_strict());
    CHECK_FALSE(DispatchProblem(pair_network(), costs, vec({10.0, 10.0})).slater_strict());
  }

  TEST_CASE("equal generator split") {
    const std::vector<GeneratorCost> costs = {{1.0, 0.0, 0.0, 0.0, 10.0}, {}, {2.0, 1.0, 0.0, 0.0, 5.0}};
    const Vector d = equal_generator_split(costs, v1(9.0));
    CHECK(d(0) == 4.5);
    CHECK(d(1) == 0.0);
    CHECK(d(2) == 4.5);
    CHECK(error_code([] { equal_generator_split(std::vector<GeneratorCost>(2), v1(1.0)); }) ==
          ErrorCode::InvalidProblem);
  }

  TEST_CASE("single bus step") {
    const Network net = build_network(1, 1, {});
    const DispatchProblem prob(net, {{1.0, 0.0, 0.0, 0.0, 10.0}}, v1(2.0));
    const AlgoParams params = validate_params(spectral(net), 1.0, 1.0);
    const DispatchState s1 = dispatch_step(init_dispatch(prob), prob, params);
    CHECK(s1.k == 1);
    CHECK(s1.x(0) == doctest::Approx(2.0 / 3.0));
    CHECK(s1.y(0) == doctest::Approx(-4.0 / 3.0));
  }

  TEST_CASE("all-pinned network is a fixed point") {
    const std::vector<Edge> edges = {{0, 1, 1.0}, {1, 2, 1.0}};
    const Network net = build_network(3, 1, edges);
    const DispatchProblem prob(net, std::vector<GeneratorCost>(3), Vector::Zero(3));
    DispatchState st = init_dispatch(prob);
    run_dispatch(st, prob, auto_params(net), 50, [&](const DispatchState& s) {
      CHECK(s.x.norm() == 0.0);
      CHECK(s.y.norm() == 0.0);
      CHECK(s.lambda.norm() == 0.0);
      CHECK(duality_gap(s, prob) == 0.0);
    });
  }

  TEST_CASE("symmetric pair splits demand equally") {
    const std::vector<GeneratorCost> costs = {{1.0, 0.0, 0.0, 0.0, 10.0}, {1.0, 0.0, 0.0, 0.0, 10.0}};
    const DispatchProblem prob(pair_network(), costs, vec({2.0, 2.0}), v1(4.0));
    DispatchState st = init_dispatch(prob);
    run_dispatch(st, prob, auto_params(prob.net()), 3000);
    CHECK(st.x(0) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(st.x(1) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(std::abs(duality_gap(st, prob)) < 1e-6);
  }

  TEST_CASE("feasibility residual") {
    const std::vector<GeneratorCost> costs = {{1.0, 0.0, 0.0, 0.0, 10.0}, {1.0, 0.0, 0.0, 0.0, 10.0}};
    const DispatchProblem prob(pair_network(), costs, vec({2.0, 2.0}));
    DispatchState st = init_dispatch(prob);
    st.x = vec({3.0, 0.0});
    CHECK(feasibility_residual(st, prob) == 1.0);
    st.x = vec({1.0, 3.0});
    CHECK(feasibility_residual(st, prob) == 0.0);
  }

  TEST_CASE("initial duality gap follows the definitions") {
    // With b >= 0 and lo = 0 every unit's cost is minimized at x = 0, so
    // G(0) = -sum c_i and f(x_0) = sum c_i.
    const std::vector<GeneratorCost> costs = {{1.0, 2.0, 5.0, 0.0, 10.0}, {0.5, 1.0, 7.0, 0.0, 10.0}};
    const DispatchProblem prob(pair_network(), costs, vec({3.0, 1.0}));
    const DispatchState s0 = init_dispatch(prob);
    CHECK(s0.x.norm() == 0.0);
    CHECK(dual_objective(prob, s0.y) == doctest::Approx(-12.0));
    CHECK(total_cost(costs, s0.x, 1) == doctest::Approx(12.0));
    CHECK(duality_gap(s0, prob) == doctest::Approx(0.0));
    // A box away from zero starts at its projection.
    const std::vector<GeneratorCost> raised = {{1.0, 2.0, 5.0, 1.0, 10.0}, {0.5, 1.0, 7.0, 0.0, 10.0}};
    const DispatchProblem prob2(pair_network(), raised, vec({3.0, 1.0}));
    const DispatchState t0 = init_dispatch(prob2);
    CHECK(t0.x(0) == 1.0);
    CHECK(duality_gap(t0, prob2) ==
          doctest::Approx(dual_objective(prob2, Vector::Zero(2)) + total_cost(raised, t0.x, 1)));
  }

  TEST_CASE("per-iterate identities") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const DispatchProblem prob = testing::random_dispatch(seed, 2, 10, false);
      const AlgoParams params = auto_params(prob.net());
      const int n = prob.n();
      DispatchState prev = init_dispatch(prob);
      for (int k = 0; k < 200; ++k) {
        const DispatchState next = dispatch_step(prev, prob, params);
        // Coupling residual equals eta times the change in the y block sum.
        const Vector lhs = block_sum(next.x - prob.demand(), n, 1);
        const Vector rhs = params.eta * block_sum(next.y - prev.y, n, 1);
        CHECK((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
        for (int i = 0; i < n; ++i) {
          const auto& c = prob.costs()[static_cast<std::size_t>(i)];
          const double xi = next.x(i);
          CHECK(xi >= c.lo);
          CHECK(xi <= c.hi);
          // -y_{k+1} is a subgradient of f_i plus the box normal cone at x_{k+1}.
          const double slope = 2.0 * c.a * xi + c.b + next.y(i);
          const double tol = 1e-9 * (1.0 + std::abs(c.b) + std::abs(next.y(i)));
          if (xi < c.hi) CHECK(slope >= -tol);
          if (xi > c.lo) CHECK(slope <= tol);
        }
        CHECK(lambda_sum_violation(next.lambda, n, 1) <= kLambdaSumTol);
        prev = next;
      }
    }
  }

  TEST_CASE("random instances converge to the bisection optimum") {
    for (std::uint64_t seed = 11; seed <= 15; ++seed) {
      const DispatchProblem prob = testing::random_dispatch(seed);
      const OracleSolution sol = solve_dispatch_bisection(prob);
      DispatchState st = init_dispatch(prob);
      run_dispatch(st, prob, auto_params(prob.net()), 20000);
      CHECK((st.x - *sol.x_star).cwiseAbs().maxCoeff() <= 1e-5);
      CHECK(feasibility_residual(st, prob) <= 1e-6);
    }
  }
}
