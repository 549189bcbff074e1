#pragma once

#include "lagranet/dispatch.hpp"
#include "lagranet/graph.hpp"
#include "lagranet/localprox.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lagranet {

/// Centralized reference solution.
///
/// For consensus problems x_star is absent and f_star is NaN; g_star is the
/// optimal sum of local objectives. For dispatch problems y_star replicates
/// the optimal price mu and g_star is the optimal dual objective, so strong
/// duality reads g_star + f_star = 0.
///
/// lambda_star is a dual certificate in range(W): it is present only when a
/// subgradient selection summing to zero is known exactly.
struct OracleSolution {
  std::optional<Vector> x_star;
  Vector y_star;
  double f_star = std::numeric_limits<double>::quiet_NaN();
  double g_star = std::numeric_limits<double>::quiet_NaN();
  std::optional<Vector> lambda_star;
  /// Per-coordinate optimal price (dispatch only).
  Vector mu;
  std::string method;
  /// Dispatch: the price landed on a flat (a = 0) segment and the residual was
  /// spread over flat generators.
  bool degenerate_flat = false;
  /// Every box is inactive at the optimum.
  bool interior = false;
};

/// Minimizes sum_i g_i(y) over a common y for QuadraticBox agents (closed
/// form), or for scalar built-in agents by golden-section search.
/// Throws UnboundedBelow, EmptyFeasibleSet, InvalidProblem.
OracleSolution solve_consensus(std::span<const LocalProblem> problems, const Network& net);

/// Closed-form optimum for QuadraticBox agents.
OracleSolution solve_consensus_quadratic(std::span<const LocalProblem> problems, const Network& net);

/// Lambda-iteration: bisection on the common price mu until the aggregate
/// best response meets total demand. Throws InfeasibleDemand.
OracleSolution solve_dispatch_bisection(const DispatchProblem& prob);

/// Bisection stops once |sum x(mu) - demand| falls below this.
inline constexpr double kBisectionResidual = 1e-11;
inline constexpr double kKktTolerance = 1e-8;

struct KktReport {
  std::vector<double> agent_violation;  // box feasibility and stationarity per agent
  double coupling_violation = 0.0;
  double max_violation = 0.0;
  bool passed = false;
};

/// Checks primal feasibility, the coupling constraint, and stationarity of
/// each agent's Lagrangian term by one-sided directional derivatives at x*.
KktReport certify_kkt(const OracleSolution& sol, const DispatchProblem& prob);

}  // namespace lagranet
