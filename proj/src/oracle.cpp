#include "lagranet/oracle.hpp"

#include "lagranet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

namespace lagranet {

namespace {

Vector replicate(const Vector& block, int n) {
  const auto p = block.size();
  Vector out(p * n);
  for (int i = 0; i < n; ++i) out.segment(static_cast<Eigen::Index>(i) * p, p) = block;
  return out;
}

double sum_values(std::span<const LocalProblem> problems, const Vector& y) {
  double acc = 0.0;
  for (const auto& prob : problems) acc += prob.value(y);
  return acc;
}

// Common feasible interval of coordinate j across all box-constrained agents.
std::pair<double, double> common_interval(std::span<const LocalProblem> problems, int j) {
  double lo = -kInf;
  double hi = kInf;
  for (const auto& prob : problems) {
    if (const auto* qb = std::get_if<QuadraticBox>(&prob.kind())) {
      lo = std::max(lo, qb->lo(j));
      hi = std::min(hi, qb->hi(j));
    }
  }
  if (lo > hi) {
    throw Error(ErrorCode::EmptyFeasibleSet, "agent boxes do not intersect in coordinate " +
                                                 std::to_string(j));
  }
  return {lo, hi};
}

// Individual constrained minimizer of a scalar built-in agent.
double scalar_minimizer(const LocalProblem& prob) {
  if (const auto* av = std::get_if<AbsoluteValue>(&prob.kind())) return av->center;
  if (const auto* qb = std::get_if<QuadraticBox>(&prob.kind())) {
    const double m = minimize_quadratic_on_interval(0.5 * qb->q_diag(0), qb->q(0), qb->lo(0),
                                                    qb->hi(0));
    if (std::isfinite(m)) return m;
  }
  throw Error(ErrorCode::InvalidProblem, "golden-section oracle needs finite agent minimizers");
}

void check_problems(std::span<const LocalProblem> problems, const Network& net) {
  require_problem_count(net, problems.size());
  for (const auto& prob : problems) {
    if (prob.dim() != net.p()) throw Error(ErrorCode::DimensionMismatch, "agent dimension != p");
  }
}

}  // namespace

OracleSolution solve_consensus_quadratic(std::span<const LocalProblem> problems, const Network& net) {
  check_problems(problems, net);
  const int p = net.p();
  Vector ybar(p);
  bool interior = true;
  for (int j = 0; j < p; ++j) {
    double curv = 0.0;
    double lin = 0.0;
    for (const auto& prob : problems) {
      const auto* qb = std::get_if<QuadraticBox>(&prob.kind());
      if (!qb) throw Error(ErrorCode::InvalidProblem, "closed-form oracle needs QuadraticBox agents");
      curv += qb->q_diag(j);
      lin += qb->q(j);
    }
    const auto [lo, hi] = common_interval(problems, j);
    if (curv == 0.0 && ((lin > 0.0 && std::isinf(lo)) || (lin < 0.0 && std::isinf(hi)))) {
      throw Error(ErrorCode::UnboundedBelow, "coordinate " + std::to_string(j));
    }
    ybar(j) = minimize_quadratic_on_interval(0.5 * curv, lin, lo, hi);
    for (const auto& prob : problems) {
      const auto& qb = std::get<QuadraticBox>(prob.kind());
      if (!(ybar(j) > qb.lo(j) && ybar(j) < qb.hi(j))) interior = false;
    }
  }

  OracleSolution sol;
  sol.method = "closed-form";
  sol.y_star = replicate(ybar, net.n());
  sol.g_star = sum_values(problems, ybar);
  sol.interior = interior;
  if (interior) {
    // Gradient selection; its blocks sum to zero at an interior optimum.
    Vector grad(net.dim());
    for (int i = 0; i < net.n(); ++i) {
      const auto& qb = std::get<QuadraticBox>(problems[static_cast<std::size_t>(i)].kind());
      grad.segment(static_cast<Eigen::Index>(i) * p, p) =
          qb.q_diag.cwiseProduct(ybar) + qb.q;
    }
    sol.lambda_star = consensus_deviation(grad, net.n(), p);
  }
  return sol;
}

OracleSolution solve_consensus(std::span<const LocalProblem> problems, const Network& net) {
  check_problems(problems, net);
  const bool all_quadratic = std::all_of(problems.begin(), problems.end(),
                                         [](const LocalProblem& pr) { return pr.is_quadratic_box(); });
  if (all_quadratic) return solve_consensus_quadratic(problems, net);
  if (net.p() != 1) throw Error(ErrorCode::InvalidProblem, "golden-section oracle is scalar only");

  const auto [lo, hi] = common_interval(problems, 0);
  double a = kInf;
  double b = -kInf;
  for (const auto& prob : problems) {
    const double m = scalar_minimizer(prob);
    a = std::min(a, m);
    b = std::max(b, m);
  }
  a = std::clamp(a, lo, hi);
  b = std::clamp(b, lo, hi);

  Vector y(1);
  auto phi = [&](double v) {
    y(0) = v;
    return sum_values(problems, y);
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = phi(c);
  double fd = phi(d);
  while (b - a > 1e-12 * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = phi(d);
    }
  }
  Vector ybar(1);
  ybar(0) = 0.5 * (a + b);

  OracleSolution sol;
  sol.method = "golden-section";
  sol.y_star = replicate(ybar, net.n());
  sol.g_star = sum_values(problems, ybar);
  return sol;
}

OracleSolution solve_dispatch_bisection(const DispatchProblem& prob) {
  const int n = prob.n();
  const int p = prob.p();
  const auto& costs = prob.costs();

  Vector mu(p);
  Vector x_star(prob.net().dim());
  bool degenerate = false;

  auto aggregate = [&](double m) {
    double s = 0.0;
    for (const auto& c : costs) s += minimize_quadratic_on_interval(c.a, c.b + m, c.lo, c.hi);
    return s;
  };

  for (int j = 0; j < p; ++j) {
    const double target = prob.total_demand()(j);
    double sum_lo = 0.0;
    double sum_hi = 0.0;
    double top = -kInf;
    double bottom = kInf;
    bool any_movable = false;
    for (const auto& c : costs) {
      sum_lo += c.lo;
      sum_hi += c.hi;
      if (c.pinned()) continue;
      any_movable = true;
      top = std::max(top, c.b + 2.0 * c.a * c.hi);
      bottom = std::min(bottom, c.b + 2.0 * c.a * c.lo);
    }
    if (target < sum_lo || target > sum_hi) {
      throw Error(ErrorCode::InfeasibleDemand, "total demand outside aggregate capacity");
    }

    double m_star = 0.0;
    if (any_movable) {
      // Supply is nonincreasing in mu: at m_lo every unit is at hi, at m_hi at lo.
      double m_lo = std::isfinite(top) ? -top : -1.0;
      double m_hi = std::isfinite(bottom) ? -bottom : 1.0;
      double width = 1.0 + std::abs(m_hi - m_lo);
      while (aggregate(m_lo) < target) {
        m_lo -= width;
        width *= 2.0;
      }
      width = 1.0 + std::abs(m_hi - m_lo);
      while (aggregate(m_hi) > target) {
        m_hi += width;
        width *= 2.0;
      }
      double s_lo = aggregate(m_lo);
      double s_hi = aggregate(m_hi);
      m_star = 0.5 * (m_lo + m_hi);
      for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (m_lo + m_hi);
        const double s_mid = aggregate(mid);
        if (s_mid > s_lo || s_mid < s_hi) {
          throw std::logic_error("aggregate supply is not monotone in the price");
        }
        m_star = mid;
        if (std::abs(s_mid - target) <= kBisectionResidual) break;
        if (mid <= m_lo || mid >= m_hi) break;  // interval exhausted
        if (s_mid > target) {
          m_lo = mid;
          s_lo = s_mid;
        } else {
          m_hi = mid;
          s_hi = s_mid;
        }
      }
    }
    mu(j) = m_star;

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& c = costs[static_cast<std::size_t>(i)];
      const double xi = minimize_quadratic_on_interval(c.a, c.b + m_star, c.lo, c.hi);
      x_star(static_cast<Eigen::Index>(i) * p + j) = xi;
      total += xi;
    }

    // Spread what bisection could not resolve: over flat units sitting on their
    // price step first, otherwise over every movable unit, in proportion to slack.
    const double residual = target - total;
    if (residual != 0.0 && any_movable) {
      auto slack = [&](int i) {
        const auto& c = costs[static_cast<std::size_t>(i)];
        const double xi = x_star(static_cast<Eigen::Index>(i) * p + j);
        return residual > 0.0 ? c.hi - xi : xi - c.lo;
      };
      std::vector<int> carriers;
      const double price_tol = 1e-9 * (1.0 + std::abs(m_star));
      for (int i = 0; i < n; ++i) {
        const auto& c = costs[static_cast<std::size_t>(i)];
        if (!c.pinned() && c.a == 0.0 && std::abs(c.b + m_star) <= price_tol && slack(i) > 0.0) {
          carriers.push_back(i);
        }
      }
      if (!carriers.empty() && std::abs(residual) > kBisectionResidual) degenerate = true;
      if (carriers.empty()) {
        for (int i = 0; i < n; ++i) {
          const auto& c = costs[static_cast<std::size_t>(i)];
          const double xi = x_star(static_cast<Eigen::Index>(i) * p + j);
          if (xi > c.lo && xi < c.hi) carriers.push_back(i);
        }
      }
      if (carriers.empty()) {
        for (int i = 0; i < n; ++i) {
          if (!costs[static_cast<std::size_t>(i)].pinned() && slack(i) > 0.0) carriers.push_back(i);
        }
      }
      double total_slack = 0.0;
      for (int i : carriers) total_slack += std::min(slack(i), 1e300);
      for (int i : carriers) {
        const auto& c = costs[static_cast<std::size_t>(i)];
        const double share = total_slack > 0.0 && std::isfinite(total_slack)
                                 ? std::min(slack(i), 1e300) / total_slack
                                 : 1.0 / static_cast<double>(carriers.size());
        double& xi = x_star(static_cast<Eigen::Index>(i) * p + j);
        xi = std::clamp(xi + share * residual, c.lo, c.hi);
      }
    }
  }

  OracleSolution sol;
  sol.method = "lambda-bisection";
  sol.mu = mu;
  sol.y_star = replicate(mu, n);
  sol.f_star = total_cost(costs, x_star, p);
  sol.g_star = dual_objective(prob, sol.y_star);
  sol.degenerate_flat = degenerate;
  sol.interior = true;
  for (int i = 0; i < n; ++i) {
    const auto& c = costs[static_cast<std::size_t>(i)];
    if (c.pinned()) continue;
    for (int j = 0; j < p; ++j) {
      const double xi = x_star(static_cast<Eigen::Index>(i) * p + j);
      if (!(xi > c.lo && xi < c.hi)) sol.interior = false;
    }
  }
  // -x*_i + d_i is a subgradient of g_i at mu; the selection sums to zero.
  sol.lambda_star = consensus_deviation(prob.demand() - x_star, n, p);
  sol.x_star = std::move(x_star);
  return sol;
}

KktReport certify_kkt(const OracleSolution& sol, const DispatchProblem& prob) {
  const int n = prob.n();
  const int p = prob.p();
  if (!sol.x_star || sol.x_star->size() != prob.net().dim() || sol.mu.size() != p) {
    throw Error(ErrorCode::InvalidProblem, "KKT check needs x* and the optimal price");
  }
  const Vector& x = *sol.x_star;

  KktReport rep;
  rep.agent_violation.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto& c = prob.costs()[static_cast<std::size_t>(i)];
    double v = 0.0;
    for (int j = 0; j < p; ++j) {
      const double xi = x(static_cast<Eigen::Index>(i) * p + j);
      v = std::max({v, c.lo - xi, xi - c.hi});
      if (c.pinned()) continue;
      // d/dx [f_i(x) + mu x]; moving up must not help, nor moving down.
      const double slope = 2.0 * c.a * xi + c.b + sol.mu(j);
      if (xi < c.hi) v = std::max(v, -slope);
      if (xi > c.lo) v = std::max(v, slope);
    }
    rep.agent_violation[static_cast<std::size_t>(i)] = v;
    rep.max_violation = std::max(rep.max_violation, v);
  }
  rep.coupling_violation = (block_sum(x, n, p) - prob.total_demand()).cwiseAbs().maxCoeff();
  rep.max_violation = std::max(rep.max_violation, rep.coupling_violation);
  rep.passed = rep.max_violation <= kKktTolerance;
  return rep;
}

}  // namespace lagranet
