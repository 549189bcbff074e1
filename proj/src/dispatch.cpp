#include "lagranet/dispatch.hpp"

#include "lagranet/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace lagranet {

DispatchProblem::DispatchProblem(Network net, std::vector<GeneratorCost> costs, Vector demand,
                                 Vector declared_total)
    : net_(std::move(net)), costs_(std::move(costs)), demand_(std::move(demand)),
      total_(std::move(declared_total)) {
  check();
}

DispatchProblem::DispatchProblem(Network net, std::vector<GeneratorCost> costs, Vector demand)
    : net_(std::move(net)), costs_(std::move(costs)), demand_(std::move(demand)) {
  if (demand_.size() == net_.dim()) total_ = block_sum(demand_, net_.n(), net_.p());
  check();
}

void DispatchProblem::check() {
  require_problem_count(net_, costs_.size());
  const int n = net_.n();
  const int p = net_.p();
  if (demand_.size() != net_.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "demand must have length n*p");
  }
  if (total_.size() != p) throw Error(ErrorCode::DimensionMismatch, "total demand must have length p");
  for (const auto& c : costs_) c.validate();

  const Vector sum = block_sum(demand_, n, p);
  for (int j = 0; j < p; ++j) {
    if (std::abs(sum(j) - total_(j)) > 1e-9 * (1.0 + std::abs(total_(j)))) {
      std::ostringstream os;
      os.precision(17);
      os << "virtual demands sum to " << sum(j) << " but total is " << total_(j);
      throw Error(ErrorCode::DemandMismatch, os.str());
    }
  }

  double sum_lo = 0.0;
  double sum_hi = 0.0;
  for (const auto& c : costs_) {
    sum_lo += c.lo;
    sum_hi += c.hi;
  }
  slater_strict_ = true;
  for (int j = 0; j < p; ++j) {
    if (total_(j) < sum_lo || total_(j) > sum_hi) {
      std::ostringstream os;
      os.precision(17);
      os << "total demand " << total_(j) << " outside [" << sum_lo << ", " << sum_hi << "]";
      throw Error(ErrorCode::InfeasibleDemand, os.str());
    }
    if (!(total_(j) > sum_lo && total_(j) < sum_hi)) slater_strict_ = false;
  }
}

Vector equal_generator_split(const std::vector<GeneratorCost>& costs, const Vector& total) {
  const int p = static_cast<int>(total.size());
  const auto m = std::count_if(costs.begin(), costs.end(),
                               [](const GeneratorCost& c) { return c.is_generator(); });
  if (m == 0) throw Error(ErrorCode::InvalidProblem, "no generator buses to carry demand");
  Vector d = Vector::Zero(static_cast<Eigen::Index>(costs.size()) * p);
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (costs[i].is_generator()) {
      d.segment(static_cast<Eigen::Index>(i) * p, p) = total / static_cast<double>(m);
    }
  }
  return d;
}

Vector best_response(const GeneratorCost& cost, const Eigen::Ref<const Vector>& delta) {
  Vector x(delta.size());
  for (Eigen::Index j = 0; j < delta.size(); ++j) {
    x(j) = minimize_quadratic_on_interval(cost.a, cost.b + delta(j), cost.lo, cost.hi);
  }
  return x;
}

double dual_local_objective(const GeneratorCost& cost, const Eigen::Ref<const Vector>& d_i,
                            const Eigen::Ref<const Vector>& delta) {
  if (d_i.size() != delta.size()) {
    throw Error(ErrorCode::DimensionMismatch, "demand and multiplier sizes differ");
  }
  // f*(-delta) = -min_x { f(x) + <delta, x> }
  const Vector x = best_response(cost, delta);
  return -(eval_cost(cost, x) + delta.dot(x)) + delta.dot(d_i);
}

double dual_objective(const DispatchProblem& prob, const Eigen::Ref<const Vector>& y) {
  const int p = prob.p();
  double acc = 0.0;
  for (int i = 0; i < prob.n(); ++i) {
    const auto seg = static_cast<Eigen::Index>(i) * p;
    acc += dual_local_objective(prob.costs()[static_cast<std::size_t>(i)],
                                prob.demand().segment(seg, p), y.segment(seg, p));
  }
  return acc;
}

DispatchState init_dispatch(const DispatchProblem& prob, const Eigen::Ref<const Vector>& y0,
                            const Eigen::Ref<const Vector>& lambda0) {
  const auto& net = prob.net();
  if (y0.size() != net.dim() || lambda0.size() != net.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "initial point must have length n*p");
  }
  if (lambda_sum_violation(lambda0, net.n(), net.p()) > kLambdaSumTol) {
    throw Error(ErrorCode::LambdaSumNonzero, "initial multipliers must sum to zero");
  }
  DispatchState s;
  s.k = 0;
  s.x.resize(net.dim());
  const int p = net.p();
  for (int i = 0; i < net.n(); ++i) {
    const auto& c = prob.costs()[static_cast<std::size_t>(i)];
    s.x.segment(static_cast<Eigen::Index>(i) * p, p).setConstant(std::clamp(0.0, c.lo, c.hi));
  }
  s.y = y0;
  s.lambda = lambda0;
  s.t = laplacian_apply(net, s.y);
  return s;
}

DispatchState init_dispatch(const DispatchProblem& prob) {
  return init_dispatch(prob, Vector::Zero(prob.net().dim()), Vector::Zero(prob.net().dim()));
}

DispatchState dispatch_step(const DispatchState& state, const DispatchProblem& prob,
                            const AlgoParams& params) {
  require_certified(params);
  const auto& net = prob.net();
  const int p = net.p();
  const double inv_eta = 1.0 / params.eta;

  DispatchState next;
  next.k = state.k + 1;
  next.x.resize(net.dim());
  next.y.resize(net.dim());
  for (int i = 0; i < net.n(); ++i) {
    const auto seg = static_cast<Eigen::Index>(i) * p;
    const Vector jbase =
        state.y.segment(seg, p) +
        inv_eta * (-prob.demand().segment(seg, p) + state.lambda.segment(seg, p) -
                   params.rho * state.t.segment(seg, p));
    const Vector x = dispatch_x_step(prob.costs()[static_cast<std::size_t>(i)], jbase, params.eta);
    next.x.segment(seg, p) = x;
    next.y.segment(seg, p) = jbase + inv_eta * x;
  }
  next.t = laplacian_apply(net, next.y);
  next.lambda = state.lambda - params.rho * next.t;
  return next;
}

double feasibility_residual(const DispatchState& state, const DispatchProblem& prob) {
  return (block_sum(state.x, prob.n(), prob.p()) - prob.total_demand()).norm();
}

double duality_gap(const DispatchState& state, const DispatchProblem& prob) {
  const int n = prob.n();
  const int p = prob.p();
  const Vector ybar = block_sum(state.y, n, p) / static_cast<double>(n);
  Vector replicated(prob.net().dim());
  for (int i = 0; i < n; ++i) replicated.segment(static_cast<Eigen::Index>(i) * p, p) = ybar;
  return dual_objective(prob, replicated) + total_cost(prob.costs(), state.x, p);
}

void run_dispatch(DispatchState& state, const DispatchProblem& prob, const AlgoParams& params,
                  long iters, const DispatchSink& sink) {
  require_certified(params);
  if (sink) sink(state);
  for (long it = 0; it < iters; ++it) {
    state = dispatch_step(state, prob, params);
    if (sink) sink(state);
  }
}

}  // namespace lagranet
