#include "lagranet/consensus.hpp"

#include "lagranet/error.hpp"

#include <cmath>
#include <string>

namespace lagranet {

void require_certified(const AlgoParams& params) {
  if (!params.certified) {
    throw Error(ErrorCode::UncertifiedParams, "parameters were not certified by validate_params");
  }
}

void require_problem_count(const Network& net, std::size_t count) {
  if (count != static_cast<std::size_t>(net.n())) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(net.n()) +
                                                  " local problems, got " + std::to_string(count));
  }
}

AlgoParams validate_params(const SpectralData& spec, double rho, double eta) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorCode::NonPositiveRho, "rho=" + std::to_string(rho));
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw Error(ErrorCode::NonPositiveEta, "eta=" + std::to_string(eta));
  }
  const double bound = rho * spec.lambda_max;
  if (!(eta - bound > kStepSizeMargin * bound)) throw StepSizeViolation(eta, bound);
  return AlgoParams{rho, eta, true, bound};
}

double suggest_eta(const SpectralData& spec, double rho, double factor) {
  const double bound = rho * spec.lambda_max;
  return bound > 0.0 ? bound * factor : rho;
}

double lambda_sum_violation(const Eigen::Ref<const Vector>& lambda, int n, int p) {
  double max_block = 0.0;
  for (int i = 0; i < n; ++i) {
    max_block = std::max(max_block, lambda.segment(static_cast<Eigen::Index>(i) * p, p).norm());
  }
  return block_sum(lambda, n, p).norm() / (1.0 + max_block);
}

StackedState init_state(const Network& net, std::span<const LocalProblem> problems,
                        const Eigen::Ref<const Vector>& y0, const Eigen::Ref<const Vector>& lambda0) {
  require_problem_count(net, problems.size());
  if (y0.size() != net.dim() || lambda0.size() != net.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "initial point must have length n*p");
  }
  const int p = net.p();
  if (lambda_sum_violation(lambda0, net.n(), p) > kLambdaSumTol) {
    throw Error(ErrorCode::LambdaSumNonzero, "initial multipliers must sum to zero");
  }
  for (int i = 0; i < net.n(); ++i) {
    const auto& prob = problems[static_cast<std::size_t>(i)];
    if (prob.dim() != p) {
      throw Error(ErrorCode::DimensionMismatch, "agent " + std::to_string(i) + " has dimension " +
                                                    std::to_string(prob.dim()));
    }
    if (!prob.contains(y0.segment(static_cast<Eigen::Index>(i) * p, p))) {
      throw Error(ErrorCode::InfeasibleInitialPoint, "agent " + std::to_string(i));
    }
  }
  StackedState s;
  s.k = 0;
  s.y = y0;
  s.lambda = lambda0;
  s.t = laplacian_apply(net, s.y);
  return s;
}

StackedState init_state(const Network& net, std::span<const LocalProblem> problems,
                        const Eigen::Ref<const Vector>& y0) {
  return init_state(net, problems, y0, Vector::Zero(net.dim()));
}

StackedState step(const StackedState& state, std::span<const LocalProblem> problems,
                  const Network& net, const AlgoParams& params) {
  require_certified(params);
  require_problem_count(net, problems.size());
  const int p = net.p();

  StackedState next;
  next.k = state.k + 1;
  next.y.resize(net.dim());
  // Agent-local phase: each agent reads only its own slots.
  for (int i = 0; i < net.n(); ++i) {
    const auto seg = static_cast<Eigen::Index>(i) * p;
    const Vector linear = state.lambda.segment(seg, p) - params.rho * state.t.segment(seg, p);
    next.y.segment(seg, p) = prox_step(problems[static_cast<std::size_t>(i)], linear,
                                       state.y.segment(seg, p), params.eta,
                                       static_cast<std::size_t>(i));
  }
  // Broadcast y, aggregate, dual step.
  next.t = laplacian_apply(net, next.y);
  next.lambda = state.lambda - params.rho * next.t;
  return next;
}

CompactStepper::CompactStepper(const Network& net, std::vector<LocalProblem> problems,
                               AlgoParams params)
    : n_(net.n()), p_(net.p()), w_(lifted_laplacian(net)), problems_(std::move(problems)),
      params_(params) {
  require_certified(params_);
  require_problem_count(net, problems_.size());
}

StackedState CompactStepper::step(const StackedState& state) const {
  const Vector linear = state.lambda - params_.rho * (w_ * state.y);
  StackedState next;
  next.k = state.k + 1;
  next.y.resize(state.y.size());
  for (int i = 0; i < n_; ++i) {
    const auto seg = static_cast<Eigen::Index>(i) * p_;
    next.y.segment(seg, p_) = prox_step(problems_[static_cast<std::size_t>(i)],
                                        linear.segment(seg, p_), state.y.segment(seg, p_),
                                        params_.eta, static_cast<std::size_t>(i));
  }
  next.t = w_ * next.y;
  next.lambda = state.lambda - params_.rho * next.t;
  return next;
}

StateSummary summarize(const StackedState& state, int n, int p) {
  StateSummary s;
  s.k = state.k;
  s.consensus_residual = consensus_deviation(state.y, n, p).norm();
  s.w_seminorm = std::sqrt(std::max(0.0, state.y.dot(state.t)));
  s.lambda_sum = block_sum(state.lambda, n, p).norm();
  return s;
}

std::vector<StateSummary> run(StackedState& state, std::span<const LocalProblem> problems,
                              const Network& net, const AlgoParams& params, long iters,
                              const StateSink& sink) {
  require_certified(params);
  std::vector<StateSummary> trace;
  trace.reserve(static_cast<std::size_t>(std::max(0L, iters)) + 1);
  trace.push_back(summarize(state, net.n(), net.p()));
  if (sink) sink(state);
  for (long it = 0; it < iters; ++it) {
    state = step(state, problems, net, params);
    trace.push_back(summarize(state, net.n(), net.p()));
    if (sink) sink(state);
  }
  return trace;
}

}  // namespace lagranet
