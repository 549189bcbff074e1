#pragma once

#include "lagranet/consensus.hpp"
#include "lagranet/graph.hpp"
#include "lagranet/localprox.hpp"

#include <functional>
#include <vector>

namespace lagranet {

/// Economic dispatch over a network: minimize sum_i f_i(x_i) subject to
/// sum_i x_i = sum_i d_i and per-bus boxes.
class DispatchProblem {
 public:
  /// `demand` is stacked (n*p). Checks sum_i d_i against `declared_total`
  /// (DemandMismatch) and sum lo <= total <= sum hi (InfeasibleDemand).
  DispatchProblem(Network net, std::vector<GeneratorCost> costs, Vector demand,
                  Vector declared_total);
  /// Total taken from the demand vector itself.
  DispatchProblem(Network net, std::vector<GeneratorCost> costs, Vector demand);

  const Network& net() const noexcept { return net_; }
  int n() const noexcept { return net_.n(); }
  int p() const noexcept { return net_.p(); }
  const std::vector<GeneratorCost>& costs() const noexcept { return costs_; }
  const Vector& demand() const noexcept { return demand_; }
  const Vector& total_demand() const noexcept { return total_; }
  /// True when sum lo < total < sum hi in every coordinate.
  bool slater_strict() const noexcept { return slater_strict_; }

 private:
  void check();

  Network net_;
  std::vector<GeneratorCost> costs_;
  Vector demand_;
  Vector total_;
  bool slater_strict_ = false;
};

/// Splits `total` equally over generator buses, zero elsewhere.
Vector equal_generator_split(const std::vector<GeneratorCost>& costs, const Vector& total);

struct DispatchState {
  long k = 0;
  Vector x;
  Vector y;
  Vector lambda;
  Vector t;
};

/// g_i(delta) = f_i^*(-delta) + <delta, d_i>, evaluated in closed form.
double dual_local_objective(const GeneratorCost& cost, const Eigen::Ref<const Vector>& d_i,
                            const Eigen::Ref<const Vector>& delta);

/// sum_i g_i(y_i) over stacked y.
double dual_objective(const DispatchProblem& prob, const Eigen::Ref<const Vector>& y);

/// x_i(delta): the minimizer of f_i(x) + <delta, x> over the box.
Vector best_response(const GeneratorCost& cost, const Eigen::Ref<const Vector>& delta);

/// k = 0 state. x starts at the box projection of 0; throws LambdaSumNonzero.
DispatchState init_dispatch(const DispatchProblem& prob, const Eigen::Ref<const Vector>& y0,
                            const Eigen::Ref<const Vector>& lambda0);
DispatchState init_dispatch(const DispatchProblem& prob);

/// One synchronous round of the dual-consensus dispatch iteration.
DispatchState dispatch_step(const DispatchState& state, const DispatchProblem& prob,
                            const AlgoParams& params);

/// || sum_i (x_i - d_i) ||.
double feasibility_residual(const DispatchState& state, const DispatchProblem& prob);

/// G(ybar) + f(x) where ybar is the network-average dual iterate.
double duality_gap(const DispatchState& state, const DispatchProblem& prob);

using DispatchSink = std::function<void(const DispatchState&)>;

/// Runs iters rounds, calling sink on the initial state and each update.
void run_dispatch(DispatchState& state, const DispatchProblem& prob, const AlgoParams& params,
                  long iters, const DispatchSink& sink = {});

}  // namespace lagranet
