#pragma once

#include "lagranet/graph.hpp"
#include "lagranet/localprox.hpp"

#include <functional>
#include <span>
#include <vector>

namespace lagranet {

/// Penalty rho and proximal weight eta. `certified` is set only by
/// validate_params, after checking eta*I - rho*W is positive definite.
struct AlgoParams {
  double rho = 1.0;
  double eta = 1.0;
  bool certified = false;
  /// rho * lambda_max(L) at certification time.
  double bound = 0.0;
};

/// Relative margin required between eta and rho*lambda_max.
inline constexpr double kStepSizeMargin = 1e-9;
/// Default factor used by suggest_eta.
inline constexpr double kAutoEtaFactor = 1.05;

/// Certifies eta > rho*lambda_max(L). Throws StepSizeViolation otherwise,
/// NonPositiveRho / NonPositiveEta on bad signs.
AlgoParams validate_params(const SpectralData& spec, double rho, double eta);

/// rho*lambda_max*1.05, or rho itself on an edgeless (single node) graph.
double suggest_eta(const SpectralData& spec, double rho, double factor = kAutoEtaFactor);

/// z_k = (y_k, lambda_k) plus the cached neighbor aggregate t_k = W y_k.
struct StackedState {
  long k = 0;
  Vector y;
  Vector lambda;
  Vector t;
};

/// Tolerance for sum_i lambda_i = 0, scaled by 1 + max_i ||lambda_i||.
inline constexpr double kLambdaSumTol = 1e-10;

/// || sum_i lambda_i || / (1 + max_i ||lambda_i||).
double lambda_sum_violation(const Eigen::Ref<const Vector>& lambda, int n, int p);

/// Builds the k = 0 state, running the initialization neighbor exchange.
/// Throws LambdaSumNonzero or InfeasibleInitialPoint.
StackedState init_state(const Network& net, std::span<const LocalProblem> problems,
                        const Eigen::Ref<const Vector>& y0, const Eigen::Ref<const Vector>& lambda0);
/// Same with lambda0 = 0.
StackedState init_state(const Network& net, std::span<const LocalProblem> problems,
                        const Eigen::Ref<const Vector>& y0);

/// One synchronous round: every agent solves its local prox problem, then
/// broadcasts y, recomputes t from neighbors and takes the dual step
/// lambda <- lambda - rho*t.
StackedState step(const StackedState& state, std::span<const LocalProblem> problems,
                  const Network& net, const AlgoParams& params);

/// The same iteration written against the dense lifted Laplacian. Used to
/// cross-check the neighbor-exchange implementation.
class CompactStepper {
 public:
  CompactStepper(const Network& net, std::vector<LocalProblem> problems, AlgoParams params);

  StackedState step(const StackedState& state) const;

 private:
  int n_;
  int p_;
  Matrix w_;
  std::vector<LocalProblem> problems_;
  AlgoParams params_;
};

struct StateSummary {
  long k = 0;
  double consensus_residual = 0.0;
  double w_seminorm = 0.0;
  double lambda_sum = 0.0;
};

StateSummary summarize(const StackedState& state, int n, int p);

using StateSink = std::function<void(const StackedState&)>;

/// Applies `step` iters times. The sink (if any) sees the initial state and
/// every subsequent one; the returned trace has iters + 1 entries.
std::vector<StateSummary> run(StackedState& state, std::span<const LocalProblem> problems,
                              const Network& net, const AlgoParams& params, long iters,
                              const StateSink& sink = {});

void require_certified(const AlgoParams& params);
void require_problem_count(const Network& net, std::size_t count);

}  // namespace lagranet
