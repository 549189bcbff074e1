#pragma once

#include "lagranet/consensus.hpp"
#include "lagranet/dispatch.hpp"
#include "lagranet/graph.hpp"
#include "lagranet/oracle.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lagranet {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// ||u||_Omega with Omega = eta*I - rho*W. Throws UncertifiedParams.
double omega_norm(const SpectralData& spec, const AlgoParams& params, const Eigen::Ref<const Vector>& u);
double omega_norm_sq(const SpectralData& spec, const AlgoParams& params, const Eigen::Ref<const Vector>& u);

/// Norm of (dy, dl) in blockdiag(Omega, W^dagger / rho).
double omhat_norm(const SpectralData& spec, const AlgoParams& params,
                  const Eigen::Ref<const Vector>& dy, const Eigen::Ref<const Vector>& dl);

enum class TraceKind { Consensus, Dispatch };

enum class EnvelopeFlag : std::uint8_t { Skipped, Pass, Fail };

inline constexpr std::size_t kEnvelopeCount = 6;

/// a: Lyapunov nonincrease        b: ||dz||_Omegahat nonincrease
/// c: ||dz_{k+1}|| <= D/sqrt(k)   d: objective sandwich and ||y||_W rate (consensus)
/// e: cost sandwich (dispatch)    f: feasibility envelope (dispatch)
inline constexpr std::array<const char*, kEnvelopeCount> kEnvelopeNames = {
    "lyapunov_nonincrease", "delta_z_nonincrease", "delta_z_rate",
    "objective_sandwich",   "cost_sandwich",       "feasibility_rate"};

/// One row of a run trace; row k describes z_k.
struct IterationMetrics {
  long k = 0;
  double objective_error = kNaN;  // G(y_k) - G* (consensus) or f(x_k) - f* (dispatch)
  double feasibility = kNaN;      // ||sum_i x_i - d_i|| (dispatch)
  double consensus_residual = 0.0;
  double w_seminorm = 0.0;        // ||y_k||_W
  double delta_z_norm = kNaN;     // ||z_{k-1} - z_k||_Omegahat, undefined at k = 0
  double lyapunov = kNaN;         // ||y_k - y*||^2_Omega + ||lambda_k - lambda*||^2_{W^dagger}/rho
  double duality_gap = kNaN;      // dispatch only
  std::array<EnvelopeFlag, kEnvelopeCount> envelopes{};
};

/// Trace-independent quantities the rate envelopes are measured against.
struct EnvelopeConstants {
  TraceKind kind = TraceKind::Consensus;
  double rho = 1.0;
  /// ||z_0 - z*||_Omegahat; absent without a dual certificate.
  std::optional<double> initial_distance;
  /// ||lambda*|| (the optimal gradient selection), consensus only.
  double gradient_norm = kNaN;
  /// ||y*||_Omega, dispatch only.
  double ystar_omega_norm = kNaN;
};

EnvelopeConstants envelope_constants(TraceKind kind, const SpectralData& spec,
                                     const AlgoParams& params, const OracleSolution* oracle,
                                     const Eigen::Ref<const Vector>& y0,
                                     const Eigen::Ref<const Vector>& lambda0);

/// Streams states into IterationMetrics. Keeps its own copies of the
/// problem data; the spectral data must outlive the recorder.
class MetricsRecorder {
 public:
  MetricsRecorder(const SpectralData& spec, const AlgoParams& params,
                  std::vector<LocalProblem> problems, int p,
                  std::optional<OracleSolution> oracle);
  MetricsRecorder(const SpectralData& spec, const AlgoParams& params, DispatchProblem prob,
                  std::optional<OracleSolution> oracle);

  void observe(const StackedState& state);
  void observe(const DispatchState& state);

  const std::vector<IterationMetrics>& records() const noexcept { return records_; }
  std::vector<IterationMetrics> take() { return std::move(records_); }
  TraceKind kind() const noexcept { return kind_; }
  double max_lambda_sum() const noexcept { return max_lambda_sum_; }

 private:
  IterationMetrics common(long k, const Vector& y, const Vector& lambda, const Vector& t);

  const SpectralData* spec_;
  AlgoParams params_;
  TraceKind kind_;
  int n_;
  int p_;
  std::vector<LocalProblem> problems_;
  std::optional<DispatchProblem> dispatch_;
  std::optional<OracleSolution> oracle_;
  std::optional<Vector> prev_y_;
  std::optional<Vector> prev_lambda_;
  double max_lambda_sum_ = 0.0;
  std::vector<IterationMetrics> records_;
};

struct EnvelopeResult {
  std::string name;
  bool evaluated = false;
  std::string skip_reason;
  std::optional<long> first_violation;
  long violations = 0;
  /// max over checked rows of (value - bound) / (1 + |bound|).
  double worst_excess = -std::numeric_limits<double>::infinity();
  std::vector<EnvelopeFlag> flags;
};

struct EnvelopeReport {
  std::array<EnvelopeResult, kEnvelopeCount> envelopes;

  bool all_passed() const;
  std::optional<long> first_violation() const;
};

/// Relative slack allowed on every inequality: value <= bound + tol*(1 + |bound|).
inline constexpr double kEnvelopeTol = 1e-9;

/// Pure function of its inputs. Throws InvalidTrace if rows are not k = 0, 1, 2, ...
EnvelopeReport evaluate_envelopes(std::span<const IterationMetrics> trace,
                                  const EnvelopeConstants& constants);

EnvelopeReport evaluate_envelopes(std::span<const IterationMetrics> trace, TraceKind kind,
                                  const OracleSolution* oracle, const AlgoParams& params,
                                  const SpectralData& spec, const Eigen::Ref<const Vector>& y0,
                                  const Eigen::Ref<const Vector>& lambda0);

/// Copies per-row flags from the report into the trace.
void apply_envelope_flags(std::span<IterationMetrics> trace, const EnvelopeReport& report);

/// Least-squares slope of log(delta_z_norm) against log(k) over rows with
/// k in [k_lo, k_hi] and delta_z_norm > floor. NaN when fewer than two rows qualify.
struct SlopeFit {
  double slope = kNaN;
  long points = 0;
  long k_first = 0;
  long k_last = 0;
};
SlopeFit delta_z_decay_slope(std::span<const IterationMetrics> trace, long k_lo, long k_hi,
                             double floor);

}  // namespace lagranet
