#include "lagranet/metrics.hpp"

#include "lagranet/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lagranet {

namespace {

int block_dim(const SpectralData& spec, Eigen::Index len) {
  const auto n = spec.eigvals.size();
  if (n == 0 || len % n != 0) {
    throw Error(ErrorCode::DimensionMismatch, "vector length is not a multiple of n");
  }
  return static_cast<int>(len / n);
}

double tol(double bound) { return kEnvelopeTol * (1.0 + std::abs(bound)); }

bool all_finite(std::span<const IterationMetrics> trace, double IterationMetrics::*field,
                std::size_t from) {
  for (std::size_t r = from; r < trace.size(); ++r) {
    if (!std::isfinite(trace[r].*field)) return false;
  }
  return true;
}

// Accumulates one envelope's per-row outcome.
struct Checker {
  EnvelopeResult& out;

  void skip(std::string reason) {
    out.evaluated = false;
    out.skip_reason = std::move(reason);
    std::fill(out.flags.begin(), out.flags.end(), EnvelopeFlag::Skipped);
  }

  void start() {
    out.evaluated = true;
    std::fill(out.flags.begin(), out.flags.end(), EnvelopeFlag::Pass);
  }

  // Records value <= bound (with slack) at row r.
  void upper(std::size_t r, long k, double value, double bound) {
    const double excess = (value - bound) / (1.0 + std::abs(bound));
    out.worst_excess = std::max(out.worst_excess, excess);
    if (!(value <= bound + tol(bound))) fail(r, k);
  }

  void lower(std::size_t r, long k, double value, double bound) {
    const double excess = (bound - value) / (1.0 + std::abs(bound));
    out.worst_excess = std::max(out.worst_excess, excess);
    if (!(value >= bound - tol(bound))) fail(r, k);
  }

  void fail(std::size_t r, long k) {
    if (out.flags[r] != EnvelopeFlag::Fail) {
      out.flags[r] = EnvelopeFlag::Fail;
      ++out.violations;
      if (!out.first_violation) out.first_violation = k;
    }
  }
};

}  // namespace

double omega_norm_sq(const SpectralData& spec, const AlgoParams& params,
                     const Eigen::Ref<const Vector>& u) {
  require_certified(params);
  const int p = block_dim(spec, u.size());
  return params.eta * u.squaredNorm() - params.rho * w_quadform(spec, p, u);
}

double omega_norm(const SpectralData& spec, const AlgoParams& params, const Eigen::Ref<const Vector>& u) {
  return std::sqrt(std::max(0.0, omega_norm_sq(spec, params, u)));
}

double omhat_norm(const SpectralData& spec, const AlgoParams& params,
                  const Eigen::Ref<const Vector>& dy, const Eigen::Ref<const Vector>& dl) {
  const double sq = omega_norm_sq(spec, params, dy) +
                    wdag_quadform(spec, block_dim(spec, dl.size()), dl) / params.rho;
  return std::sqrt(std::max(0.0, sq));
}

EnvelopeConstants envelope_constants(TraceKind kind, const SpectralData& spec,
                                     const AlgoParams& params, const OracleSolution* oracle,
                                     const Eigen::Ref<const Vector>& y0,
                                     const Eigen::Ref<const Vector>& lambda0) {
  EnvelopeConstants c;
  c.kind = kind;
  c.rho = params.rho;
  if (oracle == nullptr || !oracle->lambda_star) return c;
  const Vector& ys = oracle->y_star;
  const Vector& ls = *oracle->lambda_star;
  c.initial_distance = omhat_norm(spec, params, y0 - ys, lambda0 - ls);
  if (kind == TraceKind::Consensus) {
    c.gradient_norm = ls.norm();
  } else {
    c.ystar_omega_norm = omega_norm(spec, params, ys);
  }
  return c;
}

MetricsRecorder::MetricsRecorder(const SpectralData& spec, const AlgoParams& params,
                                 std::vector<LocalProblem> problems, int p,
                                 std::optional<OracleSolution> oracle)
    : spec_(&spec), params_(params), kind_(TraceKind::Consensus), n_(spec.n()), p_(p),
      problems_(std::move(problems)), oracle_(std::move(oracle)) {
  require_certified(params_);
}

MetricsRecorder::MetricsRecorder(const SpectralData& spec, const AlgoParams& params,
                                 DispatchProblem prob, std::optional<OracleSolution> oracle)
    : spec_(&spec), params_(params), kind_(TraceKind::Dispatch), n_(prob.n()), p_(prob.p()),
      dispatch_(std::move(prob)), oracle_(std::move(oracle)) {
  require_certified(params_);
}

IterationMetrics MetricsRecorder::common(long k, const Vector& y, const Vector& lambda,
                                         const Vector& t) {
  IterationMetrics m;
  m.k = k;
  m.consensus_residual = consensus_deviation(y, n_, p_).norm();
  m.w_seminorm = std::sqrt(std::max(0.0, y.dot(t)));
  if (prev_y_) m.delta_z_norm = omhat_norm(*spec_, params_, *prev_y_ - y, *prev_lambda_ - lambda);
  if (oracle_ && oracle_->lambda_star) {
    const double d = omhat_norm(*spec_, params_, y - oracle_->y_star, lambda - *oracle_->lambda_star);
    m.lyapunov = d * d;
  }
  max_lambda_sum_ = std::max(max_lambda_sum_, lambda_sum_violation(lambda, n_, p_));
  prev_y_ = y;
  prev_lambda_ = lambda;
  return m;
}

void MetricsRecorder::observe(const StackedState& state) {
  if (kind_ != TraceKind::Consensus) {
    throw Error(ErrorCode::InvalidTrace, "consensus state passed to a dispatch recorder");
  }
  IterationMetrics m = common(state.k, state.y, state.lambda, state.t);
  if (oracle_ && std::isfinite(oracle_->g_star)) {
    double g = 0.0;
    for (int i = 0; i < n_; ++i) {
      g += problems_[static_cast<std::size_t>(i)].value(
          state.y.segment(static_cast<Eigen::Index>(i) * p_, p_));
    }
    m.objective_error = g - oracle_->g_star;
  }
  records_.push_back(m);
}

void MetricsRecorder::observe(const DispatchState& state) {
  if (kind_ != TraceKind::Dispatch) {
    throw Error(ErrorCode::InvalidTrace, "dispatch state passed to a consensus recorder");
  }
  IterationMetrics m = common(state.k, state.y, state.lambda, state.t);
  m.feasibility = feasibility_residual(state, *dispatch_);
  m.duality_gap = duality_gap(state, *dispatch_);
  if (oracle_ && std::isfinite(oracle_->f_star)) {
    m.objective_error = total_cost(dispatch_->costs(), state.x, p_) - oracle_->f_star;
  }
  records_.push_back(m);
}

bool EnvelopeReport::all_passed() const {
  return std::all_of(envelopes.begin(), envelopes.end(),
                     [](const EnvelopeResult& e) { return e.violations == 0; });
}

std::optional<long> EnvelopeReport::first_violation() const {
  std::optional<long> first;
  for (const auto& e : envelopes) {
    if (e.first_violation && (!first || *e.first_violation < *first)) first = e.first_violation;
  }
  return first;
}

EnvelopeReport evaluate_envelopes(std::span<const IterationMetrics> trace,
                                  const EnvelopeConstants& constants) {
  for (std::size_t r = 0; r < trace.size(); ++r) {
    if (trace[r].k != static_cast<long>(r)) {
      throw Error(ErrorCode::InvalidTrace, "row " + std::to_string(r) + " has k=" +
                                               std::to_string(trace[r].k));
    }
  }

  EnvelopeReport report;
  for (std::size_t e = 0; e < kEnvelopeCount; ++e) {
    report.envelopes[e].name = kEnvelopeNames[e];
    report.envelopes[e].flags.assign(trace.size(), EnvelopeFlag::Skipped);
  }
  const std::size_t rows = trace.size();
  const bool has_d = constants.initial_distance.has_value();
  const double D = has_d ? *constants.initial_distance : kNaN;
  const bool consensus = constants.kind == TraceKind::Consensus;
  auto rate = [&](long k) { return D / std::sqrt(static_cast<double>(k)); };

  // (a) Lyapunov function is nonincreasing.
  {
    Checker c{report.envelopes[0]};
    if (!all_finite(trace, &IterationMetrics::lyapunov, 0)) {
      c.skip("no dual certificate");
    } else {
      c.start();
      for (std::size_t r = 1; r < rows; ++r) {
        c.upper(r, trace[r].k, trace[r].lyapunov, trace[r - 1].lyapunov);
      }
    }
  }
  // (b) successive differences shrink in the Omegahat norm, for k >= 1.
  {
    Checker c{report.envelopes[1]};
    if (!all_finite(trace, &IterationMetrics::delta_z_norm, 1)) {
      c.skip("difference norms missing");
    } else {
      c.start();
      for (std::size_t r = 2; r < rows; ++r) {
        c.upper(r, trace[r].k, trace[r].delta_z_norm, trace[r - 1].delta_z_norm);
      }
    }
  }
  // (c) ||dz_{k+1}|| <= D / sqrt(k).
  {
    Checker c{report.envelopes[2]};
    if (!has_d) {
      c.skip("no dual certificate");
    } else if (!all_finite(trace, &IterationMetrics::delta_z_norm, 1)) {
      c.skip("difference norms missing");
    } else {
      c.start();
      for (std::size_t r = 2; r < rows; ++r) {
        c.upper(r, trace[r].k, trace[r].delta_z_norm, rate(trace[r].k - 1));
      }
    }
  }
  // (d) objective sandwich and consensus seminorm rate on the consensus problem.
  {
    Checker c{report.envelopes[3]};
    if (!consensus) {
      c.skip("consensus-only envelope");
    } else if (!has_d || !std::isfinite(constants.gradient_norm)) {
      c.skip("no dual certificate");
    } else if (!all_finite(trace, &IterationMetrics::objective_error, 0)) {
      c.skip("objective error unavailable");
    } else {
      c.start();
      const double g = constants.gradient_norm;
      for (std::size_t r = 2; r < rows; ++r) {
        const long k = trace[r].k - 1;
        const double sk = std::sqrt(static_cast<double>(k));
        c.upper(r, trace[r].k, trace[r].objective_error, (0.5 * D * D + g * D) / sk);
        c.lower(r, trace[r].k, trace[r].objective_error, -g * D / sk);
        c.upper(r, trace[r].k, trace[r].w_seminorm, rate(k));
      }
    }
  }
  // (e) dispatch cost sandwich.
  {
    Checker c{report.envelopes[4]};
    if (consensus) {
      c.skip("dispatch-only envelope");
    } else if (!has_d || !std::isfinite(constants.ystar_omega_norm)) {
      c.skip("no dual certificate");
    } else if (!all_finite(trace, &IterationMetrics::objective_error, 0)) {
      c.skip("objective error unavailable");
    } else {
      c.start();
      const double ys = constants.ystar_omega_norm;
      for (std::size_t r = 2; r < rows; ++r) {
        const double sk = std::sqrt(static_cast<double>(trace[r].k - 1));
        c.upper(r, trace[r].k, trace[r].objective_error, (0.5 * D * D + ys * D) / sk);
        c.lower(r, trace[r].k, trace[r].objective_error, -ys * D / sk);
      }
    }
  }
  // (f) dispatch feasibility residual <= D / sqrt(k).
  {
    Checker c{report.envelopes[5]};
    if (consensus) {
      c.skip("dispatch-only envelope");
    } else if (!has_d) {
      c.skip("no dual certificate");
    } else if (!all_finite(trace, &IterationMetrics::feasibility, 0)) {
      c.skip("feasibility unavailable");
    } else {
      c.start();
      for (std::size_t r = 2; r < rows; ++r) {
        c.upper(r, trace[r].k, trace[r].feasibility, rate(trace[r].k - 1));
      }
    }
  }
  return report;
}

EnvelopeReport evaluate_envelopes(std::span<const IterationMetrics> trace, TraceKind kind,
                                  const OracleSolution* oracle, const AlgoParams& params,
                                  const SpectralData& spec, const Eigen::Ref<const Vector>& y0,
                                  const Eigen::Ref<const Vector>& lambda0) {
  return evaluate_envelopes(trace, envelope_constants(kind, spec, params, oracle, y0, lambda0));
}

void apply_envelope_flags(std::span<IterationMetrics> trace, const EnvelopeReport& report) {
  for (std::size_t e = 0; e < kEnvelopeCount; ++e) {
    const auto& flags = report.envelopes[e].flags;
    if (flags.size() != trace.size()) {
      throw Error(ErrorCode::InvalidTrace, "report does not match trace length");
    }
    for (std::size_t r = 0; r < trace.size(); ++r) trace[r].envelopes[e] = flags[r];
  }
}

SlopeFit delta_z_decay_slope(std::span<const IterationMetrics> trace, long k_lo, long k_hi,
                             double floor) {
  SlopeFit fit;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& m : trace) {
    if (m.k < k_lo) continue;
    if (m.k > k_hi) break;
    // Stop at the round-off floor; beyond it the differences are noise.
    if (!(m.delta_z_norm > floor)) break;
    const double x = std::log(static_cast<double>(m.k));
    const double y = std::log(m.delta_z_norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    if (fit.points == 0) fit.k_first = m.k;
    fit.k_last = m.k;
    ++fit.points;
  }
  if (fit.points >= 2) {
    const double np = static_cast<double>(fit.points);
    const double denom = np * sxx - sx * sx;
    if (denom > 0.0) fit.slope = (np * sxy - sx * sy) / denom;
  }
  return fit;
}

}  // namespace lagranet
