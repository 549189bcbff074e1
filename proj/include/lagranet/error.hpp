#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lagranet {

enum class ErrorCode {
  DisconnectedGraph,
  NonPositiveWeight,
  SelfLoop,
  DuplicateEdge,
  IndexOutOfRange,
  DimensionMismatch,
  InvalidProblem,
  NonPositiveEta,
  NonPositiveRho,
  CustomSolverFailure,
  StepSizeViolation,
  UncertifiedParams,
  LambdaSumNonzero,
  InfeasibleInitialPoint,
  EmptyFeasibleSet,
  UnboundedBelow,
  InfeasibleDemand,
  DemandMismatch,
  MissingCoefficientFile,
  InvalidScenario,
  InvalidTrace,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported through this type; the code names the
// failing contract and what() carries the details.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class StepSizeViolation : public Error {
 public:
  StepSizeViolation(double eta, double bound);

  double eta() const noexcept { return eta_; }
  // rho * lambda_max(L)
  double bound() const noexcept { return bound_; }

 private:
  double eta_;
  double bound_;
};

class CustomSolverFailure : public Error {
 public:
  CustomSolverFailure(std::size_t agent, const std::string& reason);

  std::size_t agent() const noexcept { return agent_; }

 private:
  std::size_t agent_;
};

}  // namespace lagranet
