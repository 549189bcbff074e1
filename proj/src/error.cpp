#include "lagranet/error.hpp"

#include <sstream>

namespace lagranet {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::NonPositiveEta: return "NonPositiveEta";
    case ErrorCode::NonPositiveRho: return "NonPositiveRho";
    case ErrorCode::CustomSolverFailure: return "CustomSolverFailure";
    case ErrorCode::StepSizeViolation: return "StepSizeViolation";
    case ErrorCode::UncertifiedParams: return "UncertifiedParams";
    case ErrorCode::LambdaSumNonzero: return "LambdaSumNonzero";
    case ErrorCode::InfeasibleInitialPoint: return "InfeasibleInitialPoint";
    case ErrorCode::EmptyFeasibleSet: return "EmptyFeasibleSet";
    case ErrorCode::UnboundedBelow: return "UnboundedBelow";
    case ErrorCode::InfeasibleDemand: return "InfeasibleDemand";
    case ErrorCode::DemandMismatch: return "DemandMismatch";
    case ErrorCode::MissingCoefficientFile: return "MissingCoefficientFile";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InvalidTrace: return "InvalidTrace";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string tagged(ErrorCode code, const std::string& message) {
  std::string out(to_string(code));
  out += ": ";
  out += message;
  return out;
}

std::string step_size_message(double eta, double bound) {
  std::ostringstream os;
  os.precision(17);
  os << "eta=" << eta << " must exceed rho*lambda_max=" << bound;
  return os.str();
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(tagged(code, message)), code_(code) {}

StepSizeViolation::StepSizeViolation(double eta, double bound)
    : Error(ErrorCode::StepSizeViolation, step_size_message(eta, bound)),
      eta_(eta),
      bound_(bound) {}

CustomSolverFailure::CustomSolverFailure(std::size_t agent, const std::string& reason)
    : Error(ErrorCode::CustomSolverFailure,
            "agent " + std::to_string(agent) + ": " + reason),
      agent_(agent) {}

}  // namespace lagranet
