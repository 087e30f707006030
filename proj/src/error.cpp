#include "mre/error.hpp"

namespace mre {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::AssemblyFailure: return "assembly-failure";
    case ErrorKind::DegenerateTargets: return "degenerate-targets";
    case ErrorKind::UnstableIntegration: return "unstable-integration";
    case ErrorKind::InvalidSensor: return "invalid-sensor";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::OptimizationFailure: return "optimization-failure";
    case ErrorKind::TrainingDiverged: return "training-diverged";
    case ErrorKind::SelectionFailure: return "selection-failure";
    case ErrorKind::IncompatibleSurrogate: return "incompatible-surrogate";
    case ErrorKind::UnstablePrediction: return "unstable-prediction";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::ConfigError: return "config-error";
    case ErrorKind::PipelineOrder: return "pipeline-order";
    case ErrorKind::IncompatibleArtifacts: return "incompatible-artifacts";
  }
  return "unknown";
}

}  // namespace mre
