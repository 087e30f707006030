#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mre {

enum class ErrorKind {
  InvalidInput,
  AssemblyFailure,
  DegenerateTargets,
  UnstableIntegration,
  InvalidSensor,
  NumericalFailure,
  OptimizationFailure,
  TrainingDiverged,
  SelectionFailure,
  IncompatibleSurrogate,
  UnstablePrediction,
  UndefinedMetric,
  ConfigError,
  PipelineOrder,
  IncompatibleArtifacts,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace mre
