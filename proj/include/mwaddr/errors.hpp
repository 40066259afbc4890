#pragma once

#include <stdexcept>
#include <string>

namespace mwaddr {

// Two top-level families, matching the CLI exit-code contract:
// ConfigError (bad inputs, files, scripts) -> exit 2,
// ModelError (physics/numerics failures)   -> exit 3.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownLevel : ModelError {
  using ModelError::ModelError;
};

struct PreconditionViolated : ModelError {
  using ModelError::ModelError;
};

struct NoStationaryPoint : ModelError {
  using ModelError::ModelError;
};

struct MultipleStationaryPoints : ModelError {
  using ModelError::ModelError;
};

struct ResonantIntermediateState : ModelError {
  ResonantIntermediateState(const std::string& msg, double transition_angular)
      : ModelError(msg), transition_angular_frequency(transition_angular) {}
  double transition_angular_frequency; // rad/s of the offending transition
};

struct SingularGradient : ModelError {
  using ModelError::ModelError;
};

struct SingularSystem : ModelError {
  SingularSystem(const std::string& msg, double cond)
      : ModelError(msg), condition_number(cond) {}
  double condition_number;
};

struct InfeasibleGradient : ModelError {
  using ModelError::ModelError;
};

// Sequence-language diagnostics carry a 1-based source location.
struct SyntaxError : ConfigError {
  SyntaxError(const std::string& msg, int line, int column = 0)
      : ConfigError("line " + std::to_string(line) +
                    (column > 0 ? ":" + std::to_string(column) : "") + ": " +
                    msg),
        line(line), column(column) {}
  int line;
  int column;
};

struct ValidationError : ConfigError {
  ValidationError(const std::string& msg, int line = 0)
      : ConfigError(line > 0 ? "line " + std::to_string(line) + ": " + msg
                             : msg),
        line(line) {}
  int line;
};

} // namespace mwaddr
