#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ibc {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularDiscretizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ProbeSpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when |psi|^2 at the evaluation point is below the node floor.
/// Trajectory drivers turn this into a NodeAbort event.
struct NodeProximityError : std::runtime_error {
  explicit NodeProximityError(const std::string& what, double density = 0.0)
      : std::runtime_error(what), density(density) {}
  double density;
};

struct UndefinedVelocityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PropagationError : std::runtime_error {
  PropagationError(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

struct HorizonError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct MismatchedRecordError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Carries every violation found while validating a configuration.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(std::vector<std::string> violations)
      : std::invalid_argument(join(violations)), violations(std::move(violations)) {}
  std::vector<std::string> violations;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
};

}  // namespace ibc
