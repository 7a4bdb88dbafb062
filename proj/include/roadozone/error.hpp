#pragma once

#include <stdexcept>
#include <string>

namespace roadozone {

/// Raised when a configuration or input violates a model invariant.
/// `field` carries the dotted path of the offending entry when one exists.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Domain violation in a model evaluation (density out of range, CFL breach, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure inside an integrator or linear solver.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure of one pipeline stage; the message is prefixed with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, long step, const std::string& message)
      : std::runtime_error("[" + stage + (step >= 0 ? " step " + std::to_string(step) : std::string()) + "] " +
                           message),
        stage_(std::move(stage)),
        step_(step) {}

  const std::string& stage() const noexcept { return stage_; }
  long step() const noexcept { return step_; }

 private:
  std::string stage_;
  long step_;
};

}  // namespace roadozone
