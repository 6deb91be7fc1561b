#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace drfuse {

// Broad failure classes; the CLI maps each to its own exit code.
enum class ErrorClass { io, validation, solver };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorClass::validation, what) {}
};

enum class SolverFailure { no_overlap, domain_violation, max_iterations, non_convergence, singular };

const char* to_string(SolverFailure f) noexcept;

class SolverError : public Error {
 public:
  SolverError(SolverFailure kind, const std::string& what, std::optional<int> arm = std::nullopt)
      : Error(ErrorClass::solver, arm ? "arm " + std::to_string(*arm) + ": " + what : what),
        kind_(kind),
        arm_(arm) {}

  SolverFailure kind() const noexcept { return kind_; }
  std::optional<int> arm() const noexcept { return arm_; }

 private:
  SolverFailure kind_;
  std::optional<int> arm_;
};

}  // namespace drfuse
