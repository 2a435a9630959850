#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace entryexit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (bad ordering, out-of-domain input).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent system configuration.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line + 1) + ": " + what : what),
        line_(line) {}
  /// Zero-based line of the offending node, or -1 when unknown.
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Outcomes that are legitimate answers about the dynamics rather than
/// misuse: no exit in the domain, the theorem does not cover the case, etc.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ComplexEigenvalues : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Uniqueness requirement broken; candidates lists every root found.
class UniquenessViolation : public DomainError {
 public:
  UniquenessViolation(const std::string& what, std::vector<double> candidates)
      : DomainError(what), candidates_(std::move(candidates)) {}
  const std::vector<double>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<double> candidates_;
};

class NoCollision : public DomainError {
 public:
  using DomainError::DomainError;
};

class NoExitInDomain : public DomainError {
 public:
  using DomainError::DomainError;
};

class NoSwitchInDomain : public DomainError {
 public:
  using DomainError::DomainError;
};

class UncoveredCase : public DomainError {
 public:
  using DomainError::DomainError;
};

class AmbiguousCase : public DomainError {
 public:
  using DomainError::DomainError;
};

/// beta^2 - gamma*alpha <= 0: the transcritical determinant condition fails.
class DeterminantConditionViolated : public DomainError {
 public:
  using DomainError::DomainError;
};

class DegenerateClassification : public DomainError {
 public:
  using DomainError::DomainError;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Adaptive step size fell below the underflow guard.
class StepSizeUnderflow : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace entryexit
