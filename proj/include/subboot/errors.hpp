#pragma once

#include <stdexcept>
#include <string>

namespace subboot {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on sizes, shapes or hyperparameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An estimator could not be evaluated on one particular (weighted) sample.
/// Engines skip and count these; everything else propagates.
class EstimationError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class RankDeficiencyError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class DomainError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

/// Fourth central moment too close to the squared variance for the
/// tuner's tilde constants.
class DegenerateKurtosisError : public Error {
 public:
  using Error::Error;
};

/// Too many replicates were skipped for the estimate to be trusted.
class DataQualityError : public Error {
 public:
  using Error::Error;
};

class InfeasibleBudgetError : public Error {
 public:
  InfeasibleBudgetError(const std::string& what, double minimal_budget)
      : Error(what), minimal_budget_(minimal_budget) {}

  /// Smallest budget for which a solution would exist.
  double minimal_budget() const noexcept { return minimal_budget_; }

 private:
  double minimal_budget_;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace subboot
