#pragma once

#include <stdexcept>
#include <string>

namespace ccboot {

// Caller broke a documented precondition (dimension mismatch, bad level, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for numerical failures while fitting the logistic model.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coefficients diverged: the outcome classes are (quasi-)separated.
class SeparationError : public FitError {
 public:
  using FitError::FitError;
};

// Weighted information matrix is not invertible (collinear or constant columns).
class SingularityError : public FitError {
 public:
  using FitError::FitError;
};

// A participant id referenced by a sample is missing from the cohort.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A simulation model would produce an event probability outside [0, 1].
class ModelValidityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too many failed replicates or simulations to produce a summary.
class AggregationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed user input: CSV, config files, command-line values.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccboot
