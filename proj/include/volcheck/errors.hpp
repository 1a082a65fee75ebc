#pragma once

#include <stdexcept>
#include <string>

namespace volcheck {

// Contract violations on user input (bad window, bad spec, bad file).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Everything below is raised by a computation on otherwise valid input.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class ModelViolation : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularDesign : public NumericError {
 public:
  SingularDesign(const std::string& what, double condition)
      : NumericError(what + " (condition estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class DegenerateVariance : public NumericError {
 public:
  using NumericError::NumericError;
};

class FitFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

class BootstrapUnstable : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace volcheck
