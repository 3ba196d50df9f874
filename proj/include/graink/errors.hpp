#pragma once

#include <stdexcept>
#include <string>

namespace graink {

// Caller violated a precondition (shape mismatch, bad parameter).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// dt is not a positive integer multiple of the area spacing.
class StepSizeError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Gamma_D <= 0 on a non-empty state; the coupling weight is undefined.
class DegenerateWeightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonContractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Datum is negative, violates the boundary condition or cannot be projected.
class AdmissibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace graink
