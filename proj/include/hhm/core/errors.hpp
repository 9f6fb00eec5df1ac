#pragma once

#include <stdexcept>
#include <string>

namespace hhm {

// Base for every failure raised by the library. The CLI maps the two
// families below onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: shapes, invalid models, unsupported scope.
class InputError : public Error {
 public:
  using Error::Error;
};

class InputShapeError : public InputError {
 public:
  using InputError::InputError;
};

class InsufficientDataError : public InputError {
 public:
  using InputError::InputError;
};

class ModelInvalidError : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

class UnsupportedScopeError : public InputError {
 public:
  using InputError::InputError;
};

// Numerical trouble: non-convergence, instability, singular systems.
class NumericError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public NumericError {
 public:
  using NumericError::NumericError;
};

class QuadratureError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularKernelError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

class StepSizeError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace hhm
