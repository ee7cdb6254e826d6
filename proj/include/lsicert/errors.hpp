#pragma once

#include <stdexcept>
#include <string>

namespace lsicert {

/// Malformed model input: bad JSON or wrong array shapes.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation needs an LSI certificate that does not exist.
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact mixture tracking would exceed the configured component cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lsicert
