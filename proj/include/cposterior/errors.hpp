#pragma once

#include <stdexcept>
#include <string>

namespace cposterior {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mismatched vector/matrix dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Misuse of an API, e.g. summarizing an empty trace.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Floating-point failure: underflowed normalizers, failed factorizations.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cposterior
