#pragma once

#include <stdexcept>
#include <string>

namespace specseg {

/// Bad argument: shape mismatch, out-of-range index, invalid value.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration that cannot be realized (grid too small, indivisible size).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Both operands of a normalized similarity are identically zero (0/0).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A loss or gradient became non-finite during optimization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal contract, e.g. a cache that does not match its parameters.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed file or stream contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace specseg
