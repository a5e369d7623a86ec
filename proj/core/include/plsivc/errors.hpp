#pragma once

#include <stdexcept>
#include <string>

namespace plsivc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value (a <= 2, negative lambda, empty grid, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be used: schema problems, non-finite values,
/// too few rows.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a result (singular system).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace plsivc
