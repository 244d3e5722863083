#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace suspopt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or malformed numeric input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (bad range, too few samples, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A spring law cannot carry the requested static load.
class EquilibriumError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Integration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what), time_(time) {}

  /// Simulation time of the first non-finite sample.
  double time() const noexcept { return time_; }

 private:
  double time_;
};

namespace detail {

inline void require_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw InputError(std::string(name) + " must be finite");
  }
}

}  // namespace detail
}  // namespace suspopt
