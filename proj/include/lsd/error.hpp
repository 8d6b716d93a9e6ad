#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lsd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid sizes, parameters or option combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A state or argument outside the model's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity met where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Step size too large for a scheme whose update has a singular denominator.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Bad input to a regression or summary routine.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failure to invert a monotone map; carries the last bracket tried.
class InversionError : public Error {
 public:
  InversionError(const std::string& what, double lo, double hi)
      : Error(what), lo_(lo), hi_(hi) {}

  double bracket_lo() const noexcept { return lo_; }
  double bracket_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// A step error re-raised by the path engine with the failing step index.
class SimulationError : public Error {
 public:
  SimulationError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace lsd
