#pragma once

#include <stdexcept>
#include <string>

namespace spectra1d {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad descriptor strings, invalid tolerances, non-bracketing
/// intervals, non-finite integrand values.
struct InputError : Error {
  using Error::Error;
};

/// Mathematically out of domain: energy outside a band interior, hypothesis
/// of a checked inequality violated.
struct DomainError : Error {
  using Error::Error;
};

/// Result cannot be resolved at the requested accuracy (e.g. Floquet
/// multipliers numerically on the unit circle).
struct PrecisionError : Error {
  using Error::Error;
};

/// Iteration budget exhausted before reaching the tolerance.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double last_x)
      : Error(what), last_reached(last_x) {}
  explicit ConvergenceError(const std::string& what) : Error(what) {}
  double last_reached = 0.0;
};

/// A configured resource cap (e.g. maximum truncation length) was exceeded.
struct ResourceError : Error {
  using Error::Error;
};

}  // namespace spectra1d
