#pragma once

#include <stdexcept>
#include <string>

namespace taskgeo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (grid specs, option values, files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector/tensor dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (alpha <= 0, NaN, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, long iterations)
      : Error(what + " (residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        context_(what),
        residual_(residual),
        iterations_(iterations) {}

  /// Message without the residual suffix, for rewrapping with more context.
  const std::string& context() const noexcept { return context_; }

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  std::string context_;
  double residual_;
  long iterations_;
};

/// Metric tensor too ill-conditioned for geodesic computations.
class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskgeo
