#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace otrf {

// Process exit codes used by the CLI and run_experiment/run_sweep.
enum class ExitCode : int {
  kSuccess = 0,
  kGenericError = 1,
  kConfigError = 2,
  kNumericalAbort = 3,
  kPartialSweepFailure = 4,
  kVerificationFailure = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or invalid arguments to a constructor/operation.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int line = -1, int column = -1);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Dimension mismatches and other contract violations on latent vectors.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Unknown dataset, empty registry, singular covariance.
class FieldError : public Error {
 public:
  using Error::Error;
};

// A NaN/Inf appeared in a state or velocity. Carries where it happened.
class NumericalAbort : public Error {
 public:
  NumericalAbort(const std::string& what, double t, std::ptrdiff_t step);

  double time() const { return time_; }
  std::ptrdiff_t step() const { return step_; }

 private:
  double time_;
  std::ptrdiff_t step_;
};

}  // namespace otrf
