#pragma once

#include <stdexcept>
#include <string>

namespace mumanifold {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called with arguments outside its domain.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A solver configuration cannot deliver the requested accuracy.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A fixed-point iteration hit its cap or produced non-finite values.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double last_ratio)
      : Error(what), iterations_(iterations), last_ratio_(last_ratio) {}

  int iterations() const noexcept { return iterations_; }
  double last_ratio() const noexcept { return last_ratio_; }

 private:
  int iterations_;
  double last_ratio_;
};

/// The adaptive integrator could not advance (step underflow or blow-up).
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}

  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

/// An integrand or iterate became NaN or infinite at (t, xi).
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, double t, double xi) : Error(what), t_(t), xi_(xi) {}

  double t() const noexcept { return t_; }
  double xi() const noexcept { return xi_; }

 private:
  double t_;
  double xi_;
};

}  // namespace mumanifold
