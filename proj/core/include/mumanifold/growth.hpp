#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mumanifold {

/// A growth rate mu: [0, inf) -> [1, inf), increasing and unbounded, together
/// with its derivative in closed form. Immutable after construction.
class GrowthRate {
 public:
  using Function = std::function<double(double)>;

  GrowthRate(std::string label, Function eval, Function deriv);

  double operator()(double t) const { return eval_(t); }
  double derivative(double t) const { return deriv_(t); }
  double log_value(double t) const;

  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
  Function eval_;
  Function deriv_;
};

enum class GrowthKind { exponential, polynomial, logarithmic, custom };

/// Builds one of the built-in rates:
///   exponential  mu(t) = exp(c t), params = {c}, c > 0 (default c = 1)
///   polynomial   mu(t) = t + 1
///   logarithmic  mu(t) = log(e + t)
/// Custom rates are built with the GrowthRate constructor directly.
/// Throws PreconditionError when the rate fails mu(0) >= 1 or monotonicity on
/// the default validation grid.
GrowthRate make_growth(GrowthKind kind, std::span<const double> params = {});

/// Parses "exp", "exp:c=<value>", "poly" or "log".
GrowthRate parse_growth(std::string_view spec);

/// [0, 100] with 1001 points.
std::vector<double> default_validation_grid();

struct GrowthValidation {
  bool at_least_one = true;
  bool monotone = true;
  bool positive_derivative = true;
  bool derivative_consistent = true;
  bool divergent = true;
  double max_derivative_rel_error = 0.0;
  double first_violation_time = -1.0;

  bool passed() const {
    return at_least_one && monotone && positive_derivative && derivative_consistent && divergent;
  }
};

/// Checks the growth-rate hypotheses on a nonempty increasing grid. Failures
/// are reported in the returned flags, never thrown.
GrowthValidation validate_growth(const GrowthRate& g, std::span<const double> grid);

}  // namespace mumanifold
