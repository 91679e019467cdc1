#include "mumanifold/quadrature.hpp"

#include <string>

#include "mumanifold/errors.hpp"

namespace mumanifold {

Quadrature parse_quadrature(std::string_view name) {
  if (name == "trapezoid") return Quadrature::trapezoid;
  if (name == "simpson") return Quadrature::simpson;
  throw PreconditionError("unknown quadrature '" + std::string(name) + "'");
}

std::string_view to_string(Quadrature rule) {
  return rule == Quadrature::simpson ? "simpson" : "trapezoid";
}

void cumulative_integral(std::span<const double> f, double h, Quadrature rule,
                         std::span<double> out) {
  const std::size_t n = f.size();
  if (n == 0) return;
  out[0] = 0.0;
  if (rule == Quadrature::trapezoid || n < 3) {
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      acc += 0.5 * h * (f[i - 1] + f[i]);
      out[i] = acc;
    }
    return;
  }
  // Even prefixes: composite Simpson. Odd prefixes: Simpson up to i - 3 and
  // the 3/8 rule on the last three intervals.
  out[1] = h * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0;
  double even = 0.0;
  for (std::size_t i = 2; i < n; ++i) {
    if (i % 2 == 0) {
      even += h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
      out[i] = even;
    } else {
      const double simpson_part = out[i - 3];
      out[i] = simpson_part + 3.0 * h / 8.0 * (f[i - 3] + 3.0 * f[i - 2] + 3.0 * f[i - 1] + f[i]);
    }
  }
}

double integral(std::span<const double> f, double h, Quadrature rule) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  if (rule == Quadrature::trapezoid || n < 3) {
    double acc = 0.5 * (f[0] + f[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) acc += f[i];
    return h * acc;
  }
  const std::size_t last = n - 1;
  const std::size_t simpson_end = (last % 2 == 0) ? last : last - 3;
  double acc = 0.0;
  for (std::size_t i = 2; i <= simpson_end; i += 2) {
    acc += f[i - 2] + 4.0 * f[i - 1] + f[i];
  }
  acc *= h / 3.0;
  if (simpson_end != last) {
    const std::size_t i = last;
    acc += 3.0 * h / 8.0 * (f[i - 3] + 3.0 * f[i - 2] + 3.0 * f[i - 1] + f[i]);
  }
  return acc;
}

}  // namespace mumanifold
