#pragma once

#include <span>
#include <string_view>

namespace mumanifold {

enum class Quadrature { trapezoid, simpson };

Quadrature parse_quadrature(std::string_view name);
std::string_view to_string(Quadrature rule);

/// Running integral out[i] = int_{x_0}^{x_i} of samples on a uniform grid of
/// spacing h. out[0] = 0. For Simpson, odd prefixes close with the 3/8 rule
/// and the first interval uses a three-point quadratic fit.
void cumulative_integral(std::span<const double> values, double h, Quadrature rule,
                         std::span<double> out);

/// Integral over the whole sample range.
double integral(std::span<const double> values, double h, Quadrature rule);

}  // namespace mumanifold
