#include "mumanifold/growth.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <utility>

#include "mumanifold/errors.hpp"

namespace mumanifold {

GrowthRate::GrowthRate(std::string label, Function eval, Function deriv)
    : label_(std::move(label)), eval_(std::move(eval)), deriv_(std::move(deriv)) {
  if (!eval_ || !deriv_) {
    throw PreconditionError("growth rate requires both mu and mu'");
  }
}

double GrowthRate::log_value(double t) const { return std::log(eval_(t)); }

std::vector<double> default_validation_grid() {
  std::vector<double> grid(1001);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 0.1 * static_cast<double>(i);
  return grid;
}

namespace {

GrowthRate exponential(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw PreconditionError("exponential growth rate needs c > 0");
  }
  return GrowthRate(
      "exp:c=" + std::to_string(c), [c](double t) { return std::exp(c * t); },
      [c](double t) { return c * std::exp(c * t); });
}

GrowthRate polynomial() {
  return GrowthRate(
      "poly", [](double t) { return t + 1.0; }, [](double) { return 1.0; });
}

GrowthRate logarithmic() {
  constexpr double e = std::numbers::e;
  return GrowthRate(
      "log", [](double t) { return std::log(e + t); }, [](double t) { return 1.0 / (e + t); });
}

}  // namespace

GrowthRate make_growth(GrowthKind kind, std::span<const double> params) {
  GrowthRate g = [&] {
    switch (kind) {
      case GrowthKind::exponential:
        return exponential(params.empty() ? 1.0 : params.front());
      case GrowthKind::polynomial:
        return polynomial();
      case GrowthKind::logarithmic:
        return logarithmic();
      case GrowthKind::custom:
        break;
    }
    throw PreconditionError("custom growth rates are built from an (eval, deriv) pair");
  }();
  const GrowthValidation report = validate_growth(g, default_validation_grid());
  if (!report.at_least_one || !report.monotone) {
    throw PreconditionError("growth rate " + g.label() + " violates mu >= 1 or monotonicity");
  }
  return g;
}

GrowthRate parse_growth(std::string_view spec) {
  if (spec == "poly") return make_growth(GrowthKind::polynomial);
  if (spec == "log") return make_growth(GrowthKind::logarithmic);
  if (spec == "exp") return make_growth(GrowthKind::exponential);
  constexpr std::string_view prefix = "exp:c=";
  if (spec.starts_with(prefix)) {
    const std::string_view number = spec.substr(prefix.size());
    double c = 0.0;
    const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), c);
    if (ec != std::errc() || ptr != number.data() + number.size()) {
      throw PreconditionError("malformed exponential rate '" + std::string(spec) + "'");
    }
    const double params[] = {c};
    return make_growth(GrowthKind::exponential, params);
  }
  throw PreconditionError("unknown growth rate '" + std::string(spec) +
                          "' (expected exp, exp:c=<value>, poly or log)");
}

GrowthValidation validate_growth(const GrowthRate& g, std::span<const double> grid) {
  GrowthValidation r;
  if (grid.empty()) {
    r.at_least_one = r.monotone = r.positive_derivative = r.derivative_consistent = r.divergent =
        false;
    return r;
  }
  auto note = [&r](double t) {
    if (r.first_violation_time < 0.0) r.first_violation_time = t;
  };
  double previous = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double mu = g(t);
    const double dmu = g.derivative(t);
    if (!(mu >= 1.0)) {
      r.at_least_one = false;
      note(t);
    }
    if (i > 0 && !(mu > previous)) {
      r.monotone = false;
      note(t);
    }
    if (!(dmu > 0.0)) {
      r.positive_derivative = false;
      note(t);
    }
    const double h = 1e-5 * std::max(1.0, t);
    const double fd = (g(t + h) - g(t - h)) / (2.0 * h);
    const double scale = std::abs(dmu) > 0.0 ? std::abs(dmu) : 1.0;
    const double rel = std::abs(fd - dmu) / scale;
    r.max_derivative_rel_error = std::max(r.max_derivative_rel_error, rel);
    if (!(rel <= 1e-6)) {
      r.derivative_consistent = false;
      note(t);
    }
    previous = mu;
  }
  r.divergent = g(grid.back()) > 10.0 * g(grid.front());
  return r;
}

}  // namespace mumanifold
