#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

#include "mumanifold/errors.hpp"

namespace mumanifold {

struct OdeOptions {
  /// Local error target per unit time (relative to max(1, |state|)).
  double tolerance = 1e-10;
  double initial_step = 1e-2;
  double max_step = 0.5;
  /// States whose sum norm exceeds this are treated as escaped.
  double escape_norm = 1e12;
};

template <class State>
struct OdeTrajectory {
  std::vector<double> times;
  std::vector<State> states;
  bool escaped = false;
  double escape_time = 0.0;
  State escape_state{};
  std::size_t steps = 0;
};

namespace detail {

template <class State>
double sum_norm(const State& v) {
  if constexpr (std::is_arithmetic_v<State>) {
    return std::abs(v);
  } else {
    return v.template lpNorm<1>();
  }
}

template <class State, class Rhs>
State rk4_step(const Rhs& rhs, double t, const State& y, double h) {
  const State k1 = rhs(t, y);
  const State k2 = rhs(t + 0.5 * h, State(y + 0.5 * h * k1));
  const State k3 = rhs(t + 0.5 * h, State(y + 0.5 * h * k2));
  const State k4 = rhs(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Classical RK4 with step-doubling error control and local extrapolation.
/// Integrates y' = rhs(t, y) from times.front() and records the state at every
/// requested node. Integration stops early (escaped = true) when the state
/// leaves the escape ball or becomes non-finite. Throws IntegrationError on
/// step-size underflow.
template <class State, class Rhs>
OdeTrajectory<State> integrate_adaptive_rk4(const Rhs& rhs, std::span<const double> times,
                                            State y0, const OdeOptions& opts = {}) {
  OdeTrajectory<State> out;
  if (times.empty()) return out;
  out.times.push_back(times.front());
  out.states.push_back(y0);

  double t = times.front();
  State y = y0;
  double h = opts.initial_step;
  for (std::size_t node = 1; node < times.size(); ++node) {
    const double target = times[node];
    while (t < target) {
      const double min_step = 1e-14 * std::max(1.0, std::abs(t));
      const double step = std::min({h, opts.max_step, target - t});
      const bool truncated = step < h;
      if (step < min_step && !truncated) {
        throw IntegrationError("adaptive RK4: step size underflow", t);
      }
      const State big = detail::rk4_step(rhs, t, y, step);
      const State half = detail::rk4_step(rhs, t, y, 0.5 * step);
      const State fine = detail::rk4_step(rhs, t + 0.5 * step, half, 0.5 * step);
      const double err = detail::sum_norm(State(fine - big)) / 15.0;
      const double scale = std::max(1.0, detail::sum_norm(y));
      const double allowed =
          std::max(opts.tolerance * step, 64.0 * std::numeric_limits<double>::epsilon()) * scale;
      if (!std::isfinite(err)) {
        h = 0.25 * step;
        continue;
      }
      const bool accepted = err <= allowed;
      if (accepted) {
        t = (target - t - step <= min_step) ? target : t + step;
        y = fine + (fine - big) / 15.0;
        ++out.steps;
        const double norm = detail::sum_norm(y);
        if (!std::isfinite(norm) || norm > opts.escape_norm) {
          out.escaped = true;
          out.escape_time = t;
          out.escape_state = y;
          return out;
        }
      }
      // err ~ h^5 against an allowance ~ h, hence the quarter power.
      const double factor = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.25) : 4.0;
      if (!(accepted && truncated)) h = step * std::clamp(factor, 0.1, 4.0);
    }
    out.times.push_back(target);
    out.states.push_back(y);
  }
  return out;
}

}  // namespace mumanifold
