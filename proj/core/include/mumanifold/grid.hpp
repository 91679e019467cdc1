#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace mumanifold {

/// Uniform grid start + i * step, i = 0 .. count - 1.
struct TimeGrid {
  double start = 0.0;
  double step = 1.0;
  std::size_t count = 1;

  static TimeGrid spanning(double start, double end, double step) {
    const auto intervals = static_cast<std::size_t>(std::llround((end - start) / step));
    return TimeGrid{start, step, intervals + 1};
  }

  double at(std::size_t i) const { return start + static_cast<double>(i) * step; }
  double back() const { return at(count - 1); }

  std::vector<double> nodes() const {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = at(i);
    return out;
  }

  /// The suffix grid starting at node i.
  TimeGrid from(std::size_t i) const { return TimeGrid{at(i), step, count - i}; }
};

/// Symmetric grid of stable coordinates (k - half) * step, k = 0 .. 2*half.
/// The centre node is exactly zero.
struct XiGrid {
  double step = 1.0;
  std::size_t half = 0;

  static XiGrid covering(double range, double step) {
    return XiGrid{step, static_cast<std::size_t>(std::llround(range / step))};
  }

  std::size_t size() const { return 2 * half + 1; }
  std::size_t centre() const { return half; }
  double at(std::size_t k) const {
    return (static_cast<double>(k) - static_cast<double>(half)) * step;
  }
  double radius() const { return static_cast<double>(half) * step; }
};

}  // namespace mumanifold
