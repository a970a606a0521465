#pragma once

// Cubic Hermite shape functions on an interval of length len, local t in [0, 1].
// Order: value at left, slope at left, value at right, slope at right.
// Derivatives are with respect to the physical coordinate.

#include <array>

namespace peakspec::hermite {

struct ShapeValues {
  std::array<double, 4> v{};
  std::array<double, 4> d1{};
  std::array<double, 4> d2{};
};

inline ShapeValues shape(double t, double len) {
  ShapeValues s;
  const double t2 = t * t, t3 = t2 * t;
  s.v = {1.0 - 3.0 * t2 + 2.0 * t3, len * (t - 2.0 * t2 + t3), 3.0 * t2 - 2.0 * t3, len * (t3 - t2)};
  const double il = 1.0 / len;
  s.d1 = {(-6.0 * t + 6.0 * t2) * il, 1.0 - 4.0 * t + 3.0 * t2, (6.0 * t - 6.0 * t2) * il, 3.0 * t2 - 2.0 * t};
  s.d2 = {(-6.0 + 12.0 * t) * il * il, (-4.0 + 6.0 * t) * il, (6.0 - 12.0 * t) * il * il, (6.0 * t - 2.0) * il};
  return s;
}

// Four-point Gauss-Legendre rule on [0, 1].
struct Gauss4Unit {
  static constexpr std::array<double, 4> nodes{0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                                               0.9305681557970263};
  static constexpr std::array<double, 4> weights{0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                                                 0.1739274225687269};
};

}  // namespace peakspec::hermite
