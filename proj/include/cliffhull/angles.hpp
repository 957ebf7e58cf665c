#pragma once

#include <cmath>
#include <numbers>

namespace cliffhull {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Torus area and the 8-dimensional product measure used as Monte Carlo scale.
inline constexpr double torus_area = 4.0 * pi * pi;          // 4*pi^2
inline constexpr double half_torus_area = 2.0 * pi * pi;     // largest admissible cap measure
inline const double quad_torus_measure = 256.0 * std::pow(pi, 8.0);

// Reduce an angle to the canonical interval (-pi, pi].
inline double wrap_angle(double x) {
    double r = std::remainder(x, two_pi);
    if (r <= -pi) r += two_pi;
    return r;
}

} // namespace cliffhull
