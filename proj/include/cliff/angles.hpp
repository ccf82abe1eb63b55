// Angle arithmetic on the circle. Everything downstream funnels angle
// differences through wrap_angle so the 0/2pi seam is handled in one place.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cliff {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Wraps an angle to (-pi, pi]. Throws on non-finite input.
inline double wrap_angle(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("wrap_angle: non-finite angle");
    }
    double r = std::fmod(x, two_pi);
    if (r <= -std::numbers::pi) {
        r += two_pi;
    } else if (r > std::numbers::pi) {
        r -= two_pi;
    }
    return r;
}

/// Wraps an angle to [0, 2pi). Throws on non-finite input.
inline double wrap_two_pi(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("wrap_two_pi: non-finite angle");
    }
    double r = std::fmod(x, two_pi);
    if (r < 0.0) {
        r += two_pi;
    }
    if (r >= two_pi) {  // fmod rounding can land exactly on 2pi
        r = 0.0;
    }
    return r;
}

}  // namespace cliff
