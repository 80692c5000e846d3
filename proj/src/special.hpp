#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace crbeam {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kLn2 = 0.69314718055994530942;

/// Gaussian tail probability Q(x) = Pr{N(0,1) > x}.
inline double q_func(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Inverse of q_func on (0, 1).
inline double q_inv(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("q_inv: argument must be in (0,1)");
    return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(a, x);
}

/// log of the Gamma(shape a, scale 1) density at x > 0.
inline double log_gamma_pdf(double a, double x) {
    return (a - 1.0) * std::log(x) - x - std::lgamma(a);
}

} // namespace crbeam
