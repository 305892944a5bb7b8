#pragma once

// Modified Bessel functions of order 0 and 1.
// Below kAsymptoticStart the libstdc++ special functions are used; above it
// the exponentially scaled large-argument series avoids overflow.

#include <cmath>
#include <numbers>

namespace wost::bessel {

inline constexpr double kAsymptoticStart = 30.0;

namespace detail {

// sum_k (sign)^k a_k(nu) / x^k with a_k(nu) = prod_{j=1..k} (4nu^2 - (2j-1)^2) / (k! 8^k).
inline double hankel_sum(double nu, double x, double sign) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (mu - odd * odd) / (k * 8.0 * x) * sign;
    if (std::abs(next) >= std::abs(term)) break;  // series starts diverging
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

inline double scaled_i(double nu, double x) {
  if (x <= kAsymptoticStart) return std::cyl_bessel_i(nu, x) * std::exp(-x);
  return hankel_sum(nu, x, -1.0) / std::sqrt(2.0 * std::numbers::pi * x);
}

inline double scaled_k(double nu, double x) {
  if (x <= kAsymptoticStart) return std::cyl_bessel_k(nu, x) * std::exp(x);
  return hankel_sum(nu, x, 1.0) * std::sqrt(std::numbers::pi / (2.0 * x));
}

}  // namespace detail

// e^{-x} I_0(x), e^{-x} I_1(x), e^{x} K_0(x), e^{x} K_1(x) for x > 0.
inline double i0e(double x) { return x == 0.0 ? 1.0 : detail::scaled_i(0.0, x); }
inline double i1e(double x) { return x == 0.0 ? 0.0 : detail::scaled_i(1.0, x); }
inline double k0e(double x) { return detail::scaled_k(0.0, x); }
inline double k1e(double x) { return detail::scaled_k(1.0, x); }

inline double i0(double x) { return x <= kAsymptoticStart ? std::cyl_bessel_i(0.0, x) : i0e(x) * std::exp(x); }
inline double i1(double x) { return x <= kAsymptoticStart ? std::cyl_bessel_i(1.0, x) : i1e(x) * std::exp(x); }
inline double k0(double x) { return x <= kAsymptoticStart ? std::cyl_bessel_k(0.0, x) : k0e(x) * std::exp(-x); }
inline double k1(double x) { return x <= kAsymptoticStart ? std::cyl_bessel_k(1.0, x) : k1e(x) * std::exp(-x); }

}  // namespace wost::bessel
