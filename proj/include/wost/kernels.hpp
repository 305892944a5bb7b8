#pragma once

// Green's functions, Poisson kernels, ball norms and screening factors for
// the Laplace (sigma = 0) and screened Poisson (sigma > 0) operators, plus
// the direction and radius samplers built on them.

#include "wost/bessel.hpp"
#include "wost/math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wost {

struct KernelContext {
  int dimension = 3;
  double radius = 1.0;
  double sigma = 0.0;
};

namespace detail {

inline void check_distance(double r) {
  if (!(r > 0.0)) throw std::domain_error("kernel evaluated at zero distance");
}

// x cosh x - sinh x, accurate for small x.
inline double xcosh_minus_sinh_small(double x) {
  const double x2 = x * x;
  return x * x2 * (1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (1.0 / 840.0 + x2 / 45360.0)));
}

// Below this value of R*sqrt(sigma) the screened radial CDFs lose precision
// and the harmonic ones are used instead.
inline constexpr double kScreenedCdfCutoff = 1e-3;

}  // namespace detail

// Free-space Green's function. The 2D harmonic case keeps the log(r)/2pi sign.
inline double greens_free(const KernelContext& ctx, double r) {
  detail::check_distance(r);
  if (ctx.sigma <= 0.0) {
    return ctx.dimension == 2 ? std::log(r) / (2.0 * kPi) : 1.0 / (4.0 * kPi * r);
  }
  const double s = std::sqrt(ctx.sigma);
  if (ctx.dimension == 2) return bessel::k0(r * s) / (2.0 * kPi);
  return std::exp(-r * s) / (4.0 * kPi * r);
}

// Green's function of the ball of radius ctx.radius, source at the center.
inline double greens_ball(const KernelContext& ctx, double r) {
  detail::check_distance(r);
  const double R = ctx.radius;
  if (r >= R) return 0.0;
  if (ctx.sigma <= 0.0) {
    return ctx.dimension == 2 ? std::log(R / r) / (2.0 * kPi) : (1.0 / r - 1.0 / R) / (4.0 * kPi);
  }
  const double s = std::sqrt(ctx.sigma);
  const double a = r * s, b = R * s;
  if (ctx.dimension == 2) {
    const double g = bessel::k0e(a) * std::exp(-a) -
                     bessel::i0e(a) * bessel::k0e(b) / bessel::i0e(b) * std::exp(a - 2.0 * b);
    return std::max(0.0, g) / (2.0 * kPi);
  }
  // sinh(s(R-r)) / (r sinh(sR)) written with decaying exponentials only.
  return std::exp(-a) * std::expm1(-2.0 * (b - a)) / std::expm1(-2.0 * b) / (4.0 * kPi * r);
}

// Integral of greens_ball over the ball.
inline double greens_ball_norm(const KernelContext& ctx) {
  const double R = ctx.radius;
  if (ctx.sigma <= 0.0) return ctx.dimension == 2 ? R * R / 4.0 : R * R / 6.0;
  const double s = std::sqrt(ctx.sigma);
  const double b = R * s;
  if (ctx.dimension == 2) {
    if (b < 1e-2) {
      const double b2 = b * b;
      const double i0m1 = b2 / 4.0 + b2 * b2 / 64.0 + b2 * b2 * b2 / 2304.0;
      return i0m1 / (1.0 + i0m1) / ctx.sigma;
    }
    return (1.0 - std::exp(-b) / bessel::i0e(b)) / ctx.sigma;
  }
  if (b < 1e-2) {
    const double b2 = b * b;
    return b2 * (1.0 / 6.0 - b2 * (7.0 / 360.0 - b2 * 31.0 / 15120.0)) / ctx.sigma;
  }
  return (1.0 + 2.0 * b * std::exp(-b) / std::expm1(-2.0 * b)) / ctx.sigma;
}

// Screening factor: ratio of the screened to the harmonic ball Poisson kernel
// at distance r. Equals 1 for sigma = 0 and lies in [0, 1) otherwise.
inline double q_factor(const KernelContext& ctx, double r) {
  if (ctx.sigma <= 0.0) return 1.0;
  detail::check_distance(r);
  const double s = std::sqrt(ctx.sigma);
  const double a = std::min(r, ctx.radius) * s, b = ctx.radius * s;
  if (ctx.dimension == 2) {
    const double q = a * (bessel::k1e(a) * std::exp(-a) +
                          bessel::i1e(a) * bessel::k0e(b) / bessel::i0e(b) * std::exp(a - 2.0 * b));
    return std::clamp(q, 0.0, 1.0);
  }
  // e^{-b}/sinh(b) = 2 e^{-2b} / (1 - e^{-2b})
  const double tail = -2.0 / std::expm1(-2.0 * b);
  double second;
  if (a < 0.1) {
    second = detail::xcosh_minus_sinh_small(a) * std::exp(-2.0 * b) * tail;
  } else {
    second = 0.5 * (std::exp(a - 2.0 * b) * (a - 1.0) + std::exp(-a - 2.0 * b) * (a + 1.0)) * tail;
  }
  return std::clamp(std::exp(-a) * (a + 1.0) + second, 0.0, 1.0);
}

// Ball Poisson kernel on the ball boundary (uniform over the sphere).
inline double poisson_kernel_ball_boundary(const KernelContext& ctx) {
  const double R = ctx.radius;
  const double harmonic = ctx.dimension == 2 ? 1.0 / (2.0 * kPi * R) : 1.0 / (4.0 * kPi * R * R);
  return harmonic * q_factor(ctx, R);
}

// Signed free-space Poisson kernel n_y . (y - x) / (2 pi r^2) or / (4 pi r^3).
template <int DIM>
double free_space_poisson_kernel(const Vec<DIM>& x, const Vec<DIM>& y, const Vec<DIM>& n_y) {
  const Vec<DIM> d = y - x;
  const double r = d.norm();
  detail::check_distance(r);
  if constexpr (DIM == 2) {
    return n_y.dot(d) / (2.0 * kPi * r * r);
  } else {
    return n_y.dot(d) / (4.0 * kPi * r * r * r);
  }
}

template <int DIM>
Vec<DIM> sample_unit_direction(Sampler& sampler) {
  if constexpr (DIM == 2) {
    const double phi = 2.0 * kPi * sampler.uniform();
    return Vec<2>(std::cos(phi), std::sin(phi));
  } else {
    const double z = 1.0 - 2.0 * sampler.uniform();
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * kPi * sampler.uniform();
    return Vec<3>(rho * std::cos(phi), rho * std::sin(phi), z);
  }
}

// Uniform direction on the hemisphere {v : v . axis >= 0}.
template <int DIM>
Vec<DIM> sample_hemisphere_direction(const Vec<DIM>& axis, Sampler& sampler) {
  Vec<DIM> v = sample_unit_direction<DIM>(sampler);
  if (v.dot(axis) < 0.0) v = -v;
  return v;
}

// CDF of the radial density t^{N-1} greens_ball(t), normalized on (0, R].
inline double greens_radius_cdf(const KernelContext& ctx, double t) {
  const double R = ctx.radius;
  if (t <= 0.0) return 0.0;
  if (t >= R) return 1.0;
  const double u = t / R;
  const double b = std::sqrt(std::max(ctx.sigma, 0.0)) * R;
  if (b < detail::kScreenedCdfCutoff) {
    if (ctx.dimension == 2) return u * u * (1.0 - 2.0 * std::log(u));
    return u * u * (3.0 - 2.0 * u);
  }
  const double s = b / R;
  const double a = s * t;
  if (ctx.dimension == 2) {
    const double ratio = bessel::k0e(b) / bessel::i0e(b);
    const double num = 1.0 - a * bessel::k1e(a) * std::exp(-a) - ratio * a * bessel::i1e(a) * std::exp(a - 2.0 * b);
    const double den = 1.0 - std::exp(-b) / bessel::i0e(b);
    return std::clamp(num / den, 0.0, 1.0);
  }
  // integral of tau sinh(s(R - tau)) scaled by 2 e^{-sR}
  const double num = -std::expm1(-2.0 * b) - a * (std::exp(-a) + std::exp(a - 2.0 * b)) -
                     (std::exp(-a) - std::exp(a - 2.0 * b));
  const double den = -std::expm1(-2.0 * b) - 2.0 * b * std::exp(-b);
  return std::clamp(num / den, 0.0, 1.0);
}

// Radius t in (0, R) with density proportional to t^{N-1} greens_ball(t).
inline double sample_greens_radius(const KernelContext& ctx, Sampler& sampler) {
  const double U = sampler.uniform();
  const double R = ctx.radius;
  const bool harmonic = std::sqrt(std::max(ctx.sigma, 0.0)) * R < detail::kScreenedCdfCutoff;
  if (harmonic && ctx.dimension == 3) {
    // Safeguarded Newton on 3u^2 - 2u^3 = U.
    double lo = 0.0, hi = 1.0, u = std::sqrt(U);
    for (int it = 0; it < 100; ++it) {
      const double F = u * u * (3.0 - 2.0 * u) - U;
      if (F > 0.0) hi = u; else lo = u;
      const double dF = 6.0 * u * (1.0 - u);
      double next = dF > 0.0 ? u - F / dF : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const bool done = std::abs(next - u) < 1e-12;
      u = next;
      if (done) break;
    }
    return std::clamp(u, 0x1.0p-60, 1.0 - 0x1.0p-53) * R;
  }
  double lo = 0.0, hi = R;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (greens_radius_cdf(ctx, mid) < U) lo = mid; else hi = mid;
  }
  return std::clamp(0.5 * (lo + hi), R * 0x1.0p-60, R * (1.0 - 0x1.0p-53));
}

}  // namespace wost
