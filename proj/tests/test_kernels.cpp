#include "wost/kernels.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include <algorithm>

using namespace wost;

namespace {

double quad(const std::function<double(double)>& f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, a, b, 1e-13);
}

double shell(int dim, double r) { return dim == 2 ? 2.0 * kPi * r : 4.0 * kPi * r * r; }

// Ball Green's function from the textbook formulas, evaluated with Boost.
double reference_greens_ball(int dim, double sigma, double R, double r) {
  if (sigma == 0.0) return dim == 2 ? std::log(R / r) / (2 * kPi) : (1 / r - 1 / R) / (4 * kPi);
  const double s = std::sqrt(sigma);
  using boost::math::cyl_bessel_i;
  using boost::math::cyl_bessel_k;
  if (dim == 2) {
    return (cyl_bessel_k(0, r * s) - cyl_bessel_i(0, r * s) * cyl_bessel_k(0, R * s) / cyl_bessel_i(0, R * s)) /
           (2 * kPi);
  }
  return std::sinh((R - r) * s) / (4 * kPi * r * std::sinh(R * s));
}

double reference_q(int dim, double sigma, double R, double r) {
  const double s = std::sqrt(sigma), a = r * s, b = R * s;
  using boost::math::cyl_bessel_i;
  using boost::math::cyl_bessel_k;
  if (dim == 2) return (cyl_bessel_k(1, a) + cyl_bessel_i(1, a) * cyl_bessel_k(0, b) / cyl_bessel_i(0, b)) * a;
  return std::exp(-a) * (a + 1) + (std::cosh(a) * a - std::sinh(a)) * std::exp(-b) / std::sinh(b);
}

}  // namespace

TEST(Bessel, MatchesBoostOnUsedRange) {
  for (double x = 1e-4; x <= 50.0; x *= 1.07) {
    EXPECT_NEAR(bessel::i0(x) / boost::math::cyl_bessel_i(0, x), 1.0, 1e-9) << x;
    EXPECT_NEAR(bessel::i1(x) / boost::math::cyl_bessel_i(1, x), 1.0, 1e-9) << x;
    EXPECT_NEAR(bessel::k0(x) / boost::math::cyl_bessel_k(0, x), 1.0, 1e-9) << x;
    EXPECT_NEAR(bessel::k1(x) / boost::math::cyl_bessel_k(1, x), 1.0, 1e-9) << x;
  }
  // continuity across the switch to the asymptotic series
  for (auto f : {bessel::i0e, bessel::i1e, bessel::k0e, bessel::k1e}) {
    EXPECT_NEAR(f(bessel::kAsymptoticStart * (1 - 1e-12)) / f(bessel::kAsymptoticStart * (1 + 1e-12)), 1.0, 1e-10);
  }
  for (double x : {31.0, 60.0, 200.0, 1000.0}) {
    const double approx = 1.0 / std::sqrt(2 * kPi * x) * (1 + 1 / (8 * x));
    EXPECT_NEAR(bessel::i0e(x) / approx, 1.0, 2.0 / (x * x));
    EXPECT_NEAR(bessel::k0e(x) / (std::sqrt(kPi / (2 * x)) * (1 - 1 / (8 * x))), 1.0, 2.0 / (x * x));
  }
}

TEST(GreensFree, Values) {
  EXPECT_NEAR(greens_free({3, 1.0, 0.0}, 1.0), 1.0 / (4 * kPi), 1e-15);
  EXPECT_DOUBLE_EQ(greens_free({3, 1.0, 0.0}, 2.0), 0.5 * greens_free({3, 1.0, 0.0}, 1.0));
  EXPECT_NEAR(greens_free({3, 1.0, 1.0}, 1.0) / greens_free({3, 1.0, 0.0}, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(greens_free({2, 1.0, 0.0}, std::exp(1.0)), 1.0 / (2 * kPi), 1e-15);
  EXPECT_NEAR(greens_free({2, 1.0, 4.0}, 0.5), boost::math::cyl_bessel_k(0, 1.0) / (2 * kPi), 1e-14);
  EXPECT_THROW(greens_free({3, 1.0, 0.0}, 0.0), std::domain_error);
}

TEST(GreensBall, ValuesAndZeroOnSphere) {
  EXPECT_NEAR(greens_ball({3, 1.0, 0.0}, 0.5), 1.0 / (4 * kPi), 1e-15);
  for (int dim : {2, 3})
    for (double sigma : {0.0, 1e-8, 0.5, 5.0, 100.0, 3000.0})
      for (double R : {0.01, 1.0, 3.0}) {
        EXPECT_EQ(greens_ball({dim, R, sigma}, R), 0.0);
        for (double u : {0.01, 0.1, 0.3, 0.7, 0.99}) {
          const double ref = reference_greens_ball(dim, sigma, R, u * R);
          if (std::isfinite(ref) && ref > 1e-250) {
            EXPECT_NEAR(greens_ball({dim, R, sigma}, u * R) / ref, 1.0, 1e-9) << dim << " " << sigma << " " << u;
          }
        }
      }
  EXPECT_THROW(greens_ball({2, 1.0, 0.0}, 0.0), std::domain_error);
}

TEST(GreensBall, NormMatchesQuadrature) {
  EXPECT_DOUBLE_EQ(greens_ball_norm({3, 1.0, 0.0}), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(greens_ball_norm({2, 2.0, 0.0}), 1.0);
  for (int dim : {2, 3})
    for (double sigma : {0.0, 0.5, 4.0, 5.0})
      for (double R : {0.3, 1.0, 2.5}) {
        const KernelContext ctx{dim, R, sigma};
        const double q = quad([&](double r) { return shell(dim, r) * greens_ball(ctx, r); }, 0.0, R);
        EXPECT_NEAR(greens_ball_norm(ctx) / q, 1.0, 1e-8) << dim << " " << sigma << " " << R;
      }
}

TEST(QFactor, RangeAndReference) {
  EXPECT_EQ(q_factor({3, 1.0, 0.0}, 0.3), 1.0);
  const double expected = std::exp(-1.0) * 2 + (std::cosh(1.0) - std::sinh(1.0)) * std::exp(-1.0) / std::sinh(1.0);
  EXPECT_NEAR(q_factor({3, 1.0, 1.0}, 1.0), expected, 1e-15);
  EXPECT_LT(expected, 1.0);
  for (int dim : {2, 3})
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        const double sigma = std::pow(10.0, -3.0 + 5.0 * i / 9.0);
        const double R = 1.3;
        const double r = R * (j + 1) / 10.0;
        const double q = q_factor({dim, R, sigma}, r);
        EXPECT_GE(q, 0.0);
        EXPECT_LT(q, 1.0);
        EXPECT_NEAR(q, reference_q(dim, sigma, R, r), 1e-12);
      }
}

TEST(QFactor, BoundaryValueIdentity) {
  // u = 1 on the sphere, sigma u - lap u = 0 gives u(0) = Q(R) = 1 - sigma |G|.
  for (int dim : {2, 3})
    for (double sigma : {0.01, 0.5, 5.0, 80.0}) {
      const KernelContext ctx{dim, 0.8, sigma};
      EXPECT_NEAR(q_factor(ctx, ctx.radius) + sigma * greens_ball_norm(ctx), 1.0, 1e-12);
    }
}

TEST(PoissonKernel, BallBoundaryAndFreeSpace) {
  EXPECT_NEAR(poisson_kernel_ball_boundary({3, 1.0, 0.0}), 1.0 / (4 * kPi), 1e-16);
  EXPECT_NEAR(poisson_kernel_ball_boundary({2, 2.0, 0.0}), 1.0 / (4 * kPi), 1e-16);
  EXPECT_NEAR(free_space_poisson_kernel<3>(Vec<3>::Zero(), Vec<3>::UnitX(), Vec<3>::UnitX()), 1.0 / (4 * kPi), 1e-16);
  EXPECT_EQ(free_space_poisson_kernel<3>(Vec<3>::Zero(), Vec<3>::UnitX(), Vec<3>::UnitY()), 0.0);
  EXPECT_THROW(free_space_poisson_kernel<3>(Vec<3>::Zero(), Vec<3>::Zero(), Vec<3>::UnitY()), std::domain_error);
  // |P| integrates to 1 over a circle of radius 2 around x
  const int n = 1000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * (i + 0.5) / n;
    const Vec<2> y(2 * std::cos(a), 2 * std::sin(a));
    total += std::abs(free_space_poisson_kernel<2>(Vec<2>::Zero(), y, y / 2)) * (2 * 2 * kPi / n);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Limits, SigmaToZero) {
  for (int dim : {2, 3}) {
    for (double u = 0.1; u <= 1.0; u += 0.05) {
      const double g0 = greens_ball({dim, 1.0, 0.0}, u), g = greens_ball({dim, 1.0, 1e-8}, u);
      if (g0 > 0) {
        EXPECT_NEAR(g / g0, 1.0, 1e-6) << dim << " " << u;
      } else {
        EXPECT_NEAR(g, 0.0, 1e-12);
      }
      EXPECT_NEAR(q_factor({dim, 1.0, 1e-8}, u), 1.0, 1e-6);
    }
    EXPECT_NEAR(greens_ball_norm({dim, 1.0, 1e-8}) / greens_ball_norm({dim, 1.0, 0.0}), 1.0, 1e-6);
  }
}

TEST(Directions, SphereUniformity) {
  Sampler s(3);
  const int n = 100000;
  Vec<3> mean = Vec<3>::Zero();
  std::array<int, 8> oct{};
  for (int i = 0; i < n; ++i) {
    const Vec<3> v = sample_unit_direction<3>(s);
    EXPECT_NEAR(v.norm(), 1.0, 1e-14);
    mean += v;
    ++oct[(v.x() > 0) + 2 * (v.y() > 0) + 4 * (v.z() > 0)];
  }
  EXPECT_LT((mean / n).norm(), 0.02);
  double chi2 = 0;
  for (int c : oct) chi2 += (c - n / 8.0) * (c - n / 8.0) / (n / 8.0);
  EXPECT_LT(chi2, 24.32);  // 7 dof, p = 0.001

  Vec<2> mean2 = Vec<2>::Zero();
  std::array<int, 4> quadr{};
  for (int i = 0; i < n; ++i) {
    const Vec<2> v = sample_unit_direction<2>(s);
    mean2 += v;
    ++quadr[(v.x() > 0) + 2 * (v.y() > 0)];
  }
  EXPECT_LT((mean2 / n).norm(), 0.02);
  chi2 = 0;
  for (int c : quadr) chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
  EXPECT_LT(chi2, 16.27);  // 3 dof
}

TEST(Directions, Hemisphere) {
  Sampler s(4);
  const Vec<3> axis = Vec<3>(1, 2, -0.5).normalized();
  Vec<3> mean = Vec<3>::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec<3> v = sample_hemisphere_direction<3>(axis, s);
    EXPECT_GE(v.dot(axis), 0.0);
    mean += v;
  }
  EXPECT_NEAR((mean / n).dot(axis), 0.5, 0.01);  // mean cosine on a hemisphere
}

TEST(RadialSampling, CdfMatchesQuadrature) {
  for (int dim : {2, 3})
    for (double sigma : {0.0, 0.5, 5.0, 200.0}) {
      const KernelContext ctx{dim, 1.7, sigma};
      const double norm = greens_ball_norm(ctx);
      EXPECT_EQ(greens_radius_cdf(ctx, ctx.radius), 1.0);
      for (double u : {0.05, 0.3, 0.6, 0.95}) {
        const double q = quad([&](double r) { return shell(dim, r) * greens_ball(ctx, r); }, 0.0, u * ctx.radius);
        EXPECT_NEAR(greens_radius_cdf(ctx, u * ctx.radius), q / norm, 1e-10) << dim << " " << sigma << " " << u;
      }
    }
}

TEST(RadialSampling, HarmonicThreeDimensionalMean) {
  Sampler s(5);
  const KernelContext ctx{3, 1.0, 0.0};
  const int n = 1000000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double t = sample_greens_radius(ctx, s);
    ASSERT_GT(t, 0.0);
    ASSERT_LT(t, 1.0);
    sum += t;
    sum2 += t * t;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  EXPECT_LE(std::abs(mean - 0.5), 3 * sd / std::sqrt(double(n)));
}

TEST(RadialSampling, KolmogorovSmirnov) {
  for (int dim : {2, 3})
    for (double sigma : {0.0, 5.0}) {
      const KernelContext ctx{dim, 2.0, sigma};
      Sampler s(6 + dim);
      const int n = 20000;
      std::vector<double> t(n);
      for (auto& v : t) v = sample_greens_radius(ctx, s);
      std::sort(t.begin(), t.end());
      double D = 0;
      for (int i = 0; i < n; ++i) {
        const double F = greens_radius_cdf(ctx, t[i]);
        D = std::max({D, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
      }
      // critical value for p = 0.001
      EXPECT_LT(D * std::sqrt(double(n)), 1.95) << dim << " " << sigma;
    }
}

TEST(RadialSampling, ImportanceSampledIntegral) {
  for (int dim : {2, 3}) {
    const KernelContext ctx{dim, 1.2, 0.0};
    // phi(y) = 1 + y_0^2 averaged over directions: 1 + r^2 / dim
    const double exact =
        quad([&](double r) { return shell(dim, r) * greens_ball(ctx, r) * (1 + r * r / dim); }, 0.0, ctx.radius);
    Sampler s(40 + dim);
    const int n = 200000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
      Vec<3> y = Vec<3>::Zero();
      if (dim == 2) {
        y.head<2>() = sample_unit_direction<2>(s);
      } else {
        y = sample_unit_direction<3>(s);
      }
      y *= sample_greens_radius(ctx, s);
      const double val = greens_ball_norm(ctx) * (1 + y.x() * y.x());
      sum += val;
      sum2 += val * val;
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_LE(std::abs(mean - exact), 3 * se) << dim;
  }
}
