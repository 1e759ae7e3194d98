#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "spherecov/kernel.hpp"
#include "spherecov/oracle.hpp"

using namespace spherecov;

namespace {

/// Integral of k(theta)^2 over the sphere by Gauss-Legendre on each ring in
/// colatitude, which is exact up to rounding for a piecewise-constant kernel.
double squared_norm_by_quadrature(const StepKernel& k) {
  const auto [x, w] = gauss_legendre(32);
  double sum = 0.0;
  double inner = 0.0;
  for (double outer : k.radii()) {
    const double half = 0.5 * (outer - inner);
    const double mid = 0.5 * (outer + inner);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double theta = mid + half * x[i];
      const double v = k.value_at(theta);
      sum += w[i] * half * 2.0 * pi * std::sin(theta) * v * v;
    }
    inner = outer;
  }
  return sum;
}

}  // namespace

TEST(SmoothKernelValue, Examples) {
  EXPECT_EQ(smooth_kernel_value(1.5, 1.0, 1.0), 0.0);
  EXPECT_EQ(smooth_kernel_value(1.0, 2.0, 3.0), 0.0);
  EXPECT_EQ(smooth_kernel_value(0.0, 2.0, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(smooth_kernel_value(0.5, 1.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(smooth_kernel_value(0.5, 2.0, 3.0), std::pow(0.75, 3.0));
}

TEST(SmoothKernelParams, ValidationMessages) {
  EXPECT_NO_THROW((SmoothKernelParams{1.0, 1.0, 2.0 * pi}.validate()));
  try {
    SmoothKernelParams{1.0, 0.0, pi}.validate();
    FAIL();
  } catch (const input_error& e) {
    EXPECT_NE(std::string(e.what()).find("ν > 0"), std::string::npos);
  }
  EXPECT_THROW((SmoothKernelParams{-1.0, 1.0, pi}.validate()), input_error);
  EXPECT_THROW((SmoothKernelParams{1.0, 1.0, 0.0}.validate()), input_error);
  EXPECT_THROW((SmoothKernelParams{1.0, 1.0, 2.0 * pi + 1e-9}.validate()), input_error);
}

TEST(StepKernel, RejectsMalformedInput) {
  EXPECT_THROW(StepKernel({}, {}), input_error);
  EXPECT_THROW(StepKernel({0.2, 0.1}, {1.0, 0.5}), input_error);
  EXPECT_THROW(StepKernel({0.2, 0.2}, {1.0, 0.5}), input_error);
  EXPECT_THROW(StepKernel({0.2, 3.5}, {1.0, 0.5}), input_error);
  EXPECT_THROW(StepKernel({0.2}, {1.0, 0.5}), input_error);
}

TEST(StepKernel, DiffsMatchLevels) {
  const StepKernel k({0.1, 0.3, 0.7}, {2.0, 1.25, 0.5});
  ASSERT_EQ(k.diffs().size(), 3u);
  EXPECT_NEAR(k.diffs()[0], 0.75, 1e-15);
  EXPECT_NEAR(k.diffs()[1], 0.75, 1e-15);
  EXPECT_EQ(k.diffs()[2], 0.5);
  EXPECT_EQ(k.value_at(0.0), 2.0);
  EXPECT_EQ(k.value_at(0.1), 1.25);
  EXPECT_EQ(k.value_at(0.69), 0.5);
  EXPECT_EQ(k.value_at(0.7), 0.0);
}

TEST(Discretize, SingleLinearStep) {
  const auto k = discretize({1.0, 1.0, 2.0}, 1);
  ASSERT_EQ(k.size(), 1u);
  EXPECT_DOUBLE_EQ(k.levels()[0], 0.5);
  EXPECT_DOUBLE_EQ(k.radii()[0], 1.0);
  EXPECT_THROW(discretize({1.0, 1.0, 2.0}, 0), input_error);
}

TEST(Discretize, MonotoneKernelsGiveNonnegativeDiffs) {
  for (double mu : {0.5, 1.0, 3.0}) {
    for (double nu : {0.125, 1.0, 8.0}) {
      const auto k = discretize({mu, nu, 1.7}, 37);
      for (double b : k.diffs()) EXPECT_GE(b, 0.0);
    }
  }
}

TEST(Discretize, SixteenStepsBracketSmoothKernel) {
  const SmoothKernelParams p{1.0, 2.0, pi};
  const auto k = discretize(p, 16);
  const double r = p.radius();
  for (std::size_t j = 0; j < k.size(); ++j) {
    const double lo = static_cast<double>(j) / 16.0;
    const double hi = static_cast<double>(j + 1) / 16.0;
    EXPECT_LE(k.levels()[j], smooth_kernel_value(lo, p.mu, p.nu));
    EXPECT_GE(k.levels()[j], smooth_kernel_value(hi, p.mu, p.nu));
    EXPECT_NEAR(k.radii()[j], r * hi, 1e-15);
  }
}

TEST(Discretize, PreservesSupport) {
  const SmoothKernelParams p{2.0, 0.5, 1.2};
  const auto k = discretize(p, 50);
  EXPECT_EQ(k.outer_radius(), p.radius());
  EXPECT_EQ(k.value_at(p.radius()), 0.0);
  EXPECT_EQ(k.value_at(pi), 0.0);
}

TEST(Discretize, SupNormErrorHalvesWithSteps) {
  const SmoothKernelParams p{1.0, 1.0, 2.0};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> h(0.0, 1.0);
  std::vector<double> hs(10000);
  for (double& v : hs) v = h(rng);
  double prev = INFINITY;
  for (std::size_t n = 4; n <= 1024; n *= 2) {
    const auto k = discretize(p, n);
    double err = 0.0;
    for (double v : hs) {
      err = std::max(err, std::abs(k.value_at(v * p.radius()) - smooth_kernel_value(v, 1.0, 1.0)));
    }
    EXPECT_LT(err, prev);
    EXPECT_LE(err, 0.5 / static_cast<double>(n) + 1e-12);
    EXPECT_GE(err, 0.25 / static_cast<double>(n));
    prev = err;
  }
}

TEST(Normalize, SingleCapClosedForm) {
  const double r = 0.8;
  const auto k = normalize(StepKernel({r}, {1.0}));
  EXPECT_NEAR(k.levels()[0], 1.0 / std::sqrt(cap_area(r)), 1e-15);
  EXPECT_TRUE(k.is_normalized(1e-12));
}

TEST(Normalize, IdempotentAndRatioPreserving) {
  const auto raw = discretize({1.5, 2.5, 2.2}, 40);
  const auto once = normalize(raw);
  const auto twice = normalize(once);
  EXPECT_NEAR(once.squared_norm(), 1.0, 1e-12);
  for (std::size_t j = 0; j < raw.size(); ++j) {
    EXPECT_NEAR(twice.levels()[j], once.levels()[j], 1e-15);
    EXPECT_NEAR(once.levels()[j] / once.levels()[0], raw.levels()[j] / raw.levels()[0], 1e-14);
  }
}

TEST(Normalize, SquaredIntegralByQuadratureIsOne) {
  for (double range : {0.3, pi, 2.0 * pi}) {
    const auto k = normalize(discretize({1.0, 2.0, range}, 64));
    EXPECT_NEAR(squared_norm_by_quadrature(k), 1.0, 1e-6) << "range " << range;
  }
}

TEST(Normalize, ZeroKernelIsDegenerate) {
  EXPECT_THROW(normalize(StepKernel({0.5, 1.0}, {0.0, 0.0})), degenerate_kernel_error);
}
