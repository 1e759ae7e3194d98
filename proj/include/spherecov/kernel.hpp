#pragma once

// Zonal kernels: the two-parameter smooth family (1 - h^mu)^nu on [0, 1),
// its step-function discretization over rings, and unit-variance scaling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "spherecov/error.hpp"
#include "spherecov/sphere_geom.hpp"

namespace spherecov {

/// Shape (mu, nu) and covariance range of a smooth kernel. The kernel radius is
/// range / 2, so range may go up to 2 pi (kernel covering the whole sphere).
struct SmoothKernelParams {
  double mu = 1.0;
  double nu = 1.0;
  double range = pi;

  [[nodiscard]] double radius() const { return 0.5 * range; }

  void validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) {
      throw input_error("shape parameter must satisfy μ > 0, got " + std::to_string(mu));
    }
    if (!(nu > 0.0) || !std::isfinite(nu)) {
      throw input_error("shape parameter must satisfy ν > 0, got " + std::to_string(nu));
    }
    if (!(range > 0.0 && range <= 2.0 * pi)) {
      throw input_error("range must lie in (0, 2 pi], got " + std::to_string(range));
    }
  }
};

/// (1 - h^mu)^nu for h < 1, zero otherwise.
inline double smooth_kernel_value(double h, double mu, double nu) {
  if (!(h < 1.0)) return 0.0;
  if (h <= 0.0) return 1.0;
  const double hm = mu == 1.0 ? h : std::pow(h, mu);
  return nu == 1.0 ? 1.0 - hm : std::pow(1.0 - hm, nu);
}

namespace detail {

/// Area of the ring between radii inner < outer, without the cancellation of
/// cap_area(outer) - cap_area(inner).
inline double ring_area(double inner, double outer) {
  return sphere_area * std::sin(0.5 * (outer - inner)) * std::sin(0.5 * (outer + inner));
}

}  // namespace detail

/// Piecewise-constant zonal kernel: value levels[j] on the ring
/// radii[j-1] <= h < radii[j] (radii[-1] = 0). diffs[j] = levels[j] - levels[j+1],
/// with the last diff equal to the last level, so the kernel is the sum of
/// diffs[j] times the indicator of the cap of radius radii[j].
class StepKernel {
 public:
  StepKernel() = default;

  StepKernel(std::vector<double> radii, std::vector<double> levels)
      : radii_(std::move(radii)), levels_(std::move(levels)) {
    if (radii_.empty() || radii_.size() != levels_.size()) {
      throw input_error("step kernel needs equally many (>= 1) radii and levels");
    }
    double prev = 0.0;
    for (double r : radii_) {
      if (!(r > prev && r <= pi)) {
        throw input_error("step radii must be strictly increasing in (0, pi]");
      }
      prev = r;
    }
    for (double a : levels_) {
      if (!std::isfinite(a)) throw input_error("step levels must be finite");
    }
    diffs_.resize(levels_.size());
    for (std::size_t j = 0; j + 1 < levels_.size(); ++j) diffs_[j] = levels_[j] - levels_[j + 1];
    diffs_.back() = levels_.back();
  }

  [[nodiscard]] std::size_t size() const { return radii_.size(); }
  [[nodiscard]] const std::vector<double>& radii() const { return radii_; }
  [[nodiscard]] const std::vector<double>& levels() const { return levels_; }
  [[nodiscard]] const std::vector<double>& diffs() const { return diffs_; }
  [[nodiscard]] double outer_radius() const { return radii_.empty() ? 0.0 : radii_.back(); }

  /// Kernel value at distance h from the center.
  [[nodiscard]] double value_at(double h) const {
    const auto it = std::upper_bound(radii_.begin(), radii_.end(), h);
    if (it == radii_.end()) return 0.0;
    return levels_[static_cast<std::size_t>(it - radii_.begin())];
  }

  /// Integral of the squared kernel over the sphere.
  [[nodiscard]] double squared_norm() const {
    double sum = 0.0;
    double inner = 0.0;
    for (std::size_t k = 0; k < radii_.size(); ++k) {
      sum += levels_[k] * levels_[k] * detail::ring_area(inner, radii_[k]);
      inner = radii_[k];
    }
    return sum;
  }

  [[nodiscard]] bool is_normalized(double tol = 1e-10) const {
    return std::abs(squared_norm() - 1.0) <= tol;
  }

  [[nodiscard]] StepKernel scaled(double factor) const {
    std::vector<double> levels = levels_;
    for (double& a : levels) a *= factor;
    return {radii_, std::move(levels)};
  }

 private:
  std::vector<double> radii_;
  std::vector<double> levels_;
  std::vector<double> diffs_;
};

/// Step approximation of the smooth kernel with n_steps rings of equal width in
/// normalized distance; each ring takes the smooth value at its midpoint.
/// The result is not normalized.
inline StepKernel discretize(const SmoothKernelParams& params, std::size_t n_steps) {
  params.validate();
  if (n_steps == 0) throw input_error("discretize needs at least one step");
  const double n = static_cast<double>(n_steps);
  std::vector<double> radii(n_steps);
  std::vector<double> levels(n_steps);
  for (std::size_t j = 0; j < n_steps; ++j) {
    const double jj = static_cast<double>(j);
    radii[j] = params.radius() * ((jj + 1.0) / n);
    levels[j] = smooth_kernel_value((jj + 0.5) / n, params.mu, params.nu);
  }
  radii.back() = params.radius();
  return {std::move(radii), std::move(levels)};
}

/// Scales the levels so that the squared kernel integrates to one over the sphere.
inline StepKernel normalize(const StepKernel& kernel) {
  const double norm = kernel.squared_norm();
  if (!(norm > 0.0)) {
    throw degenerate_kernel_error("cannot normalize a kernel whose levels are all zero");
  }
  return kernel.scaled(1.0 / std::sqrt(norm));
}

}  // namespace spherecov
