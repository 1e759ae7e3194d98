#pragma once

// Brute-force references used to check the closed forms: tensor quadrature of
// the smooth-kernel convolution integral and Monte-Carlo surface areas.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "spherecov/error.hpp"
#include "spherecov/kernel.hpp"
#include "spherecov/sphere_geom.hpp"

namespace spherecov {

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
  if (n == 0) throw input_error("gauss_legendre needs at least one node");
  const double nn = static_cast<double>(n);
  // P_n(z) and its derivative by the three-term recurrence.
  auto legendre = [&](double z) {
    double p_prev = 1.0;
    double p = z;
    for (std::size_t k = 2; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      const double next = ((2.0 * kk - 1.0) * z * p - (kk - 1.0) * p_prev) / kk;
      p_prev = p;
      p = next;
    }
    if (n == 1) p_prev = 1.0;
    return std::pair{p, nn * (z * p - p_prev) / (z * z - 1.0)};
  };
  std::vector<double> x(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (static_cast<double>(i) + 0.75) / (nn + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(z);
      const double step = p / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    if (n % 2 == 1 && i == n / 2) z = 0.0;
    const double dp = legendre(z).second;
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {std::move(x), std::move(w)};
}

/// Tensor grid in polar coordinates about the first kernel center.
struct QuadratureSpec {
  std::size_t n_theta = 512;
  std::size_t n_phi = 1024;

  void validate() const {
    if (n_theta < 16 || n_phi < 16) throw input_error("quadrature needs n_theta, n_phi >= 16");
  }
};

namespace detail {

/// Integral over the sphere of k(.|north pole) k(.|center at colatitude d), unnormalized.
inline double smooth_overlap(const SmoothKernelParams& p, double d, const QuadratureSpec& grid,
                             const std::vector<double>& gx, const std::vector<double>& gw) {
  const double radius = p.radius();
  const double cos_d = std::cos(d);
  const double sin_d = std::sin(d);
  // Midpoint nodes in phi are symmetric about 0, so sum one half and double.
  const std::size_t half = grid.n_phi / 2;
  const double dphi = 2.0 * pi / static_cast<double>(grid.n_phi);
  std::vector<double> cos_phi(half);
  for (std::size_t k = 0; k < half; ++k) cos_phi[k] = std::cos((static_cast<double>(k) + 0.5) * dphi);
  const bool odd = grid.n_phi % 2 == 1;  // extra node at phi = pi
  const double chord_max = 2.0 * std::sin(0.5 * radius);

  double total = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double theta = 0.5 * radius * (gx[i] + 1.0);
    const double k1 = smooth_kernel_value(theta / radius, p.mu, p.nu);
    if (k1 == 0.0) continue;
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    auto k2_at = [&](double cphi) {
      // |s - c2|^2 = 2 - 2 s.c2 with s.c2 = st cphi sin_d + ct cos_d.
      const double chord_sq = std::max(0.0, 2.0 - 2.0 * (st * cphi * sin_d + ct * cos_d));
      if (radius < pi && chord_sq >= chord_max * chord_max) return 0.0;
      const double chord = std::sqrt(chord_sq);
      const double dist = 2.0 * std::asin(std::min(0.5 * chord, 1.0));
      return smooth_kernel_value(dist / radius, p.mu, p.nu);
    };
    double ring = 0.0;
    for (std::size_t k = 0; k < half; ++k) ring += 2.0 * k2_at(cos_phi[k]);
    if (odd) ring += k2_at(-1.0);
    total += gw[i] * 0.5 * radius * st * k1 * ring * dphi;
  }
  return total;
}

}  // namespace detail

/// Correlation at distance d of the field generated by the smooth kernel,
/// normalized by the same quadrature at d = 0.
inline double quad_covariance(const SmoothKernelParams& params, double d,
                              const QuadratureSpec& grid = {}) {
  params.validate();
  grid.validate();
  detail::require_radius(d, "distance");
  const auto [gx, gw] = gauss_legendre(grid.n_theta);
  const double norm = detail::smooth_overlap(params, 0.0, grid, gx, gw);
  return detail::smooth_overlap(params, d, grid, gx, gw) / norm;
}

/// Quadrature covariance on a set of distances, sharing nodes and normalization.
inline std::vector<double> quad_covariance_curve(const SmoothKernelParams& params,
                                                 const std::vector<double>& distances,
                                                 const QuadratureSpec& grid = {}) {
  params.validate();
  grid.validate();
  const auto [gx, gw] = gauss_legendre(grid.n_theta);
  const double norm = detail::smooth_overlap(params, 0.0, grid, gx, gw);
  std::vector<double> out;
  out.reserve(distances.size());
  for (double d : distances) {
    detail::require_radius(d, "distance");
    out.push_back(detail::smooth_overlap(params, d, grid, gx, gw) / norm);
  }
  return out;
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// Area of {(z, phi) : inside(z, phi)} from n_samples points, one per cell of a
/// jittered equal-area (z, phi) grid. The reported error is the binomial bound
/// for independent uniform samples; stratification only makes it conservative.
template <class Inside>
McEstimate mc_area(Inside&& inside, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 100000) throw input_error("Monte-Carlo estimate needs at least 1e5 samples");
  const auto n_z = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_samples))));
  const std::size_t n_phi = (n_samples + n_z - 1) / n_z;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t hits = 0;
  const double dz = 2.0 / static_cast<double>(n_z);
  const double dphi = 2.0 * pi / static_cast<double>(n_phi);
  for (std::size_t i = 0; i < n_z; ++i) {
    for (std::size_t k = 0; k < n_phi; ++k) {
      const double z = -1.0 + (static_cast<double>(i) + unit(rng)) * dz;
      const double phi = (static_cast<double>(k) + unit(rng)) * dphi;
      if (inside(z, phi)) ++hits;
    }
  }
  McEstimate est;
  est.n_samples = n_z * n_phi;
  const double frac = static_cast<double>(hits) / static_cast<double>(est.n_samples);
  est.estimate = sphere_area * frac;
  est.std_error = sphere_area * std::sqrt(frac * (1.0 - frac) / static_cast<double>(est.n_samples));
  return est;
}

/// Point with height z and azimuth phi.
inline UnitVec3 point_from_z_phi(double z, double phi) {
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  return UnitVec3::normalized(rho * std::cos(phi), rho * std::sin(phi), z);
}

/// Monte-Carlo area of two caps of radii r0, r1 with centers d apart.
inline McEstimate mc_cap_intersection(double r0, double r1, double d, std::size_t n_samples,
                                      std::uint64_t seed) {
  detail::require_radius(r0, "cap radius r0");
  detail::require_radius(r1, "cap radius r1");
  detail::require_radius(d, "center distance");
  // First center at the pole, second at colatitude d in the x-z plane.
  const double cos_r0 = std::cos(r0);
  const double cos_r1 = std::cos(r1);
  const double sin_d = std::sin(d);
  const double cos_d = std::cos(d);
  return mc_area(
      [&](double z, double phi) {
        if (z < cos_r0) return false;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        return rho * std::cos(phi) * sin_d + z * cos_d >= cos_r1;
      },
      n_samples, seed);
}

}  // namespace spherecov
