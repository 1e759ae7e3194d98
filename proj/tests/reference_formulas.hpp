#pragma once

// Straightforward arccos/tan versions of the cap-intersection geometry,
// evaluated in long double. They are badly conditioned near branch boundaries
// but independent of the library's sin^2 forms, which is what a cross-check needs.

#include <algorithm>
#include <cmath>
#include <numbers>

namespace reference {

using real = long double;

inline constexpr real pi = std::numbers::pi_v<real>;

inline real cap_area_ld(real r) { return 2 * pi * (1 - std::cos(r)); }

/// Area of the cap of radius r beyond a chord at offset t from its center;
/// t < 0 puts the chord on the other side of the center.
inline real segment(real r, real t) {
  const real chord_half = std::acos(std::clamp(std::cos(r) / std::cos(t), real(-1), real(1)));
  const real angle = std::acos(std::clamp(std::tan(t) / std::tan(r), real(-1), real(1)));
  const real sector = 2 * angle * (1 - std::cos(r));
  const real triangle = 2 * std::atan(std::tan(chord_half / 2) * std::tan(t / 2));
  return sector - 2 * triangle;
}

inline real small_caps(real r0, real r1, real d) {
  if (r0 + r1 <= d) return 0;
  if (r1 <= r0 - d) return cap_area_ld(r1);
  if (r0 <= r1 - d) return cap_area_ld(r0);
  const real x = std::atan(std::tan(pi / 2 - d / 2) * (std::cos(r1) - std::cos(r0)) /
                           (std::cos(r0) + std::cos(r1)));
  return segment(r0, d / 2 + x) + segment(r1, d / 2 - x);
}

inline real intersection_ld(real r0, real r1, real d) {
  const bool big0 = r0 > pi / 2;
  const bool big1 = r1 > pi / 2;
  if (big0 && big1) {
    return cap_area_ld(r0) + cap_area_ld(r1) - 4 * pi + small_caps(pi - r0, pi - r1, d);
  }
  if (big0) return cap_area_ld(r1) - small_caps(pi - r0, r1, pi - d);
  if (big1) return cap_area_ld(r0) - small_caps(r0, pi - r1, pi - d);
  return small_caps(r0, r1, d);
}

inline double cap_area(double r) { return static_cast<double>(cap_area_ld(r)); }

inline double cap_intersection(double r0, double r1, double d) {
  return static_cast<double>(intersection_ld(r0, r1, d));
}

}  // namespace reference
