#pragma once

// Spherical trigonometry on the unit sphere and the exact area of the
// intersection of two spherical caps.
//
// All angles are in radians. Wherever a quantity can be written either with
// cos(angle) or with sin^2(angle / 2), the half-angle form is used: it keeps
// full relative precision for small angles.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "spherecov/error.hpp"

namespace spherecov {

inline constexpr double pi = std::numbers::pi;
inline constexpr double half_pi = std::numbers::pi / 2.0;
inline constexpr double sphere_area = 4.0 * std::numbers::pi;

/// A point on the unit sphere.
struct UnitVec3 {
  double x = 1.0;
  double y = 0.0;
  double z = 0.0;

  /// Projects (x, y, z) onto the unit sphere.
  static UnitVec3 normalized(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (!std::isfinite(n) || n == 0.0) {
      throw input_error("cannot normalize a zero or non-finite vector");
    }
    return {x / n, y / n, z / n};
  }

  [[nodiscard]] double dot(const UnitVec3& o) const { return x * o.x + y * o.y + z * o.z; }

  friend bool operator==(const UnitVec3&, const UnitVec3&) = default;
};

namespace detail {

inline double clamp_checked(double v, double lo, double hi) {
  assert(v > lo - 1e-9 && v < hi + 1e-9);
  return std::clamp(v, lo, hi);
}

inline double half_sin_sq(double angle) {
  const double s = std::sin(0.5 * angle);
  return s * s;
}

inline void require_radius(double r, const char* what) {
  if (!(r >= 0.0 && r <= pi)) {
    throw input_error(std::string(what) + " must lie in [0, pi], got " + std::to_string(r));
  }
}

}  // namespace detail

/// Geographic (degrees) to Cartesian. Longitude is wrapped, latitude must be in [-90, 90].
inline UnitVec3 unit_vec_from_lonlat(double lon_deg, double lat_deg) {
  if (!std::isfinite(lon_deg) || !std::isfinite(lat_deg)) {
    throw input_error("longitude/latitude must be finite");
  }
  if (lat_deg < -90.0 || lat_deg > 90.0) {
    throw input_error("latitude must lie in [-90, 90], got " + std::to_string(lat_deg));
  }
  constexpr double deg = pi / 180.0;
  const double lon = std::fmod(lon_deg, 360.0) * deg;
  const double lat = lat_deg * deg;
  const double c = std::cos(lat);
  return UnitVec3::normalized(c * std::cos(lon), c * std::sin(lon), std::sin(lat));
}

/// Great-circle distance, 2 asin(|q - p| / 2). Exact zero for identical points.
inline double spherical_distance(const UnitVec3& p, const UnitVec3& q) {
  const double dx = q.x - p.x;
  const double dy = q.y - p.y;
  const double dz = q.z - p.z;
  const double half_chord = 0.5 * std::sqrt(dx * dx + dy * dy + dz * dz);
  return 2.0 * std::asin(std::min(half_chord, 1.0));
}

/// Area of a spherical cap (disk) of angular radius r: 4 pi sin^2(r / 2).
inline double cap_area(double r) {
  detail::require_radius(r, "cap radius");
  return sphere_area * detail::half_sin_sq(r);
}

/// Signed area of a right spherical triangle with legs a and b.
/// A negative b yields a negative area, which is what the same-side-center
/// case of the cap intersection relies on.
inline double right_triangle_area(double a, double b) {
  return 2.0 * std::atan(std::tan(0.5 * a) * std::tan(0.5 * b));
}

/// Area of a circular sector of a cap with radius r and opening angle alpha.
inline double sector_area(double alpha, double r) {
  if (!(alpha >= 0.0 && alpha <= 2.0 * pi)) {
    throw input_error("sector angle must lie in [0, 2 pi], got " + std::to_string(alpha));
  }
  detail::require_radius(r, "sector radius");
  return 2.0 * alpha * detail::half_sin_sq(r);
}

/// Area of the circular segment cut from a cap of radius r by a great-circle chord.
/// alpha is the half opening angle at the cap center; (a, b) are the legs of the
/// right triangle (half chord, center-to-chord offset). b may be negative.
inline double segment_area(double alpha, double r, double a, double b) {
  return 2.0 * (sector_area(alpha, r) - right_triangle_area(a, b));
}

/// Offset x of the foot of the common chord of two intersecting caps from the
/// midpoint of their centers: the foot is at d/2 + x from the first center and
/// at d/2 - x from the second. Returns 0 when both radii are exactly pi/2.
inline double cap_split_offset(double r0, double r1, double d) {
  if (!(r0 > 0.0 && r0 <= half_pi && r1 > 0.0 && r1 <= half_pi)) {
    throw input_error("cap_split_offset needs radii in (0, pi/2]");
  }
  if (!(d > 0.0 && d <= pi)) {
    throw input_error("cap_split_offset needs a distance in (0, pi]");
  }
  if (r0 == half_pi && r1 == half_pi) return 0.0;
  const double h0 = std::sin(0.5 * r0);
  const double h1 = std::sin(0.5 * r1);
  // Factored so that equal radii give exactly zero even under FMA contraction.
  const double num = (h0 - h1) * (h0 + h1);
  const double den = 1.0 - (h0 * h0 + h1 * h1);
  // x = atan(cot(d/2) * num / den), with den >= 0 for radii <= pi/2.
  return std::atan2(num * std::cos(0.5 * d), den * std::sin(0.5 * d));
}

/// Half the length of the common chord (angle COD) from the right triangle with
/// hypotenuse r (cap radius) and leg t (center-to-chord offset).
inline double half_chord_angle(double r, double t) {
  const double num = std::sin(0.5 * (r - t)) * std::sin(0.5 * (r + t));
  const double den = 1.0 - 2.0 * detail::half_sin_sq(t);
  if (!(den > 0.0)) return r;
  const double q = std::max(num / den, 0.0);
  return std::min(2.0 * std::asin(std::min(std::sqrt(q), 1.0)), r);
}

/// Uniformly distributed point on the unit sphere.
template <class Rng>
UnitVec3 random_unit_vector(Rng& rng) {
  std::normal_distribution<double> g;
  while (true) {
    const double x = g(rng);
    const double y = g(rng);
    const double z = g(rng);
    const double n2 = x * x + y * y + z * z;
    if (n2 > 1e-24) return UnitVec3::normalized(x, y, z);
  }
}

namespace detail {

/// Trigonometric summary of a cap radius, computed once and reused across many
/// intersections.
struct CapTrig {
  double r = 0.0;
  double s = 0.0;      // sin^2(r / 2)
  double cos_r = 1.0;
  double area = 0.0;   // 4 pi s

  static CapTrig of(double r) {
    const double s = detail::half_sin_sq(r);
    return {r, s, std::cos(r), sphere_area * s};
  }

  /// The complementary cap (antipodal center, radius pi - r).
  [[nodiscard]] CapTrig complement() const {
    const double c = std::cos(0.5 * r);
    const double cc = c * c;
    return {pi - r, cc, -cos_r, sphere_area * cc};
  }
};

struct LagTrig {
  double d = 0.0;
  double sin_half = 0.0;
  double cos_half = 1.0;

  static LagTrig of(double d) { return {d, std::sin(0.5 * d), std::cos(0.5 * d)}; }

  [[nodiscard]] LagTrig complement() const { return {pi - d, cos_half, sin_half}; }
};

/// atan(x) for x in [0, 1]: Cephes-style rational approximation, about 1 ulp.
/// Written without branches or library calls so that loops over it vectorize.
inline double atan_unit_ratio(double num, double den) {
  constexpr double pio4 = 0.78539816339744830962;
  constexpr double pio4_lo = 3.061616997868382943e-17;
  const bool reduce = num > 0.66 * den;
  // atan(x) = pi/4 + atan((x - 1) / (x + 1)) above 0.66.
  const double xr = (reduce ? num - den : num) / (reduce ? num + den : (den > 0.0 ? den : 1.0));
  const double z = xr * xr;
  const double p =
      (((-8.750608600031904122785e-1 * z - 1.615753718733365076637e1) * z -
        7.500855792314704667340e1) * z - 1.228866684490136173410e2) * z -
      6.485021904942025371773e1;
  const double q =
      ((((z + 2.485846490142306297962e1) * z + 1.650270098316988542046e2) * z +
        4.328810604912902668951e2) * z + 4.853903996359136964868e2) * z +
      1.945506571482613964425e2;
  const double r = xr * (z * p / q) + xr;
  return reduce ? pio4 + (r + pio4_lo) : r;
}

/// Branch-free atan2 matching std::atan2 to about 1 ulp (signed zeros aside).
inline double atan2_poly(double y, double x) {
  constexpr double pio2_hi = 1.57079632679489661923;
  constexpr double pio2_lo = 6.123233995736765886130e-17;
  constexpr double pi_hi = 3.14159265358979323846;
  constexpr double pi_lo = 1.2246467991473532e-16;
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  double t = atan_unit_ratio(std::min(ax, ay), std::max(ax, ay));
  t = ay > ax ? (pio2_hi - t) + pio2_lo : t;
  t = x < 0.0 ? (pi_hi - t) + pi_lo : t;
  return std::copysign(t, y);
}

/// Lens area for properly intersecting caps, both radii <= pi/2 and
/// |r0 - r1| < d < r0 + r1. Takes s = sin^2(r/2), cos(r) of each cap and the
/// half-distance sine/cosine.
///
/// Every quantity after the split offset is derived from (half chord, offset)
/// of the two right triangles, so the sector and triangle parts describe the
/// same geometry even where the half chord itself is ill-conditioned.
/// Branch-free so that the covariance inner loop vectorizes.
inline double lens_area(double s0, double cos_r0, double s1, double cos_r1, double sin_half,
                        double cos_half) {
  // Split offset x: tan x = cot(d/2) (s0 - s1) / (1 - s0 - s1).
  const double n = (s0 - s1) * cos_half;
  const double m = 0.5 * (cos_r0 + cos_r1) * sin_half;
  const double h = std::sqrt(n * n + m * m);
  const bool split = h > 0.0;
  const double inv_h = 1.0 / (split ? h : 1.0);
  const double cos_x = split ? m * inv_h : 1.0;
  const double sin_x = split ? n * inv_h : 0.0;

  // Offsets of the chord foot C from the centers A and B.
  const double sin_a = sin_half * cos_x + cos_half * sin_x;
  const double cos_a = cos_half * cos_x - sin_half * sin_x;
  const double sin_b = sin_half * cos_x - cos_half * sin_x;
  const double cos_b = cos_half * cos_x + sin_half * sin_x;

  // Half chord from the triangle with the larger denominator cos(t).
  const bool first = cos_a >= cos_b;
  const double s_r = first ? s0 : s1;
  const double sin_t = first ? sin_a : sin_b;
  const double cos_t = first ? cos_a : cos_b;
  const double s_min = std::min(s0, s1);
  const double s_t = sin_t * sin_t / (2.0 * (1.0 + cos_t));
  const bool usable = cos_t > 0.0;
  const double q_raw = (s_r - s_t) / (usable ? cos_t : 1.0);
  const double q = usable ? std::min(std::max(q_raw, 0.0), s_min) : s_min;  // sin^2(COD/2)
  const double u = std::sqrt(q);
  const double v = std::sqrt(1.0 - q);
  const double sin_c = 2.0 * u * v;
  const double cos_c = 1.0 - 2.0 * q;

  // Spherical angles at the centers (tan A = tan COD / sin t).
  const double angle_a = atan2_poly(sin_c, cos_c * sin_a);
  const double angle_b = atan2_poly(sin_c, cos_c * sin_b);

  // atan(w ta) + atan(w tb) with w = tan(COD/2), ta = tan(AOC/2), tb = tan(BOC/2):
  // half the summed areas of the two right triangles. Both atan2 arguments are
  // scaled by v^2 (1 + cos_a)(1 + cos_b) > 0 to avoid divisions.
  const double pa = 1.0 + cos_a;
  const double pb = 1.0 + cos_b;
  const double half_triangles =
      atan2_poly(u * v * (sin_a * pb + sin_b * pa), v * v * pa * pb - q * sin_a * sin_b);

  return 4.0 * (angle_a * s0 + angle_b * s1) - 4.0 * half_triangles;
}

inline double lens_area(const CapTrig& c0, const CapTrig& c1, const LagTrig& lag) {
  return lens_area(c0.s, c0.cos_r, c1.s, c1.cos_r, lag.sin_half, lag.cos_half);
}

/// Intersection of caps with radii <= pi/2. Exact branch boundaries go to the
/// disjoint/containment branches.
inline double small_cap_intersection(const CapTrig& c0, const CapTrig& c1, const LagTrig& lag) {
  if (c0.r + c1.r <= lag.d) return 0.0;
  if (c1.r <= c0.r - lag.d) return c1.area;
  if (c0.r <= c1.r - lag.d) return c0.area;
  return lens_area(c0, c1, lag);
}

/// Intersection of caps with radii in [0, pi]; caps wider than a hemisphere are
/// replaced by their complements.
inline double cap_intersection(const CapTrig& c0, const CapTrig& c1, const LagTrig& lag) {
  const bool big0 = c0.r > half_pi;
  const bool big1 = c1.r > half_pi;
  double area;
  if (big0 && big1) {
    area = c0.area + c1.area - sphere_area +
           small_cap_intersection(c0.complement(), c1.complement(), lag);
  } else if (big0) {
    area = c1.area - small_cap_intersection(c0.complement(), c1, lag.complement());
  } else if (big1) {
    area = c0.area - small_cap_intersection(c0, c1.complement(), lag.complement());
  } else {
    area = small_cap_intersection(c0, c1, lag);
  }
  return std::clamp(area, 0.0, std::min(c0.area, c1.area));
}

}  // namespace detail

/// Area of the intersection of two caps with radii r0, r1 whose centers are d apart.
inline double cap_intersection_area(double r0, double r1, double d) {
  detail::require_radius(r0, "cap radius r0");
  detail::require_radius(r1, "cap radius r1");
  detail::require_radius(d, "center distance");
  return detail::cap_intersection(detail::CapTrig::of(r0), detail::CapTrig::of(r1),
                                  detail::LagTrig::of(d));
}

}  // namespace spherecov
