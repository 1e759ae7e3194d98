#pragma once

// Covariance of the process obtained by convolving white noise with a step
// kernel, its piecewise-cubic tabulation, and the nugget/sill model built on it.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "spherecov/error.hpp"
#include "spherecov/kernel.hpp"
#include "spherecov/sphere_geom.hpp"

namespace spherecov {

/// Evaluates sum_{j1, j2} b_j1 b_j2 I(r_j1, r_j2, d) for a fixed step kernel,
/// with the per-radius trigonometry computed once.
///
/// For kernels inside a hemisphere the inner sum over the smaller cap is split
/// by branch: contained caps come from a prefix sum, disjoint ones vanish, and
/// only the band of properly intersecting caps needs the lens formula.
class ConvolutionCovariance {
 public:
  explicit ConvolutionCovariance(const StepKernel& kernel) : b_(kernel.diffs()) {
    const auto& radii = kernel.radii();
    const std::size_t n = radii.size();
    caps_.reserve(n);
    r_.reserve(n);
    s_.reserve(n);
    cos_r_.reserve(n);
    contained_prefix_.assign(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto cap = detail::CapTrig::of(radii[j]);
      caps_.push_back(cap);
      r_.push_back(cap.r);
      s_.push_back(cap.s);
      cos_r_.push_back(cap.cos_r);
      contained_prefix_[j + 1] = contained_prefix_[j] + b_[j] * cap.area;
    }
    all_small_ = n == 0 || radii.back() <= half_pi;
  }

  /// Distance beyond which the covariance vanishes (twice the kernel radius).
  [[nodiscard]] double support() const { return r_.empty() ? 0.0 : 2.0 * r_.back(); }

  [[nodiscard]] double operator()(double d) const {
    detail::require_radius(d, "distance");
    if (r_.empty() || d >= support()) return 0.0;
    const auto lag = detail::LagTrig::of(d);
    const std::size_t n = r_.size();
    std::vector<double> lens(all_small_ ? n : 0);
    double total = 0.0;
    for (std::size_t j1 = 0; j1 < n; ++j1) {
      const double diag = detail::cap_intersection(caps_[j1], caps_[j1], lag);
      double off = 0.0;
      if (all_small_) {
        const double r0 = r_[j1];
        const auto first = r_.begin();
        const auto last = r_.begin() + static_cast<std::ptrdiff_t>(j1);
        const auto contained_end =
            std::partition_point(first, last, [&](double x) { return x <= r0 - d; });
        const auto band_begin = std::partition_point(
            contained_end, last, [&](double x) { return !(r0 + x > d && x > r0 - d); });
        off = contained_prefix_[static_cast<std::size_t>(contained_end - first)];
        const auto lo = static_cast<std::size_t>(band_begin - first);
        const double s0 = s_[j1];
        const double c0 = cos_r_[j1];
        for (std::size_t j2 = lo; j2 < j1; ++j2) {
          lens[j2] = detail::lens_area(s0, c0, s_[j2], cos_r_[j2], lag.sin_half, lag.cos_half);
        }
        for (std::size_t j2 = lo; j2 < j1; ++j2) off += b_[j2] * lens[j2];
      } else {
        for (std::size_t j2 = 0; j2 < j1; ++j2) {
          off += b_[j2] * detail::cap_intersection(caps_[j1], caps_[j2], lag);
        }
      }
      total += b_[j1] * (b_[j1] * diag + 2.0 * off);
    }
    return total;
  }

 private:
  std::vector<double> b_;
  std::vector<detail::CapTrig> caps_;
  std::vector<double> r_;
  std::vector<double> s_;
  std::vector<double> cos_r_;
  std::vector<double> contained_prefix_;  // sum_{i < j} b_i cap_area(r_i)
  bool all_small_ = true;
};

/// The raw double sum for any step kernel (normalized or not).
inline double kernel_convolution(const StepKernel& kernel, double d) {
  return ConvolutionCovariance(kernel)(d);
}

/// Covariance at distance d of the field generated by a normalized step kernel.
inline double covariance_at(const StepKernel& kernel, double d) {
  if (!kernel.is_normalized()) {
    throw contract_error("covariance_at requires a normalized kernel (squared norm " +
                         std::to_string(kernel.squared_norm()) + ")");
  }
  return kernel_convolution(kernel, d);
}

/// Cubic on [lo, hi] in the local variable t = d - lo.
struct CubicPiece {
  double lo = 0.0;
  double hi = 0.0;
  std::array<double, 4> coef{};

  [[nodiscard]] double operator()(double d) const {
    const double t = d - lo;
    return coef[0] + t * (coef[1] + t * (coef[2] + t * coef[3]));
  }
};

struct TabulationOptions {
  /// Chebyshev check points per piece; a piece is split until the cubic matches
  /// the closed form at all of them.
  std::size_t nodes_per_interval = 4;
  double tolerance = 1e-11;
  int max_depth = 48;
};

/// Piecewise-cubic table of a normalized convolution covariance on [0, pi].
/// Breakpoints are the distances where the closed form switches branch; each
/// breakpoint interval is covered by one or more cubic pieces.
class TabulatedCovariance {
 public:
  TabulatedCovariance() = default;

  TabulatedCovariance(SmoothKernelParams provenance, std::size_t n_steps, double support,
                      bool nonnegative, std::vector<double> breakpoints,
                      std::vector<CubicPiece> pieces)
      : provenance_(provenance),
        n_steps_(n_steps),
        support_(support),
        nonnegative_(nonnegative),
        breakpoints_(std::move(breakpoints)),
        pieces_(std::move(pieces)) {
    starts_.reserve(pieces_.size());
    for (const auto& p : pieces_) starts_.push_back(p.lo);
  }

  [[nodiscard]] double range() const { return provenance_.range; }
  [[nodiscard]] double mu() const { return provenance_.mu; }
  [[nodiscard]] double nu() const { return provenance_.nu; }
  [[nodiscard]] const SmoothKernelParams& provenance() const { return provenance_; }
  [[nodiscard]] std::size_t n_steps() const { return n_steps_; }
  [[nodiscard]] double support() const { return support_; }
  [[nodiscard]] bool nonnegative() const { return nonnegative_; }
  [[nodiscard]] const std::vector<double>& breakpoints() const { return breakpoints_; }
  [[nodiscard]] const std::vector<CubicPiece>& pieces() const { return pieces_; }

  /// Table value without range checks or clamping.
  [[nodiscard]] double raw(double d) const {
    if (d >= support_ || pieces_.empty()) return 0.0;
    auto it = std::upper_bound(starts_.begin(), starts_.end(), d);
    const auto idx = it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin()) - 1;
    return pieces_[idx](d);
  }

 private:
  SmoothKernelParams provenance_{std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(), 0.0};
  std::size_t n_steps_ = 0;
  double support_ = 0.0;
  bool nonnegative_ = true;
  std::vector<double> breakpoints_;
  std::vector<CubicPiece> pieces_;
  std::vector<double> starts_;
};

inline constexpr double overshoot_tolerance = 1e-9;

/// Tabulated covariance at distance d in [0, pi]. Exactly zero beyond the support.
inline double evaluate(const TabulatedCovariance& table, double d) {
  if (!(d >= 0.0 && d <= pi)) {
    throw input_error("distance must lie in [0, pi], got " + std::to_string(d));
  }
  if (d >= table.support()) return 0.0;
  const double v = table.raw(d);
  const double lower = table.nonnegative() ? 0.0 : -1.0;
  if (v > 1.0 + overshoot_tolerance || v < lower - overshoot_tolerance || !std::isfinite(v)) {
    throw tabulation_error("tabulated covariance " + std::to_string(v) + " at d = " +
                           std::to_string(d) + " is outside its admissible bounds");
  }
  return std::clamp(v, lower, 1.0);
}

namespace detail {

/// Distances where some I(r_i, r_j, d) changes branch, clipped to [0, end].
inline std::vector<double> branch_distances(const std::vector<double>& radii, double end) {
  std::vector<double> pts{0.0, end};
  for (std::size_t i = 0; i < radii.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      // Complemented caps switch at 2 pi - r_i - r_j as well.
      for (double v : {radii[i] + radii[j], radii[i] - radii[j], 2.0 * pi - radii[i] - radii[j]}) {
        if (v > 0.0 && v < end) pts.push_back(v);
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  out.reserve(pts.size());
  for (double v : pts) {
    if (out.empty() || v - out.back() > 1e-12) out.push_back(v);
  }
  if (out.back() != end) {
    if (end - out.back() <= 1e-12) out.pop_back();
    out.push_back(end);
  }
  return out;
}

/// Monomial coefficients (in t) of the cubic through (t_k, f_k), t_0 = 0.
inline std::array<double, 4> cubic_through(const std::array<double, 4>& t,
                                           const std::array<double, 4>& f) {
  const double d01 = (f[1] - f[0]) / (t[1] - t[0]);
  const double d12 = (f[2] - f[1]) / (t[2] - t[1]);
  const double d23 = (f[3] - f[2]) / (t[3] - t[2]);
  const double d012 = (d12 - d01) / (t[2] - t[0]);
  const double d123 = (d23 - d12) / (t[3] - t[1]);
  const double d0123 = (d123 - d012) / (t[3] - t[0]);
  return {f[0], d01 - d012 * t[1] + d0123 * t[1] * t[2], d012 - d0123 * (t[1] + t[2]), d0123};
}

template <class Fn>
void refine_piece(const Fn& cov, double a, double fa, double b, double fb, int depth,
                  const TabulationOptions& opt, std::vector<CubicPiece>& out) {
  const double w = b - a;
  const std::array<double, 4> t{0.0, 0.25 * w, 0.75 * w, w};
  const std::array<double, 4> f{fa, cov(a + t[1]), cov(a + t[2]), fb};
  CubicPiece piece{a, b, cubic_through(t, f)};
  double err = 0.0;
  const auto m = static_cast<double>(opt.nodes_per_interval);
  for (std::size_t k = 0; k < opt.nodes_per_interval; ++k) {
    const double x = a + 0.5 * w * (1.0 - std::cos((2.0 * static_cast<double>(k) + 1.0) * pi / (2.0 * m)));
    err = std::max(err, std::abs(piece(x) - cov(x)));
  }
  if (err <= opt.tolerance || depth >= opt.max_depth) {
    out.push_back(piece);
    return;
  }
  const double mid = a + 0.5 * w;
  const double fm = cov(mid);
  refine_piece(cov, a, fa, mid, fm, depth + 1, opt, out);
  refine_piece(cov, mid, fm, b, fb, depth + 1, opt, out);
}

}  // namespace detail

/// Tabulates the covariance of a normalized step kernel on [0, min(support, pi)].
inline TabulatedCovariance tabulate(const StepKernel& kernel, const TabulationOptions& opt,
                                    const SmoothKernelParams& provenance) {
  if (opt.nodes_per_interval < 4) throw input_error("tabulate needs nodes_per_interval >= 4");
  if (!kernel.is_normalized()) throw contract_error("tabulate requires a normalized kernel");
  const ConvolutionCovariance cov(kernel);
  const double end = std::min(cov.support(), pi);
  auto breakpoints = detail::branch_distances(kernel.radii(), end);
  std::vector<CubicPiece> pieces;
  double fa = cov(breakpoints.front());
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double fb = cov(breakpoints[i + 1]);
    detail::refine_piece(cov, breakpoints[i], fa, breakpoints[i + 1], fb, 0, opt, pieces);
    fa = fb;
  }
  const bool nonnegative = std::all_of(kernel.diffs().begin(), kernel.diffs().end(),
                                       [](double b) { return b >= 0.0; });
  return {provenance, kernel.size(), cov.support(), nonnegative, std::move(breakpoints),
          std::move(pieces)};
}

inline TabulatedCovariance tabulate(const StepKernel& kernel, std::size_t nodes_per_interval = 4) {
  TabulationOptions opt;
  opt.nodes_per_interval = nodes_per_interval;
  SmoothKernelParams unknown{std::numeric_limits<double>::quiet_NaN(),
                             std::numeric_limits<double>::quiet_NaN(),
                             2.0 * kernel.outer_radius()};
  return tabulate(kernel, opt, unknown);
}

/// Discretizes, normalizes and tabulates a smooth kernel.
inline TabulatedCovariance tabulate(const SmoothKernelParams& params, std::size_t n_steps,
                                    const TabulationOptions& opt = {}) {
  return tabulate(normalize(discretize(params, n_steps)), opt, params);
}

struct PsdReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool passed = false;
};

inline PsdReport gram_psd_report(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  PsdReport rep;
  rep.lambda_min = eig.eigenvalues().minCoeff();
  rep.lambda_max = eig.eigenvalues().maxCoeff();
  rep.passed = rep.lambda_min >= -1e-10 * rep.lambda_max;
  return rep;
}

/// Gram matrix of the tabulated covariance over the given points.
inline Eigen::MatrixXd gram_matrix(const TabulatedCovariance& table,
                                   const std::vector<UnitVec3>& points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = evaluate(table, 0.0);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = evaluate(table, spherical_distance(points[static_cast<std::size_t>(i)],
                                                          points[static_cast<std::size_t>(j)]));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

/// Extreme eigenvalues of the Gram matrix at n_points seeded uniform points.
inline PsdReport check_psd(const TabulatedCovariance& table, std::size_t n_points,
                           std::uint64_t seed) {
  if (n_points < 2) throw input_error("check_psd needs at least two points");
  std::mt19937_64 rng(seed);
  std::vector<UnitVec3> pts(n_points);
  for (auto& p : pts) p = random_unit_vector(rng);
  return gram_psd_report(gram_matrix(table, pts));
}

/// Nugget plus a scaled tabulated correlation.
struct CovarianceModel {
  double nugget = 0.0;
  double partial_sill = 1.0;
  TabulatedCovariance structure;

  [[nodiscard]] double sill() const { return nugget + partial_sill; }

  void validate() const {
    if (!(nugget >= 0.0) || !std::isfinite(nugget)) throw input_error("nugget must be >= 0");
    if (!(partial_sill > 0.0) || !std::isfinite(partial_sill)) {
      throw input_error("partial sill must be > 0");
    }
  }
};

inline double model_value(const CovarianceModel& m, double d) {
  const double c = m.partial_sill * evaluate(m.structure, d);
  return d == 0.0 ? m.nugget + c : c;
}

}  // namespace spherecov
