#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace spherecov {

struct NelderMeadOptions {
  double initial_step = 0.5;
  std::size_t max_iterations = 600;
  /// Stop once the spread of simplex values and the simplex diameter are both below these.
  double f_tolerance = 1e-14;
  double x_tolerance = 1e-10;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  /// Best value after each iteration; nonincreasing.
  std::vector<double> best_trace;
};

/// Unconstrained derivative-free minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). NaN values rank last.
template <class Objective>
NelderMeadResult nelder_mead(Objective&& f, std::span<const double> start,
                             const NelderMeadOptions& opt = {}) {
  const std::size_t dim = start.size();
  if (dim == 0) throw std::invalid_argument("nelder_mead needs at least one variable");
  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(std::span<const double>(x));
    return std::isnan(v) ? HUGE_VAL : v;
  };

  std::vector<std::vector<double>> pts(dim + 1, std::vector<double>(start.begin(), start.end()));
  for (std::size_t i = 0; i < dim; ++i) pts[i + 1][i] += opt.initial_step;
  std::vector<double> vals(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim);
  auto along = [&](const std::vector<double>& from, double t) {
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < dim; ++k) x[k] = centroid[k] + t * (from[k] - centroid[k]);
    return x;
  };

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[dim - 1];

    double diameter = 0.0;
    for (const auto& p : pts) {
      for (std::size_t k = 0; k < dim; ++k) diameter = std::max(diameter, std::abs(p[k] - pts[best][k]));
    }
    if (vals[worst] - vals[best] <= opt.f_tolerance && diameter <= opt.x_tolerance) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < dim; ++k) centroid[k] += pts[i][k] / static_cast<double>(dim);
    }

    auto reflected = along(pts[worst], -1.0);
    const double f_r = eval(reflected);
    if (f_r < vals[best]) {
      auto expanded = along(pts[worst], -2.0);
      const double f_e = eval(expanded);
      if (f_e < f_r) {
        pts[worst] = std::move(expanded);
        vals[worst] = f_e;
      } else {
        pts[worst] = std::move(reflected);
        vals[worst] = f_r;
      }
    } else if (f_r < vals[second_worst]) {
      pts[worst] = std::move(reflected);
      vals[worst] = f_r;
    } else {
      const bool outside = f_r < vals[worst];
      auto contracted = along(pts[worst], outside ? -0.5 : 0.5);
      const double f_c = eval(contracted);
      if (f_c < (outside ? f_r : vals[worst])) {
        pts[worst] = std::move(contracted);
        vals[worst] = f_c;
      } else {
        for (std::size_t i = 0; i <= dim; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < dim; ++k) {
            pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
          }
          vals[i] = eval(pts[i]);
        }
      }
    }
    res.best_trace.push_back(*std::min_element(vals.begin(), vals.end()));
  }
  const auto best_it = std::min_element(vals.begin(), vals.end());
  res.value = *best_it;
  res.x = pts[static_cast<std::size_t>(best_it - vals.begin())];
  return res;
}

}  // namespace spherecov
