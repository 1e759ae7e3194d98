#pragma once

// Geostatistics on the sphere with convolution covariances: empirical
// variogram, weighted least-squares model fit, ordinary kriging and
// unconditional simulation from white noise on a quasi-uniform lattice.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spherecov/covariance.hpp"
#include "spherecov/error.hpp"
#include "spherecov/kernel.hpp"
#include "spherecov/nelder_mead.hpp"
#include "spherecov/sphere_geom.hpp"

namespace spherecov {

struct SampleSet {
  std::vector<UnitVec3> locations;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return locations.size(); }

  void validate() const {
    if (locations.empty()) throw input_error("sample set is empty");
    if (locations.size() != values.size()) {
      throw input_error("sample set has " + std::to_string(locations.size()) + " locations but " +
                        std::to_string(values.size()) + " values");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw input_error("sample values must be finite");
    }
  }
};

struct VariogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_distance = 0.0;
  double semivariance = 0.0;
  std::size_t count = 0;  // zero marks an empty bin
};

struct BinnedVariogram {
  std::vector<VariogramBin> bins;

  [[nodiscard]] std::size_t nonempty_bins() const {
    return static_cast<std::size_t>(
        std::count_if(bins.begin(), bins.end(), [](const VariogramBin& b) { return b.count > 0; }));
  }
};

/// Classical (Matheron) estimator on equal-width bins over [0, max_lag].
inline BinnedVariogram empirical_variogram(const SampleSet& s, std::size_t n_bins, double max_lag) {
  s.validate();
  if (s.size() < 2) throw input_error("variogram needs at least two samples");
  if (n_bins == 0) throw input_error("variogram needs at least one bin");
  if (!(max_lag > 0.0 && max_lag <= pi)) throw input_error("max_lag must lie in (0, pi]");
  const double width = max_lag / static_cast<double>(n_bins);
  std::vector<double> dist_sum(n_bins, 0.0);
  std::vector<double> sq_sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double d = spherical_distance(s.locations[i], s.locations[j]);
      if (d > max_lag) continue;
      const auto b = std::min(static_cast<std::size_t>(d / width), n_bins - 1);
      const double diff = s.values[i] - s.values[j];
      dist_sum[b] += d;
      sq_sum[b] += diff * diff;
      ++count[b];
    }
  }
  BinnedVariogram v;
  v.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = v.bins[b];
    bin.lo = width * static_cast<double>(b);
    bin.hi = b + 1 == n_bins ? max_lag : width * static_cast<double>(b + 1);
    bin.count = count[b];
    if (count[b] > 0) {
      const auto c = static_cast<double>(count[b]);
      bin.mean_distance = dist_sum[b] / c;
      bin.semivariance = 0.5 * sq_sum[b] / c;
    } else {
      bin.mean_distance = 0.5 * (bin.lo + bin.hi);
    }
  }
  return v;
}

/// The five quantities a fit adjusts.
struct ModelParams {
  double range = 1.0;
  double mu = 1.0;
  double nu = 1.0;
  double partial_sill = 1.0;
  double nugget = 0.0;

  [[nodiscard]] SmoothKernelParams kernel() const { return {mu, nu, range}; }
  [[nodiscard]] double sill() const { return partial_sill + nugget; }
};

struct FitBounds {
  double range_min = 1e-3;
  double range_max = 2.0 * pi;
  /// Shape bounds span the family from 1/8 to 8 used for the reference curves.
  double shape_min = 0.125;
  double shape_max = 8.0;
  /// Sill floor relative to the data scale; keeps log parameters finite.
  double sill_floor = 1e-10;
};

struct FitOptions {
  std::size_t n_steps = 64;  // step kernel resolution used for the model
  int restarts = 3;
  NelderMeadOptions simplex{};
  TabulationOptions tabulation{};
};

struct FitResult {
  ModelParams params;
  double objective = 0.0;
  std::size_t evaluations = 0;
  /// Best objective after every simplex iteration, restarts concatenated.
  std::vector<double> trace;
  CovarianceModel model;
};

/// Correlation of the discretized smooth kernel at the given distances.
inline std::vector<double> model_correlation(const SmoothKernelParams& kernel, std::size_t n_steps,
                                             std::span<const double> distances) {
  const ConvolutionCovariance cov(normalize(discretize(kernel, n_steps)));
  std::vector<double> out;
  out.reserve(distances.size());
  for (double d : distances) out.push_back(cov(d));
  return out;
}

/// Sum over bins of count * (observed - model semivariance)^2.
inline double wls_objective(const BinnedVariogram& v, const ModelParams& p, std::size_t n_steps) {
  std::vector<double> dist;
  for (const auto& b : v.bins) {
    if (b.count > 0) dist.push_back(b.mean_distance);
  }
  const auto corr = model_correlation(p.kernel(), n_steps, dist);
  double sum = 0.0;
  std::size_t k = 0;
  for (const auto& b : v.bins) {
    if (b.count == 0) continue;
    const double gamma = p.nugget + p.partial_sill * (1.0 - corr[k++]);
    const double r = b.semivariance - gamma;
    sum += static_cast<double>(b.count) * r * r;
  }
  return sum;
}

namespace detail {

/// Unconstrained coordinates: logit for the bounded range, logs for the rest.
class FitTransform {
 public:
  FitTransform(const FitBounds& bounds, double scale) : b_(bounds), floor_(bounds.sill_floor * scale) {}

  [[nodiscard]] std::array<double, 5> to_free(const ModelParams& p) const {
    const double u = std::clamp((p.range - b_.range_min) / (b_.range_max - b_.range_min), 1e-12,
                                1.0 - 1e-12);
    return {std::log(u / (1.0 - u)),
            std::log(std::clamp(p.mu, b_.shape_min, b_.shape_max)),
            std::log(std::clamp(p.nu, b_.shape_min, b_.shape_max)),
            std::log(std::max(p.partial_sill, floor_)),
            std::log(std::max(p.nugget, floor_))};
  }

  [[nodiscard]] ModelParams from_free(std::span<const double> x) const {
    ModelParams p;
    const double u = 1.0 / (1.0 + std::exp(-x[0]));
    p.range = std::clamp(b_.range_min + u * (b_.range_max - b_.range_min), b_.range_min, b_.range_max);
    p.mu = std::clamp(std::exp(x[1]), b_.shape_min, b_.shape_max);
    p.nu = std::clamp(std::exp(x[2]), b_.shape_min, b_.shape_max);
    p.partial_sill = std::max(std::exp(x[3]), floor_);
    p.nugget = std::max(std::exp(x[4]), floor_);
    return p;
  }

 private:
  FitBounds b_;
  double floor_;
};

}  // namespace detail

/// Data-driven starting point: range at half the maximum lag, linear shape,
/// 90% of the plateau as partial sill and the rest as nugget.
inline ModelParams default_initial_params(const BinnedVariogram& v) {
  double plateau = 0.0;
  std::size_t total = 0;
  for (const auto& b : v.bins) {
    plateau += static_cast<double>(b.count) * b.semivariance;
    total += b.count;
  }
  plateau = total > 0 ? plateau / static_cast<double>(total) : 0.0;
  ModelParams p;
  p.range = v.bins.empty() ? 1.0 : 0.5 * v.bins.back().hi;
  p.partial_sill = 0.9 * plateau;
  p.nugget = 0.1 * plateau;
  return p;
}

/// Weighted least-squares variogram fit by Nelder-Mead with restarts from the
/// incumbent. The returned model is tabulated at options.n_steps.
inline FitResult fit_wls(const BinnedVariogram& v, const ModelParams& init,
                         const FitBounds& bounds = {}, const FitOptions& options = {}) {
  if (v.nonempty_bins() == 0) throw fit_error("all variogram bins are empty");
  if (v.nonempty_bins() < 4) throw fit_error("fit needs at least 4 non-empty variogram bins");
  double scale = 0.0;
  for (const auto& b : v.bins) scale = std::max(scale, b.semivariance);
  scale = std::max({scale, init.sill(), 1e-300});
  const detail::FitTransform transform(bounds, scale);

  FitResult res;
  auto objective = [&](std::span<const double> x) {
    const double f = wls_objective(v, transform.from_free(x), options.n_steps);
    if (!std::isfinite(f)) throw fit_error("fit objective is not finite");
    return f;
  };

  const auto start = transform.to_free(init);
  std::vector<double> best(start.begin(), start.end());
  double best_value = objective(best);
  res.trace.push_back(best_value);
  for (int r = 0; r < std::max(options.restarts, 1); ++r) {
    auto nm = nelder_mead(objective, best, options.simplex);
    res.evaluations += nm.evaluations;
    for (double f : nm.best_trace) res.trace.push_back(std::min(f, res.trace.back()));
    if (nm.value < best_value) {
      best_value = nm.value;
      best = nm.x;
    }
  }
  res.params = transform.from_free(best);
  res.objective = best_value;
  res.model = CovarianceModel{res.params.nugget, res.params.partial_sill,
                              tabulate(res.params.kernel(), options.n_steps, options.tabulation)};
  return res;
}

enum class Assembly { automatic, dense, sparse };

inline constexpr std::size_t dense_assembly_limit = 2000;

struct KrigingPrediction {
  double value = 0.0;
  double variance = 0.0;
};

/// Ordinary kriging with one factorization of the sample covariance matrix.
/// With K regularized by 1e-12 sill on the diagonal, the bordered system
/// [K 1; 1' 0] is solved through K^-1 c and K^-1 1.
class OrdinaryKriging {
 public:
  OrdinaryKriging(CovarianceModel model, SampleSet samples, Assembly assembly = Assembly::automatic)
      : model_(std::move(model)), samples_(std::move(samples)) {
    model_.validate();
    samples_.validate();
    const std::size_t n = samples_.size();
    sparse_ = assembly == Assembly::sparse ||
              (assembly == Assembly::automatic && n > dense_assembly_limit);
    const double diag = model_.sill() + 1e-12 * model_.sill();
    const double support = model_.structure.support();
    const auto nn = static_cast<Eigen::Index>(n);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(nn);

    if (sparse_) {
      std::vector<Eigen::Triplet<double>> entries;
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        entries.emplace_back(ii, ii, diag);
        for (std::size_t j = 0; j < i; ++j) {
          const double d = spherical_distance(samples_.locations[i], samples_.locations[j]);
          if (d >= support) continue;
          const double c = model_.partial_sill * evaluate(model_.structure, d);
          const auto jj = static_cast<Eigen::Index>(j);
          entries.emplace_back(ii, jj, c);
          entries.emplace_back(jj, ii, c);
        }
      }
      Eigen::SparseMatrix<double> k(nn, nn);
      k.setFromTriplets(entries.begin(), entries.end());
      sparse_solver_.compute(k);
      if (sparse_solver_.info() != Eigen::Success) fail("sparse factorization failed");
      check_pivots(sparse_solver_.vectorD());
      ones_solved_ = sparse_solver_.solve(ones);
    } else {
      Eigen::MatrixXd k(nn, nn);
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        k(ii, ii) = diag;
        for (std::size_t j = 0; j < i; ++j) {
          const auto jj = static_cast<Eigen::Index>(j);
          const double d = spherical_distance(samples_.locations[i], samples_.locations[j]);
          k(ii, jj) = k(jj, ii) = d >= support ? 0.0 : model_.partial_sill * evaluate(model_.structure, d);
        }
      }
      dense_solver_.compute(k);
      if (dense_solver_.info() != Eigen::Success) fail("dense factorization failed");
      check_pivots(dense_solver_.vectorD());
      ones_solved_ = dense_solver_.solve(ones);
    }
    ones_dot_ = ones_solved_.sum();
    if (!(ones_dot_ > 0.0) || !std::isfinite(ones_dot_)) fail("covariance matrix is not positive definite");
  }

  [[nodiscard]] bool uses_sparse() const { return sparse_; }
  [[nodiscard]] const CovarianceModel& model() const { return model_; }

  /// Prediction and kriging variance at target; optionally returns the weights.
  KrigingPrediction predict(const UnitVec3& target, Eigen::VectorXd* weights = nullptr) const {
    const auto n = static_cast<Eigen::Index>(samples_.size());
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      c(i) = model_value(model_, spherical_distance(target, samples_.locations[static_cast<std::size_t>(i)]));
    }
    const Eigen::VectorXd c_solved = sparse_ ? Eigen::VectorXd(sparse_solver_.solve(c))
                                             : Eigen::VectorXd(dense_solver_.solve(c));
    const double lagrange = (c_solved.sum() - 1.0) / ones_dot_;
    const Eigen::VectorXd lambda = c_solved - lagrange * ones_solved_;
    const Eigen::Map<const Eigen::VectorXd> z(samples_.values.data(), n);
    KrigingPrediction out;
    out.value = lambda.dot(z);
    out.variance = model_.sill() - lambda.dot(c) - lagrange;
    if (weights) *weights = lambda;
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw solver_error("kriging system with " + std::to_string(samples_.size()) +
                       " samples (nugget " + std::to_string(model_.nugget) + ", partial sill " +
                       std::to_string(model_.partial_sill) + "): " + what);
  }

  template <class Diag>
  void check_pivots(const Diag& d) const {
    const double floor = 1e-14 * model_.sill();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(d(i) > floor)) {
        fail("pivot " + std::to_string(i) + " is " + std::to_string(d(i)) +
             "; duplicate or nearly duplicate locations without a nugget?");
      }
    }
  }

  CovarianceModel model_;
  SampleSet samples_;
  bool sparse_ = false;
  Eigen::LDLT<Eigen::MatrixXd> dense_solver_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> sparse_solver_;
  Eigen::VectorXd ones_solved_;
  double ones_dot_ = 0.0;
};

inline std::vector<KrigingPrediction> krige(const CovarianceModel& model, const SampleSet& samples,
                                            std::span<const UnitVec3> targets,
                                            Assembly assembly = Assembly::automatic) {
  const OrdinaryKriging ok(model, samples, assembly);
  std::vector<KrigingPrediction> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(ok.predict(t));
  return out;
}

/// Fibonacci-spiral nodes, each standing for a cell of area 4 pi / N.
class NoiseLattice {
 public:
  NoiseLattice(std::size_t n_nodes, std::uint64_t seed) : seed_(seed) {
    if (n_nodes < 100) throw input_error("noise lattice needs at least 100 nodes");
    nodes_.reserve(n_nodes);
    const double n = static_cast<double>(n_nodes);
    const double golden_angle = 2.0 * pi / (std::numbers::phi * std::numbers::phi);
    for (std::size_t i = 0; i < n_nodes; ++i) {
      const double ii = static_cast<double>(i);
      const double z = 1.0 - (2.0 * ii + 1.0) / n;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden_angle * ii;
      nodes_.push_back(UnitVec3::normalized(rho * std::cos(phi), rho * std::sin(phi), z));
    }
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const std::vector<UnitVec3>& nodes() const { return nodes_; }
  [[nodiscard]] double cell_weight() const { return sphere_area / static_cast<double>(nodes_.size()); }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  std::vector<UnitVec3> nodes_;
  std::uint64_t seed_;
};

/// Y(t) = sqrt(4 pi / N) sum_i k(dist(t, node_i)) xi_i with iid standard normal
/// xi. The kernel weights are computed once; realization r draws its noise from
/// a generator seeded by (lattice seed, r), so realizations are independent of
/// evaluation order.
class UnconditionalSimulator {
 public:
  UnconditionalSimulator(const StepKernel& kernel, const NoiseLattice& lattice,
                         std::span<const UnitVec3> targets)
      : n_nodes_(lattice.size()), seed_(lattice.seed()) {
    const double scale = std::sqrt(lattice.cell_weight());
    weights_.resize(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
      for (std::size_t i = 0; i < lattice.size(); ++i) {
        const double w = kernel.value_at(spherical_distance(targets[t], lattice.nodes()[i]));
        if (w != 0.0) weights_[t].push_back({static_cast<std::uint32_t>(i), scale * w});
      }
    }
  }

  [[nodiscard]] std::vector<double> noise(std::uint64_t realization) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(realization),
                      static_cast<std::uint32_t>(realization >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss;
    std::vector<double> xi(n_nodes_);
    for (double& x : xi) x = gauss(rng);
    return xi;
  }

  [[nodiscard]] std::vector<double> realization(std::uint64_t r) const {
    const auto xi = noise(r);
    std::vector<double> out(weights_.size(), 0.0);
    for (std::size_t t = 0; t < weights_.size(); ++t) {
      double sum = 0.0;
      for (const auto& [node, w] : weights_[t]) sum += w * xi[node];
      out[t] = sum;
    }
    return out;
  }

 private:
  struct Weight {
    std::uint32_t node;
    double value;
  };
  std::size_t n_nodes_;
  std::uint64_t seed_;
  std::vector<std::vector<Weight>> weights_;
};

/// One realization (index 0) of the unconditional field at the targets.
inline std::vector<double> simulate_unconditional(const StepKernel& kernel, const NoiseLattice& lattice,
                                                  std::span<const UnitVec3> targets) {
  return UnconditionalSimulator(kernel, lattice, targets).realization(0);
}

/// Seeded uniform points on the sphere.
inline std::vector<UnitVec3> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<UnitVec3> pts(n);
  for (auto& p : pts) p = random_unit_vector(rng);
  return pts;
}

/// Exact Gaussian draw of the model at the given points: Cholesky factor of the
/// model covariance matrix times iid standard normals.
inline std::vector<double> sample_gaussian_field(const CovarianceModel& model,
                                                 std::span<const UnitVec3> points, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = model.sill();
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = model_value(model, spherical_distance(points[static_cast<std::size_t>(i)],
                                                                points[static_cast<std::size_t>(j)]));
    }
  }
  k.diagonal().array() += 1e-12 * model.sill();
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw solver_error("model covariance matrix is not positive definite");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi(i) = gauss(rng);
  const Eigen::VectorXd y = llt.matrixL() * xi;
  return {y.data(), y.data() + n};
}

}  // namespace spherecov
