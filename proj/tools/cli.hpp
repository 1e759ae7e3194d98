#pragma once

// Command-line front end: tabulate, validate, fit, predict, simulate.
// Exit codes: 0 success, 1 validation failure, 2 usage or input error, 3 I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spherecov/spherecov.hpp"

namespace spherecov::cli {

enum ExitCode : int { ok = 0, validation_failed = 1, usage_error = 2, io_failure = 3 };

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  return out;
}

inline CovarianceModel load_model(const std::string& path) {
  auto in = open_input(path);
  return read_model(in);
}

inline SampleSet load_samples(const std::string& path) {
  auto in = open_input(path);
  const auto table = read_points(in, 1);
  if (table.header.size() < 3 || table.header[2] != "value") {
    throw input_error("'" + path + "': third column must be 'value'");
  }
  SampleSet s;
  for (const auto& r : table.rows) {
    s.locations.push_back(unit_vec_from_lonlat(r.lon_deg, r.lat_deg));
    s.values.push_back(r.values[0]);
  }
  return s;
}

inline std::vector<UnitVec3> to_unit_vectors(const PointTable& t) {
  std::vector<UnitVec3> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) out.push_back(unit_vec_from_lonlat(r.lon_deg, r.lat_deg));
  return out;
}

struct KernelArgs {
  double mu = 1.0;
  double nu = 1.0;
  double range = pi;
  std::size_t n_steps = 64;

  [[nodiscard]] SmoothKernelParams params() const { return {mu, nu, range}; }

  void add_to(CLI::App& app) {
    app.add_option("--mu", mu, "Kernel shape mu > 0")->capture_default_str();
    app.add_option("--nu", nu, "Kernel shape nu > 0")->capture_default_str();
    app.add_option("--range", range, "Covariance range in radians, (0, 2 pi]")->capture_default_str();
    app.add_option("--n-steps", n_steps, "Steps of the kernel step function")->capture_default_str();
  }
};

// ---------------------------------------------------------------- tabulate

struct TabulateArgs {
  KernelArgs kernel;
  std::size_t nodes_per_interval = 4;
  std::string out_path;
  std::string curve_path;  // empty: curve.csv next to out_path
};

inline int run_tabulate(const TabulateArgs& a, Streams io) {
  TabulationOptions opt;
  opt.nodes_per_interval = a.nodes_per_interval;
  const auto table = tabulate(a.kernel.params(), a.kernel.n_steps, opt);
  {
    auto out = open_output(a.out_path);
    write_table(out, table);
  }
  const auto curve_path = a.curve_path.empty()
                              ? (std::filesystem::path(a.out_path).parent_path() / "curve.csv").string()
                              : a.curve_path;
  {
    auto out = open_output(curve_path);
    write_curve_csv(out, table);
  }
  io.out << "breakpoints=" << table.breakpoints().size() << " pieces=" << table.pieces().size()
         << " support=" << format_double(table.support()) << '\n';
  return ok;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  KernelArgs kernel;
  std::uint64_t seed = 1;
  std::string model_path;  // validate this file instead of a fresh tabulation
  std::size_t oracle_steps = 4096;
  std::size_t oracle_grid = 32;
  std::size_t mc_triples = 10;
  std::size_t mc_samples = 10'000'000;
  std::size_t psd_configs = 5;
  std::size_t psd_points = 200;
  std::size_t audit_points = 100'000;
};

struct Check {
  std::string metric;
  double value;
  double tolerance;
  [[nodiscard]] bool passed() const { return value <= tolerance; }
};

inline int run_validate(const ValidateArgs& a, Streams io) {
  TabulatedCovariance table;
  SmoothKernelParams params = a.kernel.params();
  std::size_t n_steps = a.kernel.n_steps;
  if (!a.model_path.empty()) {
    table = load_model(a.model_path).structure;
    params = table.provenance();
    n_steps = table.n_steps();
    if (!std::isfinite(params.mu) || !std::isfinite(params.nu)) {
      throw input_error("model file lacks mu/nu provenance; cannot rebuild its kernel");
    }
  }
  params.validate();
  const auto kernel = normalize(discretize(params, n_steps));
  std::vector<Check> checks;

  // Tabulation against the closed form, plus the shape properties of the curve.
  if (a.model_path.empty()) table = tabulate(kernel);
  {
    const ConvolutionCovariance cov(kernel);
    std::mt19937_64 rng(a.seed);
    std::uniform_real_distribution<double> unit(0.0, pi);
    double worst = 0.0;
    try {
      for (std::size_t i = 0; i < a.audit_points; ++i) {
        const double d = unit(rng);
        worst = std::max(worst, std::abs(evaluate(table, d) - cov(d)));
      }
      for (double b : table.breakpoints()) worst = std::max(worst, std::abs(evaluate(table, b) - cov(b)));
    } catch (const tabulation_error& e) {
      io.err << "tabulation: " << e.what() << '\n';
      worst = HUGE_VAL;
    }
    checks.push_back({"tabulation_max_abs_error", worst, 1e-9});
    checks.push_back({"tabulation_c0_error", std::abs(table.raw(0.0) - 1.0), 1e-12});
    // Monotone kernels give nonincreasing covariances; allow interpolation noise.
    double rise = 0.0;
    if (table.nonnegative()) {
      const auto curve = sample_curve(table);
      for (std::size_t i = 1; i < curve.size(); ++i) rise = std::max(rise, curve[i].second - curve[i - 1].second);
    }
    checks.push_back({"tabulation_max_rise", rise, 1e-9});
  }

  // Step kernel at oracle resolution against quadrature of the smooth kernel.
  {
    const ConvolutionCovariance fine(normalize(discretize(params, a.oracle_steps)));
    std::vector<double> grid;
    for (std::size_t i = 0; i < a.oracle_grid; ++i) {
      grid.push_back(pi * static_cast<double>(i) / static_cast<double>(a.oracle_grid - 1));
    }
    const auto quad = quad_covariance_curve(params, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(fine(grid[i]) - quad[i]));
    checks.push_back({"quadrature_max_abs_diff", worst, 1e-3});
  }

  // Closed-form cap intersections against Monte Carlo.
  {
    std::mt19937_64 rng(a.seed + 1);
    std::uniform_real_distribution<double> unit(0.0, pi);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.mc_triples; ++i) {
      const double r0 = unit(rng);
      const double r1 = unit(rng);
      const double d = unit(rng);
      const auto mc = mc_cap_intersection(r0, r1, d, a.mc_samples, a.seed + 100 + i);
      worst = std::max(worst, std::abs(mc.estimate - cap_intersection_area(r0, r1, d)));
    }
    checks.push_back({"monte_carlo_max_abs_diff", worst, 5e-3});
  }

  // Gram matrices of the table at random points.
  {
    double worst = 0.0;
    for (std::size_t c = 0; c < a.psd_configs; ++c) {
      const auto rep = check_psd(table, a.psd_points, a.seed + 1000 + c);
      worst = std::max(worst, -rep.lambda_min / rep.lambda_max);
    }
    checks.push_back({"psd_min_relative_eigenvalue", worst, 1e-10});
  }

  bool all = true;
  for (const auto& c : checks) {
    io.out << c.metric << '=' << format_double(c.value) << " tolerance=" << format_double(c.tolerance)
           << (c.passed() ? " PASS" : " FAIL") << '\n';
    if (!c.passed()) {
      io.err << "validation failed: " << c.metric << " = " << format_double(c.value) << " exceeds "
             << format_double(c.tolerance) << '\n';
      all = false;
    }
  }
  return all ? ok : validation_failed;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data_path;
  std::string out_path;
  std::size_t n_bins = 16;
  double max_lag = pi;
  std::size_t n_steps = 64;
  std::optional<double> init_range, init_mu, init_nu, init_partial_sill, init_nugget;
};

inline int run_fit(const FitArgs& a, Streams io) {
  const auto samples = load_samples(a.data_path);
  if (samples.size() < 2) throw input_error("'" + a.data_path + "' needs at least two data rows");
  const auto vg = empirical_variogram(samples, a.n_bins, a.max_lag);
  auto init = default_initial_params(vg);
  if (a.init_range) init.range = *a.init_range;
  if (a.init_mu) init.mu = *a.init_mu;
  if (a.init_nu) init.nu = *a.init_nu;
  if (a.init_partial_sill) init.partial_sill = *a.init_partial_sill;
  if (a.init_nugget) init.nugget = *a.init_nugget;
  init.kernel().validate();

  const bool flat = std::all_of(vg.bins.begin(), vg.bins.end(),
                                [](const VariogramBin& b) { return b.semivariance == 0.0; });
  if (flat) io.err << "warning: data have no spatial variation; fitted sill and nugget are ~0\n";

  FitOptions opt;
  opt.n_steps = a.n_steps;
  const auto fit = fit_wls(vg, init, {}, opt);
  {
    auto out = open_output(a.out_path);
    write_model(out, fit.model);
  }
  const auto& p = fit.params;
  io.out << "range=" << format_double(p.range) << " mu=" << format_double(p.mu)
         << " nu=" << format_double(p.nu) << " sill=" << format_double(p.sill())
         << " partial_sill=" << format_double(p.partial_sill) << " nugget=" << format_double(p.nugget)
         << " objective=" << format_double(fit.objective) << '\n';
  return ok;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model_path;
  std::string data_path;
  std::string targets_path;
  std::string out_path;
};

inline int run_predict(const PredictArgs& a, Streams) {
  const auto model = load_model(a.model_path);
  const auto samples = load_samples(a.data_path);
  PointTable targets;
  {
    auto in = open_input(a.targets_path);
    targets = read_points(in, std::nullopt);
  }
  if (!targets.rows.empty()) {
    const OrdinaryKriging ok_system(model, samples);
    for (auto& row : targets.rows) {
      const auto pred = ok_system.predict(unit_vec_from_lonlat(row.lon_deg, row.lat_deg));
      row.values.push_back(pred.value);
      row.values.push_back(pred.variance);
    }
  }
  targets.header.emplace_back("pred");
  targets.header.emplace_back("var");
  auto out = open_output(a.out_path);
  write_points(out, targets);
  return ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  KernelArgs kernel;
  double sill = 1.0;
  std::string model_path;
  std::size_t n_nodes = 20000;
  std::size_t n_realizations = 1;
  std::uint64_t seed = 0;
  std::string targets_path;
  std::string out_path;
};

inline int run_simulate(const SimulateArgs& a, Streams) {
  if (a.n_nodes < 100) throw input_error("--n-nodes must be at least 100");
  SmoothKernelParams params = a.kernel.params();
  std::size_t n_steps = a.kernel.n_steps;
  double partial_sill = a.sill;
  double nugget = 0.0;
  if (!a.model_path.empty()) {
    const auto model = load_model(a.model_path);
    params = model.structure.provenance();
    n_steps = model.structure.n_steps();
    partial_sill = model.partial_sill;
    nugget = model.nugget;
  }
  params.validate();
  if (!(partial_sill >= 0.0) || !std::isfinite(partial_sill)) throw input_error("--sill must be >= 0");

  PointTable targets;
  {
    auto in = open_input(a.targets_path);
    targets = read_points(in, std::nullopt);
  }
  const auto points = to_unit_vectors(targets);
  const StepKernel raw = discretize(params, n_steps);
  // A zero sill or an all-zero kernel gives the zero field.
  const bool zero = partial_sill == 0.0 ||
                    std::all_of(raw.levels().begin(), raw.levels().end(), [](double v) { return v == 0.0; });
  const StepKernel kernel = zero ? raw.scaled(0.0) : normalize(raw).scaled(std::sqrt(partial_sill));
  const NoiseLattice lattice(a.n_nodes, a.seed);
  const UnconditionalSimulator sim(kernel, lattice, points);

  std::vector<std::vector<double>> columns;
  columns.reserve(a.n_realizations);
  for (std::size_t r = 0; r < a.n_realizations; ++r) {
    auto field = sim.realization(r);
    if (nugget > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(a.seed), static_cast<std::uint32_t>(a.seed >> 32),
                        static_cast<std::uint32_t>(r), 0x6e756767u};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> gauss(0.0, std::sqrt(nugget));
      for (double& v : field) v += gauss(rng);
    }
    columns.push_back(std::move(field));
  }

  auto out = open_output(a.out_path);
  out << "# seed=" << a.seed << '\n';
  out << "# n_nodes=" << a.n_nodes << '\n';
  out << "# mu=" << format_double(params.mu) << " nu=" << format_double(params.nu)
      << " range=" << format_double(params.range) << " n_steps=" << n_steps
      << " partial_sill=" << format_double(partial_sill) << " nugget=" << format_double(nugget) << '\n';
  PointTable result;
  result.header = {"lon_deg", "lat_deg"};
  for (std::size_t r = 0; r < a.n_realizations; ++r) result.header.push_back("r" + std::to_string(r));
  for (std::size_t t = 0; t < targets.rows.size(); ++t) {
    PointRecord rec{targets.rows[t].lon_deg, targets.rows[t].lat_deg, {}};
    for (const auto& col : columns) rec.values.push_back(col[t]);
    result.rows.push_back(std::move(rec));
  }
  write_points(out, result);
  return ok;
}

// ---------------------------------------------------------------- entry point

inline int cli_main(int argc, const char* const* argv, Streams io = {}) {
  CLI::App app{"Compactly supported convolution covariances on the sphere"};
  app.require_subcommand(1);

  TabulateArgs tab;
  auto* c_tab = app.add_subcommand("tabulate", "Tabulate the covariance of a kernel");
  tab.kernel.add_to(*c_tab);
  c_tab->add_option("--nodes-per-interval", tab.nodes_per_interval)->capture_default_str();
  c_tab->add_option("--out", tab.out_path, "Model file to write")->required();
  c_tab->add_option("--curve", tab.curve_path, "Curve CSV (default: curve.csv beside --out)");

  ValidateArgs val;
  auto* c_val = app.add_subcommand("validate", "Check closed forms against brute-force oracles");
  val.kernel.add_to(*c_val);
  c_val->add_option("--seed", val.seed)->capture_default_str();
  c_val->add_option("--model", val.model_path, "Validate an existing model file");
  c_val->add_option("--oracle-steps", val.oracle_steps)->capture_default_str();
  c_val->add_option("--oracle-grid", val.oracle_grid)->capture_default_str()->check(CLI::Range(2, 100000));
  c_val->add_option("--mc-triples", val.mc_triples)->capture_default_str();
  c_val->add_option("--mc-samples", val.mc_samples)->capture_default_str();
  c_val->add_option("--psd-configs", val.psd_configs)->capture_default_str();
  c_val->add_option("--psd-points", val.psd_points)->capture_default_str();
  c_val->add_option("--audit-points", val.audit_points)->capture_default_str();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a model to point data by weighted least squares");
  c_fit->add_option("--data", fit.data_path, "CSV lon_deg,lat_deg,value")->required();
  c_fit->add_option("--out", fit.out_path, "Model file to write")->required();
  c_fit->add_option("--n-bins", fit.n_bins)->capture_default_str();
  c_fit->add_option("--max-lag", fit.max_lag, "Largest lag in radians")->capture_default_str();
  c_fit->add_option("--n-steps", fit.n_steps)->capture_default_str();
  c_fit->add_option("--init-range", fit.init_range);
  c_fit->add_option("--init-mu", fit.init_mu);
  c_fit->add_option("--init-nu", fit.init_nu);
  c_fit->add_option("--init-partial-sill", fit.init_partial_sill);
  c_fit->add_option("--init-nugget", fit.init_nugget);

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Ordinary kriging at target locations");
  c_pred->add_option("--model", pred.model_path)->required();
  c_pred->add_option("--data", pred.data_path)->required();
  c_pred->add_option("--targets", pred.targets_path)->required();
  c_pred->add_option("--out", pred.out_path)->required();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Unconditional realizations at target locations");
  sim.kernel.add_to(*c_sim);
  c_sim->add_option("--sill", sim.sill, "Variance of the simulated field")->capture_default_str();
  c_sim->add_option("--model", sim.model_path, "Take kernel, sill and nugget from a model file");
  c_sim->add_option("--n-nodes", sim.n_nodes)->capture_default_str();
  c_sim->add_option("--n-realizations", sim.n_realizations)->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->required();
  c_sim->add_option("--targets", sim.targets_path)->required();
  c_sim->add_option("--out", sim.out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << '\n';
    return usage_error;
  }

  try {
    if (c_tab->parsed()) return run_tabulate(tab, io);
    if (c_val->parsed()) return run_validate(val, io);
    if (c_fit->parsed()) return run_fit(fit, io);
    if (c_pred->parsed()) return run_predict(pred, io);
    if (c_sim->parsed()) return run_simulate(sim, io);
  } catch (const io_error& e) {
    io.err << "error: " << e.what() << '\n';
    return io_failure;
  } catch (const tabulation_error& e) {
    io.err << "error: " << e.what() << '\n';
    return validation_failed;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return usage_error;
  }
  return usage_error;
}

}  // namespace spherecov::cli
