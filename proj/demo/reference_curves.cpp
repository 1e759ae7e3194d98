// Writes the kernel and covariance curves of the linear-mu family for
// nu in {1/8, ..., 8} at range pi: 16-step kernels beside the smooth ones,
// and covariances built from 64-step kernels.
//
//   reference_curves [output_dir]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spherecov/spherecov.hpp"

using namespace spherecov;

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : ".";
  const std::vector<double> nus{0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

  std::ofstream kernels(dir / "kernels.csv");
  std::ofstream covariances(dir / "covariances.csv");
  if (!kernels || !covariances) {
    std::fprintf(stderr, "cannot write into %s\n", dir.string().c_str());
    return 3;
  }

  std::vector<StepKernel> steps;
  std::vector<TabulatedCovariance> tables;
  kernels << "h";
  covariances << "d";
  for (double nu : nus) {
    const SmoothKernelParams p{1.0, nu, pi};
    steps.push_back(discretize(p, 16));
    tables.push_back(tabulate(p, 64));
    kernels << ",smooth_nu" << nu << ",step_nu" << nu;
    covariances << ",nu" << nu;
  }
  kernels << '\n';
  covariances << '\n';

  constexpr int n_points = 1024;
  for (int i = 0; i < n_points; ++i) {
    const double h = static_cast<double>(i) / (n_points - 1);
    kernels << format_double(h);
    for (std::size_t k = 0; k < nus.size(); ++k) {
      kernels << ',' << format_double(smooth_kernel_value(h, 1.0, nus[k])) << ','
              << format_double(steps[k].value_at(h * steps[k].outer_radius()));
    }
    kernels << '\n';

    const double d = pi * h;
    covariances << format_double(d);
    for (const auto& t : tables) covariances << ',' << format_double(evaluate(t, d));
    covariances << '\n';
  }

  for (std::size_t k = 0; k < nus.size(); ++k) {
    std::printf("nu=%-6g C(pi/4)=%.6f C(pi/2)=%.6f C(3pi/4)=%.6f pieces=%zu\n", nus[k],
                evaluate(tables[k], pi / 4), evaluate(tables[k], pi / 2), evaluate(tables[k], 3 * pi / 4),
                tables[k].pieces().size());
  }
  std::printf("wrote %s and %s\n", (dir / "kernels.csv").string().c_str(),
              (dir / "covariances.csv").string().c_str());
  return 0;
}
