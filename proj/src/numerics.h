#pragma once

// Thin wrappers over GSL minimizers used by synthesis and spot metrology.

#include <functional>
#include <span>
#include <vector>

namespace ionaddr::numerics {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Nelder-Mead (GSL nmsimplex2). Stops when the simplex characteristic size
// drops below size_tolerance or the objective below value_tolerance.
SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                          std::vector<double> start, std::vector<double> step,
                          double size_tolerance, double value_tolerance, int max_iterations);

struct GaussianFit {
  double amplitude = 0.0;
  double center = 0.0;
  double radius = 0.0;  // 1/e^2 intensity radius
  bool converged = false;
};

// Least-squares fit of a * exp(-2 (t - c)^2 / r^2) to samples (t, y) by
// Levenberg-Marquardt, started from the given guess.
GaussianFit fit_gaussian_1d(std::span<const double> t, std::span<const double> y, GaussianFit guess);

}  // namespace ionaddr::numerics
