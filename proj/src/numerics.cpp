#include "numerics.h"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

namespace ionaddr::numerics {

namespace {

void quiet_gsl() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

VectorPtr make_vector(std::span<const double> values) {
  VectorPtr v(gsl_vector_alloc(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) gsl_vector_set(v.get(), i, values[i]);
  return v;
}

using Objective = std::function<double(std::span<const double>)>;

double simplex_trampoline(const gsl_vector* x, void* params) {
  const auto& f = *static_cast<const Objective*>(params);
  const double value = f({x->data, x->size});
  return std::isfinite(value) ? value : GSL_POSINF;
}

struct FitData {
  std::span<const double> t;
  std::span<const double> y;
};

int gaussian_residual(const gsl_vector* p, void* params, gsl_vector* r) {
  const auto& d = *static_cast<const FitData*>(params);
  const double a = gsl_vector_get(p, 0), c = gsl_vector_get(p, 1), w = gsl_vector_get(p, 2);
  for (std::size_t i = 0; i < d.t.size(); ++i) {
    const double u = (d.t[i] - c) / w;
    gsl_vector_set(r, i, a * std::exp(-2.0 * u * u) - d.y[i]);
  }
  return GSL_SUCCESS;
}

int gaussian_jacobian(const gsl_vector* p, void* params, gsl_matrix* j) {
  const auto& d = *static_cast<const FitData*>(params);
  const double a = gsl_vector_get(p, 0), c = gsl_vector_get(p, 1), w = gsl_vector_get(p, 2);
  for (std::size_t i = 0; i < d.t.size(); ++i) {
    const double u = (d.t[i] - c) / w;
    const double e = std::exp(-2.0 * u * u);
    gsl_matrix_set(j, i, 0, e);
    gsl_matrix_set(j, i, 1, a * e * 4.0 * u / w);
    gsl_matrix_set(j, i, 2, a * e * 4.0 * u * u / w);
  }
  return GSL_SUCCESS;
}

}  // namespace

SimplexResult nelder_mead(const Objective& objective, std::vector<double> start,
                          std::vector<double> step, double size_tolerance, double value_tolerance,
                          int max_iterations) {
  quiet_gsl();
  const std::size_t n = start.size();
  VectorPtr x = make_vector(start);
  VectorPtr s = make_vector(step);
  gsl_multimin_function fn{&simplex_trampoline, n, const_cast<Objective*>(&objective)};
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
      &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), s.get());

  SimplexResult result;
  for (int it = 1; it <= max_iterations; ++it) {
    result.iterations = it;
    if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
    if (solver->fval < value_tolerance ||
        gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver.get()), size_tolerance) ==
            GSL_SUCCESS) {
      result.converged = true;
      break;
    }
  }
  const gsl_vector* best = gsl_multimin_fminimizer_x(solver.get());
  result.x.assign(best->data, best->data + n);
  result.value = solver->fval;
  return result;
}

GaussianFit fit_gaussian_1d(std::span<const double> t, std::span<const double> y, GaussianFit guess) {
  quiet_gsl();
  GaussianFit out = guess;
  out.converged = false;
  if (t.size() != y.size() || t.size() < 4 || !(guess.radius > 0.0)) return out;

  FitData data{t, y};
  gsl_multifit_nlinear_fdf fdf{};
  fdf.f = &gaussian_residual;
  fdf.df = &gaussian_jacobian;
  fdf.n = t.size();
  fdf.p = 3;
  fdf.params = &data;

  gsl_multifit_nlinear_parameters params = gsl_multifit_nlinear_default_parameters();
  std::unique_ptr<gsl_multifit_nlinear_workspace, decltype(&gsl_multifit_nlinear_free)> work(
      gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &params, fdf.n, fdf.p),
      &gsl_multifit_nlinear_free);
  const double start[3] = {guess.amplitude, guess.center, guess.radius};
  VectorPtr p0 = make_vector(start);
  gsl_multifit_nlinear_init(p0.get(), &fdf, work.get());

  int info = 0;
  const int status = gsl_multifit_nlinear_driver(200, 1e-10, 1e-10, 1e-12, nullptr, nullptr, &info,
                                                 work.get());
  const gsl_vector* p = gsl_multifit_nlinear_position(work.get());
  out.amplitude = gsl_vector_get(p, 0);
  out.center = gsl_vector_get(p, 1);
  out.radius = std::abs(gsl_vector_get(p, 2));

  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  const double span = *hi - *lo;
  out.converged = status == GSL_SUCCESS && std::isfinite(out.radius) && out.amplitude > 0.0 &&
                  out.radius > 0.0 && out.radius < 0.5 * span && out.center >= *lo &&
                  out.center <= *hi;
  return out;
}

}  // namespace ionaddr::numerics
