#include "ionaddr/wave_optics.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "fft.h"
#include "ionaddr/constants.h"
#include "ionaddr/error.h"
#include "numerics.h"

namespace ionaddr::wave {

using constants::deg_to_rad;
using constants::kPi;

namespace {

// A field has left the grid once more than kGuardPower of it sits in the
// outer kGuardFraction of the window on either side.
constexpr double kGuardFraction = 1.0 / 16.0;
constexpr double kGuardPower = 1e-4;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Spatial frequency of FFT bin k on an n-point grid.
double frequency(int k, int n, double pitch) {
  return (k < n / 2 ? k : k - n) / (n * pitch);
}

struct Moments {
  double power = 0.0;  // sum |E|^2 pitch^2
  double peak = 0.0;
  std::array<double, 2> centroid{};
  std::array<double, 2> variance{};
};

Moments moments(const ScalarField& f) {
  std::vector<double> mx(f.nx, 0.0), my(f.ny, 0.0);
  double peak = 0.0;
  for (int iy = 0; iy < f.ny; ++iy) {
    const std::complex<double>* row = &f.samples[static_cast<std::size_t>(iy) * f.nx];
    double row_sum = 0.0;
    for (int ix = 0; ix < f.nx; ++ix) {
      const double i = std::norm(row[ix]);
      mx[ix] += i;
      row_sum += i;
      peak = std::max(peak, i);
    }
    my[iy] = row_sum;
  }
  Moments m;
  m.peak = peak;
  double total = 0.0;
  for (double v : my) total += v;
  m.power = total * f.pitch * f.pitch;
  require(total > 0.0 && std::isfinite(total), ErrorKind::kInvalidInput,
          "field carries no power");
  const auto axis = [&](const std::vector<double>& w, auto coord, double& c, double& var) {
    double s1 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s1 += w[i] * coord(static_cast<int>(i));
    c = s1 / total;
    double s2 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = coord(static_cast<int>(i)) - c;
      s2 += w[i] * d * d;
    }
    var = s2 / total;
  };
  axis(mx, [&](int i) { return f.x(i); }, m.centroid[0], m.variance[0]);
  axis(my, [&](int i) { return f.y(i); }, m.centroid[1], m.variance[1]);
  return m;
}

ScalarField empty_like(const ScalarField& f) {
  ScalarField out;
  out.nx = f.nx;
  out.ny = f.ny;
  out.pitch = f.pitch;
  out.wavelength = f.wavelength;
  out.index = f.index;
  out.origin_x = f.origin_x;
  out.origin_y = f.origin_y;
  out.clipped_fraction = f.clipped_fraction;
  return out;
}

void require_inside_grid(const ScalarField& f, double x, double y, const char* what) {
  const double hx = 0.5 * f.nx * f.pitch, hy = 0.5 * f.ny * f.pitch;
  require(std::abs(x - f.origin_x) <= hx && std::abs(y - f.origin_y) <= hy,
          ErrorKind::kInvalidGeometry,
          fmt::format("{} center ({:.3f}, {:.3f}) um lies outside the grid", what, x * 1e6, y * 1e6));
}

double fit_axis(const ScalarField& f, bool along_x, int line, double center, double guess_radius,
                bool& ok) {
  const int n = along_x ? f.nx : f.ny;
  std::vector<double> t(n), v(n);
  double vmax = 0.0;
  for (int i = 0; i < n; ++i) {
    t[i] = (along_x ? f.x(i) : f.y(i)) * 1e6;
    v[i] = std::norm(along_x ? f.at(i, line) : f.at(line, i));
    vmax = std::max(vmax, v[i]);
  }
  if (!(vmax > 0.0)) {
    ok = false;
    return 0.0;
  }
  for (double& x : v) x /= vmax;
  const auto fit = numerics::fit_gaussian_1d(t, v, {1.0, center * 1e6, guess_radius * 1e6, false});
  ok = fit.converged;
  return 2.0 * fit.radius * 1e-6;
}

}  // namespace

void Grid::validate() const {
  require(is_power_of_two(nx) && nx >= 64 && is_power_of_two(ny) && ny >= 64,
          ErrorKind::kInvalidInput,
          fmt::format("grid dimensions must be powers of two >= 64, got {} x {}", nx, ny));
  require(pitch > 0.0 && std::isfinite(pitch), ErrorKind::kInvalidInput,
          fmt::format("grid pitch must be positive, got {}", pitch));
}

double ScalarField::power() const {
  double s = 0.0;
  for (const auto& e : samples) s += std::norm(e);
  return s * pitch * pitch;
}

void ScalarField::validate() const {
  Grid{nx, ny, pitch}.validate();
  require(samples.size() == static_cast<std::size_t>(nx) * ny, ErrorKind::kInvalidInput,
          "field sample count does not match its dimensions");
  require(wavelength > 0.0 && index >= 1.0, ErrorKind::kInvalidInput,
          "field wavelength must be positive and index >= 1");
  const double p = power();
  require(p > 0.0 && std::isfinite(p), ErrorKind::kInvalidInput,
          fmt::format("field power must be finite and positive, got {}", p));
}

ScalarField make_gaussian_field(const gauss::AstigmaticGaussian& beam, Tilt tilt, const Grid& grid,
                                double center_x, double center_y) {
  beam.validate();
  grid.validate();
  require(std::abs(tilt.x_deg) < 90.0 && std::abs(tilt.y_deg) < 90.0, ErrorKind::kInvalidInput,
          "source tilt must be below 90 degrees");

  const double wx = gauss::beam_radius_at(beam, gauss::Axis::kX, 0.0);
  const double wy = gauss::beam_radius_at(beam, gauss::Axis::kY, 0.0);
  const double needed_pitch = std::min(wx, wy) / 4.0;
  require(grid.pitch <= needed_pitch * (1.0 + 1e-12), ErrorKind::kSampling,
          fmt::format("grid pitch {:.4f} um under-resolves the beam (radius {:.4f} um); required "
                      "pitch <= {:.4f} um",
                      grid.pitch * 1e6, std::min(wx, wy) * 1e6, needed_pitch * 1e6));
  require(grid.nx * grid.pitch >= 8.0 * wx && grid.ny * grid.pitch >= 8.0 * wy, ErrorKind::kSampling,
          fmt::format("grid {:.2f} x {:.2f} um is narrower than 8 beam radii ({:.2f} x {:.2f} um)",
                      grid.nx * grid.pitch * 1e6, grid.ny * grid.pitch * 1e6, 8e6 * wx, 8e6 * wy));

  ScalarField f;
  f.nx = grid.nx;
  f.ny = grid.ny;
  f.pitch = grid.pitch;
  f.wavelength = beam.wavelength;
  f.index = beam.ambient_index;
  f.samples.resize(static_cast<std::size_t>(f.nx) * f.ny);
  require_inside_grid(f, center_x, center_y, "source");

  const double k = 2.0 * kPi * beam.ambient_index / beam.wavelength;
  // Per axis: amplitude exp(-u^2/w^2) and curvature phase k u^2 / (2 R).
  const auto profile = [&](gauss::Axis a, double w, double u) {
    const double zr = gauss::rayleigh_length(beam, a);
    const double dz = -beam.axis(a).waist_position;
    const double inv_r = dz / (dz * dz + zr * zr);
    return std::polar(std::exp(-u * u / (w * w)), 0.5 * k * u * u * inv_r);
  };
  const double sx = std::sin(deg_to_rad(tilt.x_deg)), sy = std::sin(deg_to_rad(tilt.y_deg));
  std::vector<std::complex<double>> ex(f.nx), ey(f.ny);
  for (int ix = 0; ix < f.nx; ++ix) {
    const double u = f.x(ix) - center_x;
    ex[ix] = profile(gauss::Axis::kX, wx, u) * std::polar(1.0, k * sx * u);
  }
  for (int iy = 0; iy < f.ny; ++iy) {
    const double u = f.y(iy) - center_y;
    ey[iy] = profile(gauss::Axis::kY, wy, u) * std::polar(1.0, k * sy * u);
  }
  for (int iy = 0; iy < f.ny; ++iy)
    for (int ix = 0; ix < f.nx; ++ix) f.at(ix, iy) = ex[ix] * ey[iy];

  const double scale = 1.0 / std::sqrt(f.power());
  for (auto& e : f.samples) e *= scale;
  return f;
}

SpectrumPropagator::SpectrumPropagator(const ScalarField& field, PropagationModel model)
    : spectrum_(field), model_(model) {
  field.validate();
  const int nx = field.nx, ny = field.ny;
  const double p = field.pitch;

  {
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        const double i = std::norm(field.at(ix, iy));
        total += i;
        sx += i * field.x(ix);
        sy += i * field.y(iy);
      }
    mean_position_ = {sx / total, sy / total};
  }

  fft::transform_2d(spectrum_.samples.data(), nx, ny, fft::Direction::kForward);

  // Mean direction tangent over the propagating part of the spectrum.
  const double n_over_lambda = field.index / field.wavelength;
  const double cutoff2 = n_over_lambda * n_over_lambda;
  double total = 0.0, tx = 0.0, ty = 0.0;
  for (int iy = 0; iy < ny; ++iy) {
    const double fy = frequency(iy, ny, p);
    for (int ix = 0; ix < nx; ++ix) {
      const double fx = frequency(ix, nx, p);
      const double f2 = fx * fx + fy * fy;
      if (f2 >= cutoff2) continue;
      const double i = std::norm(spectrum_.at(ix, iy));
      const double fz = model_ == PropagationModel::kExact ? std::sqrt(cutoff2 - f2) : n_over_lambda;
      total += i;
      tx += i * fx / fz;
      ty += i * fy / fz;
    }
  }
  mean_tangent_ = total > 0.0 ? std::array<double, 2>{tx / total, ty / total} : std::array<double, 2>{};
}

void SpectrumPropagator::check_field(const ScalarField& f, double z) const {
  const auto fail_at = [&](char axis, const std::string& why) {
    fail(ErrorKind::kPropagationWindow,
         fmt::format("beam leaves the {:.2f} x {:.2f} um grid in {} after {:.2f} um ({})", f.nx * f.pitch * 1e6,
                     f.ny * f.pitch * 1e6, axis, z * 1e6, why));
  };
  const std::array<double, 2> half{0.5 * f.nx * f.pitch, 0.5 * f.ny * f.pitch};
  const std::array<double, 2> origin{f.origin_x, f.origin_y};
  for (int a = 0; a < 2; ++a) {
    const double c = mean_position_[a] + z * mean_tangent_[a];
    if (std::abs(c - origin[a]) > half[a] * (1.0 - 2.0 * kGuardFraction))
      fail_at(a == 0 ? 'x' : 'y', fmt::format("centroid drifts to {:.2f} um", c * 1e6));
  }

  const int gx = std::max(1, static_cast<int>(f.nx * kGuardFraction));
  const int gy = std::max(1, static_cast<int>(f.ny * kGuardFraction));
  double total = 0.0, edge_x = 0.0, edge_y = 0.0;
  for (int iy = 0; iy < f.ny; ++iy) {
    const bool y_edge = iy < gy || iy >= f.ny - gy;
    for (int ix = 0; ix < f.nx; ++ix) {
      const double i = std::norm(f.at(ix, iy));
      total += i;
      if (ix < gx || ix >= f.nx - gx) edge_x += i;
      if (y_edge) edge_y += i;
    }
  }
  if (total <= 0.0) return;
  if (edge_x > kGuardPower * total)
    fail_at('x', fmt::format("{:.2e} of the power at the grid edge", edge_x / total));
  if (edge_y > kGuardPower * total)
    fail_at('y', fmt::format("{:.2e} of the power at the grid edge", edge_y / total));
}

void SpectrumPropagator::check_window(double from, double to) const {
  // Second moments are convex in z, so the ends of the range bound the
  // beam size; the centroid moves linearly.
  check_field(at(from), from);
  if (to != from) check_field(at(to), to);
}

ScalarField SpectrumPropagator::at(double distance) const {
  ScalarField out;
  at(distance, out);
  return out;
}

void SpectrumPropagator::at(double distance, ScalarField& out) const {
  require(std::isfinite(distance), ErrorKind::kInvalidInput, "propagation distance must be finite");
  auto samples = std::move(out.samples);
  out = empty_like(spectrum_);
  out.samples = std::move(samples);
  if (out.samples.size() == spectrum_.samples.size()) {
    std::copy(spectrum_.samples.begin(), spectrum_.samples.end(), out.samples.begin());
  } else {
    out.samples = spectrum_.samples;
  }
  const int nx = out.nx, ny = out.ny;
  const double p = out.pitch;
  const double n_over_lambda = out.index / out.wavelength;
  const double cutoff2 = n_over_lambda * n_over_lambda;
  const double scale = 1.0 / (static_cast<double>(nx) * ny);
  // The paraxial kernel factors into x and y parts; the 1/N of the inverse
  // transform rides along on the x factor.
  const double fresnel = kPi * out.wavelength / out.index * distance;
  std::vector<double> fx2(nx);
  for (int ix = 0; ix < nx; ++ix) fx2[ix] = frequency(ix, nx, p) * frequency(ix, nx, p);
  std::vector<std::complex<double>> kx;
  if (model_ == PropagationModel::kParaxial) {
    kx.resize(nx);
    for (int ix = 0; ix < nx; ++ix) kx[ix] = std::polar(scale, -fresnel * fx2[ix]);
  }
  const double carrier = 2.0 * kPi * n_over_lambda * distance;
  for (int iy = 0; iy < ny; ++iy) {
    const double fy = frequency(iy, ny, p);
    const double fy2 = fy * fy;
    const std::complex<double> ky = std::polar(1.0, carrier - fresnel * fy2);
    std::complex<double>* row = &out.at(0, iy);
    for (int ix = 0; ix < nx; ++ix) {
      const double f2 = fx2[ix] + fy2;
      if (f2 >= cutoff2) {
        // Evanescent: decays in either direction.
        row[ix] *= scale * std::exp(-2.0 * kPi * std::abs(distance) * std::sqrt(f2 - cutoff2));
      } else if (model_ == PropagationModel::kParaxial) {
        row[ix] *= kx[ix] * ky;
      } else {
        row[ix] *= std::polar(scale, 2.0 * kPi * distance * std::sqrt(cutoff2 - f2));
      }
    }
  }
  fft::transform_2d(out.samples.data(), nx, ny, fft::Direction::kInverse);
}

ScalarField angular_spectrum_propagate(const ScalarField& field, double distance,
                                       PropagationModel model) {
  SpectrumPropagator propagator(field, model);
  ScalarField out = propagator.at(distance);
  propagator.check_field(out, distance);
  return out;
}

void PhaseElement::validate() const {
  require(std::isfinite(offset_x) && std::isfinite(offset_y), ErrorKind::kInvalidInput,
          "element offset must be finite");
  std::visit(Overloaded{
                 [](const ThinLensPhase& e) {
                   require(e.focal_length != 0.0 && std::isfinite(e.focal_length),
                           ErrorKind::kInvalidInput, "lens focal length must be finite and nonzero");
                 },
                 [](const Wedge& e) {
                   require(std::abs(e.tilt_x_deg) < kMaxWedgeTiltDeg &&
                               std::abs(e.tilt_y_deg) < kMaxWedgeTiltDeg,
                           ErrorKind::kInvalidInput,
                           fmt::format("wedge tilt ({}, {}) deg exceeds the {} deg paraxial bound",
                                       e.tilt_x_deg, e.tilt_y_deg, kMaxWedgeTiltDeg));
                   require(e.index_step > 0.0, ErrorKind::kInvalidInput,
                           "wedge index step must be positive");
                 },
                 [](const RectAperture& e) {
                   require(e.width_x > 0.0 && e.width_y > 0.0, ErrorKind::kInvalidInput,
                           "rectangular aperture must have positive size");
                 },
                 [](const CircAperture& e) {
                   require(e.radius > 0.0, ErrorKind::kInvalidInput,
                           "circular aperture radius must be positive");
                 },
             },
             kind);
}

double wedge_apex_angle_deg(const Wedge& wedge, double ambient_index) {
  const double sx = std::sin(deg_to_rad(wedge.tilt_x_deg));
  const double sy = std::sin(deg_to_rad(wedge.tilt_y_deg));
  return constants::rad_to_deg(std::atan(ambient_index * std::hypot(sx, sy) / wedge.index_step));
}

ScalarField apply_element(const ScalarField& field, const PhaseElement& element,
                          double* element_clipped) {
  element.validate();
  ScalarField out = field;
  const double k = 2.0 * kPi * field.index / field.wavelength;
  const double ox = element.offset_x, oy = element.offset_y;
  double clipped = 0.0;

  const auto mask = [&](auto inside) {
    double before = 0.0, after = 0.0;
    bool any_inside = false;
    for (int iy = 0; iy < out.ny; ++iy)
      for (int ix = 0; ix < out.nx; ++ix) {
        auto& e = out.at(ix, iy);
        const double i = std::norm(e);
        before += i;
        if (inside(out.x(ix) - ox, out.y(iy) - oy)) {
          after += i;
          any_inside = true;
        } else {
          e = 0.0;
        }
      }
    require(any_inside, ErrorKind::kInvalidGeometry, "aperture lies entirely outside the grid");
    clipped = before > 0.0 ? 1.0 - after / before : 0.0;
  };

  std::visit(Overloaded{
                 [&](const ThinLensPhase& e) {
                   require_inside_grid(out, ox, oy, "lens");
                   const double a = -0.5 * k / e.focal_length;
                   std::vector<double> px(out.nx);
                   for (int ix = 0; ix < out.nx; ++ix) px[ix] = std::pow(out.x(ix) - ox, 2);
                   for (int iy = 0; iy < out.ny; ++iy) {
                     const double py = std::pow(out.y(iy) - oy, 2);
                     for (int ix = 0; ix < out.nx; ++ix) out.at(ix, iy) *= std::polar(1.0, a * (px[ix] + py));
                   }
                 },
                 [&](const Wedge& e) {
                   require_inside_grid(out, ox, oy, "wedge");
                   const double gx = k * std::sin(deg_to_rad(e.tilt_x_deg));
                   const double gy = k * std::sin(deg_to_rad(e.tilt_y_deg));
                   std::vector<std::complex<double>> rx(out.nx);
                   for (int ix = 0; ix < out.nx; ++ix) rx[ix] = std::polar(1.0, gx * (out.x(ix) - ox));
                   for (int iy = 0; iy < out.ny; ++iy) {
                     const auto ry = std::polar(1.0, gy * (out.y(iy) - oy));
                     for (int ix = 0; ix < out.nx; ++ix) out.at(ix, iy) *= rx[ix] * ry;
                   }
                 },
                 [&](const RectAperture& e) {
                   mask([&](double x, double y) {
                     return std::abs(x) <= 0.5 * e.width_x && std::abs(y) <= 0.5 * e.width_y;
                   });
                 },
                 [&](const CircAperture& e) {
                   const double r2 = e.radius * e.radius;
                   mask([&](double x, double y) { return x * x + y * y <= r2; });
                 },
             },
             element.kind);

  out.clipped_fraction = 1.0 - (1.0 - field.clipped_fraction) * (1.0 - clipped);
  if (element_clipped) *element_clipped = clipped;
  return out;
}

SpotMetrics spot_metrics(const ScalarField& field) {
  const Moments m = moments(field);
  SpotMetrics s;
  s.centroid = m.centroid;
  s.mfd_moment = {4.0 * std::sqrt(m.variance[0]), 4.0 * std::sqrt(m.variance[1])};
  s.peak_intensity = m.peak;
  s.power = m.power;
  s.clipped_fraction = field.clipped_fraction;

  const int iy = std::clamp(
      static_cast<int>(std::lround((m.centroid[1] - field.origin_y) / field.pitch)) + field.ny / 2, 0,
      field.ny - 1);
  const int ix = std::clamp(
      static_cast<int>(std::lround((m.centroid[0] - field.origin_x) / field.pitch)) + field.nx / 2, 0,
      field.nx - 1);
  bool ok_x = false, ok_y = false;
  const double fit_x = fit_axis(field, true, iy, m.centroid[0], 0.5 * s.mfd_moment[0], ok_x);
  const double fit_y = fit_axis(field, false, ix, m.centroid[1], 0.5 * s.mfd_moment[1], ok_y);
  s.mfd_fit = {ok_x ? fit_x : s.mfd_moment[0], ok_y ? fit_y : s.mfd_moment[1]};
  s.fit_failed = !(ok_x && ok_y);
  return s;
}

void FocusSearch::validate() const {
  require(z_min >= 0.0 && z_max > z_min, ErrorKind::kInvalidInput,
          fmt::format("focus search range must be ordered and non-negative, got [{}, {}]", z_min, z_max));
  require(steps >= 16, ErrorKind::kInvalidInput,
          fmt::format("focus search needs at least 16 steps, got {}", steps));
}

ScalarField propagate_stack(const ScalarField& source, std::span<const StackElement> elements,
                            PropagationModel model) {
  source.validate();
  ScalarField field = source;
  double z = 0.0;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const StackElement& e = elements[i];
    require(e.z >= z, ErrorKind::kInvalidGeometry,
            fmt::format("stack element {} at z = {:.3f} um precedes the previous one", i, e.z * 1e6));
    if (e.z > z) field = angular_spectrum_propagate(field, e.z - z, model);
    field = apply_element(field, e.element);
    if (e.clear_aperture)
      field = apply_element(field, {CircAperture{*e.clear_aperture}, e.element.offset_x,
                                    e.element.offset_y});
    z = e.z;
  }
  return field;
}

FocusResult scan_focus(const SpectrumPropagator& exit, const FocusSearch& search) {
  search.validate();
  FocusResult result;
  const double h = (search.z_max - search.z_min) / (search.steps - 1);
  std::vector<double> var_x;
  ScalarField field;
  for (int i = 0; i < search.steps; ++i) {
    const double z = search.z_min + i * h;
    exit.at(z, field);
    // The ends of the scan bound the beam over the whole range.
    if (i == 0 || i == search.steps - 1) exit.check_field(field, z);
    const Moments m = moments(field);
    var_x.push_back(m.variance[0]);
    result.axial_profile.push_back(
        {z, {4.0 * std::sqrt(m.variance[0]), 4.0 * std::sqrt(m.variance[1])}, m.centroid});
  }
  const auto best = std::min_element(var_x.begin(), var_x.end()) - var_x.begin();
  require(best > 0 && best < search.steps - 1, ErrorKind::kFocusNotBracketed,
          fmt::format("x-width minimum lies at the search boundary z = {:.2f} um of [{:.2f}, {:.2f}] um",
                      result.axial_profile[best].z * 1e6, search.z_min * 1e6, search.z_max * 1e6));
  const double a = var_x[best - 1], b = var_x[best], c = var_x[best + 1];
  const double den = a - 2.0 * b + c;
  const double shift = den > 0.0 ? 0.5 * (a - c) / den : 0.0;
  result.z_focus = result.axial_profile[best].z + shift * h;
  result.metrics = spot_metrics(exit.at(result.z_focus));
  return result;
}

FocusResult find_focus(const ScalarField& source, std::span<const StackElement> elements,
                       const FocusSearch& search, PropagationModel model) {
  const ScalarField exit_field = propagate_stack(source, elements, model);
  return scan_focus(SpectrumPropagator(exit_field, model), search);
}

}  // namespace ionaddr::wave
