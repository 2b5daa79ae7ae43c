#include "ionaddr/gauss_optics.h"

#include <cmath>
#include <fmt/format.h>

#include "ionaddr/constants.h"
#include "ionaddr/error.h"

namespace ionaddr::gauss {

using constants::kPi;

namespace {

constexpr double kIndexMatchTolerance = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* name) {
  require(v > 0.0 && std::isfinite(v), ErrorKind::kInvalidInput,
          fmt::format("{} must be positive and finite, got {}", name, v));
}

}  // namespace

RayMatrix RayMatrix::operator*(const RayMatrix& r) const {
  return {a * r.a + b * r.c, a * r.b + b * r.d, c * r.a + d * r.c, c * r.b + d * r.d};
}

void AstigmaticGaussian::validate() const {
  require_positive(wavelength, "wavelength");
  require_positive(x.waist_radius, "waist radius (x)");
  require_positive(y.waist_radius, "waist radius (y)");
  require(ambient_index >= 1.0, ErrorKind::kInvalidInput,
          fmt::format("ambient index must be >= 1, got {}", ambient_index));
  require(std::isfinite(x.waist_position) && std::isfinite(y.waist_position),
          ErrorKind::kInvalidInput, "waist positions must be finite");
}

void validate(const AbcdElement& element) {
  std::visit(Overloaded{
                 [](const FreeSpace& e) {
                   require(e.length >= 0.0 && std::isfinite(e.length), ErrorKind::kInvalidInput,
                           fmt::format("free-space length must be >= 0, got {}", e.length));
                   require(e.index >= 1.0, ErrorKind::kInvalidInput,
                           fmt::format("free-space index must be >= 1, got {}", e.index));
                 },
                 [](const ThinLens& e) {
                   require(e.focal_length != 0.0 && std::isfinite(e.focal_length),
                           ErrorKind::kInvalidInput, "thin-lens focal length must be finite and nonzero");
                 },
                 [](const FlatInterface& e) {
                   require(e.n1 >= 1.0 && e.n2 >= 1.0, ErrorKind::kInvalidInput,
                           fmt::format("interface indices must be >= 1, got {} / {}", e.n1, e.n2));
                 },
             },
             element);
}

RayMatrix matrix_of(const AbcdElement& element) {
  validate(element);
  return std::visit(Overloaded{
                        [](const FreeSpace& e) { return RayMatrix{1.0, e.length, 0.0, 1.0}; },
                        [](const ThinLens& e) { return RayMatrix{1.0, 0.0, -1.0 / e.focal_length, 1.0}; },
                        [](const FlatInterface& e) { return RayMatrix{1.0, 0.0, 0.0, e.n1 / e.n2}; },
                    },
                    element);
}

RayMatrix compose(std::span<const AbcdElement> chain) {
  RayMatrix total;
  for (const auto& e : chain) total = matrix_of(e) * total;
  return total;
}

double exit_index(std::span<const AbcdElement> chain, double n_in) {
  double n = n_in;
  for (const auto& e : chain) {
    if (const auto* free = std::get_if<FreeSpace>(&e)) {
      require(std::abs(free->index - n) <= kIndexMatchTolerance, ErrorKind::kInvalidInput,
              fmt::format("free-space index {} does not match the current medium {}; insert a "
                          "flat_interface",
                          free->index, n));
    } else if (const auto* iface = std::get_if<FlatInterface>(&e)) {
      require(std::abs(iface->n1 - n) <= kIndexMatchTolerance, ErrorKind::kInvalidInput,
              fmt::format("interface n1 {} does not match the current medium {}", iface->n1, n));
      n = iface->n2;
    }
  }
  return n;
}

AstigmaticGaussian beam_from_mfd(double mfd_x, double mfd_y, double wavelength, double index) {
  require_positive(mfd_x, "mfd_x");
  require_positive(mfd_y, "mfd_y");
  require_positive(wavelength, "wavelength");
  require_positive(index, "index");
  AstigmaticGaussian beam{wavelength, index, {mfd_x / 2.0, 0.0}, {mfd_y / 2.0, 0.0}};
  beam.validate();
  return beam;
}

double rayleigh_length(const AstigmaticGaussian& beam, Axis axis) {
  const double w0 = beam.axis(axis).waist_radius;
  return kPi * w0 * w0 * beam.ambient_index / beam.wavelength;
}

double na_waist_conversion(double value, NaConversion direction, double wavelength) {
  require_positive(value, "value");
  require_positive(wavelength, "wavelength");
  if (direction == NaConversion::kNaToWaist) {
    require(value < 1.0, ErrorKind::kInvalidInput,
            fmt::format("numerical aperture must be < 1, got {}", value));
    return wavelength / (kPi * value);
  }
  const double na = wavelength / (kPi * value);
  require(na < 1.0, ErrorKind::kInvalidInput,
          fmt::format("waist {} m implies NA {} >= 1 at wavelength {} m", value, na, wavelength));
  return na;
}

std::complex<double> q_parameter(const AstigmaticGaussian& beam, Axis axis) {
  return {-beam.axis(axis).waist_position, rayleigh_length(beam, axis)};
}

AxisBeam axis_beam_from_q(std::complex<double> q, double wavelength, double index) {
  require(q.imag() > 0.0, ErrorKind::kSingularConfiguration,
          fmt::format("beam parameter has non-positive Rayleigh range ({})", q.imag()));
  return {std::sqrt(q.imag() * wavelength / (kPi * index)), -q.real()};
}

std::complex<double> transform_q(const RayMatrix& m, std::complex<double> q) {
  const std::complex<double> den = m.c * q + m.d;
  require(std::abs(den) > 1e-300, ErrorKind::kSingularConfiguration,
          "degenerate ABCD transform: C q + D = 0");
  return (m.a * q + m.b) / den;
}

AstigmaticGaussian propagate_abcd(const AstigmaticGaussian& beam, std::span<const AbcdElement> chain) {
  beam.validate();
  const double n_out = exit_index(chain, beam.ambient_index);
  const RayMatrix m = compose(chain);
  AstigmaticGaussian out = beam;
  out.ambient_index = n_out;
  for (Axis a : {Axis::kX, Axis::kY})
    out.axis(a) = axis_beam_from_q(transform_q(m, q_parameter(beam, a)), beam.wavelength, n_out);
  return out;
}

double beam_radius_at(const AstigmaticGaussian& beam, Axis axis, double z) {
  const double zr = rayleigh_length(beam, axis);
  const double dz = z - beam.axis(axis).waist_position;
  return beam.axis(axis).waist_radius * std::sqrt(1.0 + (dz / zr) * (dz / zr));
}

double waist_ratio(const AstigmaticGaussian& object, const AstigmaticGaussian& image, Axis axis) {
  return image.axis(axis).waist_radius / object.axis(axis).waist_radius;
}

}  // namespace ionaddr::gauss
