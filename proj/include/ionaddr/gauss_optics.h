#pragma once

// Paraxial astigmatic Gaussian beams and ABCD element chains.
//
// Each transverse axis is carried independently through the complex beam
// parameter q = -waist_position + i z_R, with z_R = pi w0^2 n / lambda and
// waist_position measured from the current reference plane (positive means
// the waist lies downstream). Ray matrices use geometric angles, so a chain
// has determinant n_in / n_out and q transforms as (A q + B) / (C q + D).

#include <complex>
#include <span>
#include <variant>
#include <vector>

namespace ionaddr::gauss {

enum class Axis { kX, kY };

struct AxisBeam {
  double waist_radius = 0.0;    // w0, meters
  double waist_position = 0.0;  // meters, relative to the reference plane
};

struct AstigmaticGaussian {
  double wavelength = 0.0;  // vacuum, meters
  double ambient_index = 1.0;
  AxisBeam x;
  AxisBeam y;

  const AxisBeam& axis(Axis a) const { return a == Axis::kX ? x : y; }
  AxisBeam& axis(Axis a) { return a == Axis::kX ? x : y; }
  void validate() const;
};

struct FreeSpace {
  double length = 0.0;
  double index = 1.0;
};

struct ThinLens {
  double focal_length = 0.0;
};

struct FlatInterface {
  double n1 = 1.0;
  double n2 = 1.0;
};

using AbcdElement = std::variant<FreeSpace, ThinLens, FlatInterface>;

struct RayMatrix {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  double determinant() const { return a * d - b * c; }
  // this * rhs: rhs acts first.
  RayMatrix operator*(const RayMatrix& rhs) const;
};

void validate(const AbcdElement& element);
RayMatrix matrix_of(const AbcdElement& element);
// Product M_n ... M_1 for a chain traversed front to back.
RayMatrix compose(std::span<const AbcdElement> chain);
// Ambient index after traversing the chain from a medium of index n_in.
double exit_index(std::span<const AbcdElement> chain, double n_in);

AstigmaticGaussian beam_from_mfd(double mfd_x, double mfd_y, double wavelength, double index = 1.0);

double rayleigh_length(const AstigmaticGaussian& beam, Axis axis);

enum class NaConversion { kNaToWaist, kWaistToNa };

// Gaussian-beam NA: sine of the 1/e^2 far-field half angle, lambda / (pi w0).
double na_waist_conversion(double value, NaConversion direction, double wavelength);

std::complex<double> q_parameter(const AstigmaticGaussian& beam, Axis axis);
AxisBeam axis_beam_from_q(std::complex<double> q, double wavelength, double index);

// Applies a ray matrix to q; throws kSingularConfiguration when C q + D = 0.
std::complex<double> transform_q(const RayMatrix& m, std::complex<double> q);

AstigmaticGaussian propagate_abcd(const AstigmaticGaussian& beam, std::span<const AbcdElement> chain);

// 1/e^2 radius at axial distance z from the reference plane, in the beam's
// current medium.
double beam_radius_at(const AstigmaticGaussian& beam, Axis axis, double z);

// Image-waist / object-waist ratio.
double waist_ratio(const AstigmaticGaussian& object, const AstigmaticGaussian& image, Axis axis);

}  // namespace ionaddr::gauss
