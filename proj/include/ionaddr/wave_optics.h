#pragma once

// Scalar diffraction on uniform 2D grids.
//
// Samples are stored y-major (index iy * nx + ix); pixel ix sits at
// x = origin_x + (ix - nx/2) * pitch, and likewise in y. Field amplitudes are
// normalized so that sum |E|^2 * pitch^2 is the carried power.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "ionaddr/gauss_optics.h"

namespace ionaddr::wave {

template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    const std::size_t bytes = (n * sizeof(T) + kAlignment - 1) / kAlignment * kAlignment;
    if (void* p = std::aligned_alloc(kAlignment, bytes)) return static_cast<T*>(p);
    throw std::bad_alloc();
  }
  void deallocate(T* p, std::size_t) { std::free(p); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using ComplexBuffer = std::vector<std::complex<double>, AlignedAllocator<std::complex<double>>>;

struct Grid {
  int nx = 2048;
  int ny = 1024;
  double pitch = 0.2e-6;

  void validate() const;
};

struct ScalarField {
  int nx = 0;
  int ny = 0;
  double pitch = 0.0;
  double wavelength = 0.0;  // vacuum
  double index = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  // Fraction of the source power removed by apertures so far.
  double clipped_fraction = 0.0;
  ComplexBuffer samples;

  double x(int ix) const { return origin_x + (ix - nx / 2) * pitch; }
  double y(int iy) const { return origin_y + (iy - ny / 2) * pitch; }
  std::complex<double>& at(int ix, int iy) { return samples[static_cast<std::size_t>(iy) * nx + ix]; }
  const std::complex<double>& at(int ix, int iy) const {
    return samples[static_cast<std::size_t>(iy) * nx + ix];
  }
  double power() const;
  void validate() const;
};

enum class PropagationModel {
  kExact,     // full angular-spectrum transfer function
  kParaxial,  // Fresnel transfer function
};

struct Tilt {
  double x_deg = 0.0;
  double y_deg = 0.0;
};

// Tilted astigmatic Gaussian centered at (center_x, center_y), evaluated at
// the beam's reference plane and normalized to unit power. Throws kSampling
// when the grid under-resolves or under-covers the beam.
ScalarField make_gaussian_field(const gauss::AstigmaticGaussian& beam, Tilt tilt, const Grid& grid,
                                double center_x = 0.0, double center_y = 0.0);

// Angular-spectrum propagation over `distance` in the field's medium;
// evanescent components decay. Throws kPropagationWindow when the beam
// leaves the grid.
ScalarField angular_spectrum_propagate(const ScalarField& field, double distance,
                                       PropagationModel model = PropagationModel::kExact);

// Holds the spectrum of one plane so repeated propagation to many distances
// costs one inverse FFT each.
class SpectrumPropagator {
 public:
  SpectrumPropagator(const ScalarField& field, PropagationModel model);

  ScalarField at(double distance) const;
  // Same, reusing the storage of `out`.
  void at(double distance, ScalarField& out) const;
  // Throws kPropagationWindow if the beam leaves the grid anywhere between
  // the two distances.
  void check_window(double from, double to) const;
  // Same test on a field already propagated by `distance`.
  void check_field(const ScalarField& field, double distance) const;

 private:
  ScalarField spectrum_;  // samples hold the FFT of the field
  PropagationModel model_;
  std::array<double, 2> mean_position_{}, mean_tangent_{};
};

struct ThinLensPhase {
  double focal_length = 0.0;
};

// Linear phase ramp adding the given deflection (sines of the angles scale
// with the ambient index). index_step is the material contrast used to
// describe the physical prism; it does not change the ramp.
struct Wedge {
  double tilt_x_deg = 0.0;
  double tilt_y_deg = 0.0;
  double index_step = 0.52;
};

struct RectAperture {
  double width_x = 0.0;
  double width_y = 0.0;
};

struct CircAperture {
  double radius = 0.0;
};

inline constexpr double kMaxWedgeTiltDeg = 30.0;

struct PhaseElement {
  std::variant<ThinLensPhase, Wedge, RectAperture, CircAperture> kind;
  double offset_x = 0.0;
  double offset_y = 0.0;

  void validate() const;
};

// Apex angle of a thin prism with the wedge's index step producing its
// deflection, in degrees.
double wedge_apex_angle_deg(const Wedge& wedge, double ambient_index);

// Applies one element. Apertures update field.clipped_fraction; the fraction
// removed by this element alone is written to element_clipped when given.
ScalarField apply_element(const ScalarField& field, const PhaseElement& element,
                          double* element_clipped = nullptr);

// Element at axial position z (measured from the source plane). A lens with
// a clear aperture is a lens phase followed by a circular stop of that radius.
struct StackElement {
  double z = 0.0;
  PhaseElement element;
  std::optional<double> clear_aperture;
};

struct SpotMetrics {
  std::array<double, 2> centroid{};
  std::array<double, 2> mfd_moment{};  // 4 sigma
  std::array<double, 2> mfd_fit{};     // 2 w from 1D Gaussian fits through the centroid
  double peak_intensity = 0.0;
  double power = 0.0;
  double clipped_fraction = 0.0;
  bool fit_failed = false;
};

SpotMetrics spot_metrics(const ScalarField& field);

struct FocusSearch {
  double z_min = 150e-6;
  double z_max = 200e-6;
  int steps = 26;

  void validate() const;
};

struct AxialSample {
  double z = 0.0;  // from the last element
  std::array<double, 2> mfd_moment{};
  std::array<double, 2> centroid{};
};

struct FocusResult {
  double z_focus = 0.0;  // from the last element
  SpotMetrics metrics;
  std::vector<AxialSample> axial_profile;
};

// Field just after the last element, with the elements applied in order
// and free-space propagation between them.
ScalarField propagate_stack(const ScalarField& source, std::span<const StackElement> elements,
                            PropagationModel model = PropagationModel::kExact);

// Scans the x-moment width over the search range after the plane held by
// `exit`, then refines the minimum with a three-point parabola.
FocusResult scan_focus(const SpectrumPropagator& exit, const FocusSearch& search);

FocusResult find_focus(const ScalarField& source, std::span<const StackElement> elements,
                       const FocusSearch& search, PropagationModel model = PropagationModel::kExact);

}  // namespace ionaddr::wave
