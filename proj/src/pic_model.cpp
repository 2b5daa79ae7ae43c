#include "ionaddr/pic_model.h"

#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "ionaddr/constants.h"
#include "ionaddr/error.h"

namespace ionaddr::pic {

using constants::deg_to_rad;
using constants::rad_to_deg;

void TirMirrorSpec::validate() const {
  require(facet_angle_deg > 0.0 && facet_angle_deg < 90.0, ErrorKind::kInvalidInput,
          fmt::format("facet_angle must lie in (0, 90) degrees, got {}", facet_angle_deg));
  require(n_effective >= 1.0 && n_ambient >= 1.0 && n_exit >= 1.0, ErrorKind::kInvalidInput,
          fmt::format("indices must be >= 1 (n_effective {}, n_ambient {}, n_exit {})", n_effective,
                      n_ambient, n_exit));
}

void WaveguideArraySpec::validate() const {
  require(!positions.empty(), ErrorKind::kInvalidInput, "waveguide array has no channels");
  for (std::size_t i = 1; i < positions.size(); ++i)
    require(positions[i] > positions[i - 1], ErrorKind::kInvalidInput,
            fmt::format("waveguide positions must be strictly increasing (index {})", i));
  require(mode_mfd[0] > 0.0 && mode_mfd[1] > 0.0, ErrorKind::kInvalidInput,
          "mode_mfd must be positive");
  require(leakage_decay > 0.0, ErrorKind::kInvalidInput, "leakage_decay must be positive");
  require(leakage_reference.pitch > 0.0, ErrorKind::kInvalidInput,
          "leakage reference pitch must be positive");
}

double tir_critical_angle(const TirMirrorSpec& spec) {
  spec.validate();
  require(spec.n_effective > spec.n_ambient, ErrorKind::kNoTir,
          fmt::format("no total internal reflection: n_ambient {} >= n_effective {}", spec.n_ambient,
                      spec.n_effective));
  return rad_to_deg(std::asin(spec.n_ambient / spec.n_effective));
}

bool satisfies_tir(const TirMirrorSpec& spec) {
  spec.validate();
  if (spec.n_effective <= spec.n_ambient) return false;
  return spec.facet_angle_deg >= tir_critical_angle(spec);
}

OutcouplingAngles outcoupling_angle(const TirMirrorSpec& spec) {
  spec.validate();
  // A horizontal guided ray meets the facet at the facet angle and leaves it
  // rotated by 2 * facet; measured from the surface normal that is
  // 2 * (facet - 45 deg).
  const double internal = 2.0 * (spec.facet_angle_deg - 45.0);
  const double s = spec.n_effective * std::sin(deg_to_rad(internal)) / spec.n_exit;
  require(std::abs(s) < 1.0, ErrorKind::kTrappedRay,
          fmt::format("reflected ray at {:.3f} deg internal tilt is totally reflected at the top "
                      "surface (n_eff sin / n_exit = {:.4f})",
                      internal, s));
  return {internal, rad_to_deg(std::asin(s)), satisfies_tir(spec)};
}

double leakage_crosstalk_at(const WaveguideArraySpec& array, double distance) {
  // 20 log10(e) converts the field decay constant to dB.
  constexpr double kDbPerNeper = 20.0 * std::numbers::log10e;
  return array.leakage_reference.crosstalk_db +
         kDbPerNeper * array.leakage_decay * (array.leakage_reference.pitch - distance);
}

double leakage_crosstalk(const WaveguideArraySpec& array, std::size_t i, std::size_t j) {
  array.validate();
  require(i < array.channel_count() && j < array.channel_count(), ErrorKind::kInvalidInput,
          fmt::format("channel index out of range ({}, {}) for {} channels", i, j,
                      array.channel_count()));
  require(i != j, ErrorKind::kInvalidInput, "leakage crosstalk needs two distinct channels");
  return leakage_crosstalk_at(array, std::abs(array.positions[i] - array.positions[j]));
}

}  // namespace ionaddr::pic
