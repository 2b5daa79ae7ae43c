#pragma once

// Ray geometry of the TIR out-coupling mirror and the single-exponential
// evanescent leakage model between neighboring waveguides.

#include <array>
#include <cstddef>
#include <vector>

namespace ionaddr::pic {

struct TirMirrorSpec {
  double facet_angle_deg = 52.0;  // from the chip surface plane
  double n_effective = 1.466;
  double n_ambient = 1.0;  // medium behind the facet (air-filled trench)
  double n_exit = 1.0;     // medium above the chip

  void validate() const;
};

struct OutcouplingAngles {
  double internal_tilt_deg = 0.0;  // from the surface normal, inside the stack
  double exit_angle_deg = 0.0;     // from the surface normal, in the exit medium
  bool tir_satisfied = false;
};

struct LeakageReference {
  double pitch = 5e-6;          // meters
  double crosstalk_db = -30.0;  // at that pitch
};

struct WaveguideArraySpec {
  std::vector<double> positions;  // meters, strictly increasing
  std::array<double, 2> mode_mfd{2e-6, 6e-6};
  double leakage_decay = 1e6;  // 1/m
  LeakageReference leakage_reference;

  std::size_t channel_count() const { return positions.size(); }
  void validate() const;
};

inline constexpr double kDefaultEffectiveIndex = 1.466;
inline constexpr double kDefaultLeakageDecay = 1e6;  // 1 / um

double tir_critical_angle(const TirMirrorSpec& spec);

// Facet incidence condition alone; no exception for facets below the
// critical angle.
bool satisfies_tir(const TirMirrorSpec& spec);

// Throws kTrappedRay when the reflected ray cannot leave through the top
// surface.
OutcouplingAngles outcoupling_angle(const TirMirrorSpec& spec);

double leakage_crosstalk_at(const WaveguideArraySpec& array, double distance);
double leakage_crosstalk(const WaveguideArraySpec& array, std::size_t i, std::size_t j);

}  // namespace ionaddr::pic
