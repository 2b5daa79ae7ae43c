#pragma once

#include <numbers>

// CODATA 2018 values, SI units.
namespace ionaddr::constants {

inline constexpr double kElementaryCharge = 1.602176634e-19;    // C (exact)
inline constexpr double kVacuumPermittivity = 8.8541878128e-12; // F/m
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;    // kg
inline constexpr double kSpeedOfLight = 299792458.0;            // m/s (exact)

inline constexpr double kPi = std::numbers::pi;

inline constexpr double kMicron = 1e-6;
inline constexpr double kNanometer = 1e-9;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace ionaddr::constants
