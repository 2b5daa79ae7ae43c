#pragma once

// Equilibrium geometry of a linear Coulomb crystal in a harmonic axial well.
//
// Positions are solved in the usual dimensionless form, where ion m balances
//
//   u_m - sum_{n<m} 1/(u_m - u_n)^2 + sum_{n>m} 1/(u_m - u_n)^2 = 0,
//
// and converted to meters by the length scale l = (q^2 / (4 pi eps0 M w^2))^(1/3).

#include <vector>

namespace ionaddr::crystal {

struct TrapSpec {
  double ion_mass_amu = 40.0;
  int ion_charge = 1;
  double axial_frequency_hz = 700e3;  // ordinary frequency; w = 2 pi f
  int ion_count = 10;

  void validate() const;
};

struct IonCrystal {
  std::vector<double> dimensionless_positions;
  double length_scale = 0.0;  // meters
  TrapSpec trap;

  // Physical positions in meters, centered on the well minimum.
  std::vector<double> positions() const;
};

inline constexpr double kDefaultTolerance = 1e-12;
inline constexpr int kMaxNewtonIterations = 200;

double length_scale(const TrapSpec& trap);

// Damped Newton on the force balance. Throws kConvergence with the final
// residual when the iteration cap is hit.
std::vector<double> equilibrium_positions(int n, double tolerance = kDefaultTolerance);

// Largest absolute force imbalance over all ions (dimensionless).
double force_residual(const std::vector<double>& positions);

IonCrystal solve_crystal(const TrapSpec& trap, double tolerance = kDefaultTolerance);

// N-1 neighbor gaps in meters.
std::vector<double> ion_spacings(const IonCrystal& crystal);

}  // namespace ionaddr::crystal
