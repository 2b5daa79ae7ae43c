#include "ionaddr/ion_crystal.h"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/format.h>

#include "ionaddr/constants.h"
#include "ionaddr/error.h"

namespace ionaddr::crystal {

namespace {

Eigen::VectorXd forces(const Eigen::VectorXd& u) {
  const Eigen::Index n = u.size();
  Eigen::VectorXd f(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    double s = u[m];
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == m) continue;
      const double d = u[m] - u[k];
      s += (k < m ? -1.0 : 1.0) / (d * d);
    }
    f[m] = s;
  }
  return f;
}

Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) {
  const Eigen::Index n = u.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    double diag = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == m) continue;
      const double inv3 = 2.0 / std::pow(std::abs(u[m] - u[k]), 3);
      diag += inv3;
      j(m, k) = -inv3;
    }
    j(m, m) = diag;
  }
  return j;
}

bool strictly_increasing(const Eigen::VectorXd& u) {
  for (Eigen::Index i = 1; i < u.size(); ++i)
    if (!(u[i] > u[i - 1])) return false;
  return true;
}

}  // namespace

void TrapSpec::validate() const {
  require(ion_mass_amu > 0.0 && std::isfinite(ion_mass_amu), ErrorKind::kInvalidInput,
          fmt::format("ion_mass must be positive, got {}", ion_mass_amu));
  require(ion_charge >= 1, ErrorKind::kInvalidInput,
          fmt::format("ion_charge must be >= 1, got {}", ion_charge));
  require(axial_frequency_hz > 0.0 && std::isfinite(axial_frequency_hz),
          ErrorKind::kInvalidInput,
          fmt::format("axial_frequency must be positive, got {}", axial_frequency_hz));
  require(ion_count >= 1, ErrorKind::kInvalidInput,
          fmt::format("ion_count must be >= 1, got {}", ion_count));
}

std::vector<double> IonCrystal::positions() const {
  std::vector<double> out;
  out.reserve(dimensionless_positions.size());
  for (double u : dimensionless_positions) out.push_back(u * length_scale);
  return out;
}

double length_scale(const TrapSpec& trap) {
  trap.validate();
  using namespace constants;
  const double q = trap.ion_charge * kElementaryCharge;
  const double mass = trap.ion_mass_amu * kAtomicMassUnit;
  const double omega = 2.0 * kPi * trap.axial_frequency_hz;
  return std::cbrt(q * q / (4.0 * kPi * kVacuumPermittivity * mass * omega * omega));
}

double force_residual(const std::vector<double>& positions) {
  const Eigen::VectorXd u =
      Eigen::Map<const Eigen::VectorXd>(positions.data(), static_cast<Eigen::Index>(positions.size()));
  return u.size() == 0 ? 0.0 : forces(u).cwiseAbs().maxCoeff();
}

std::vector<double> equilibrium_positions(int n, double tolerance) {
  require(n >= 1, ErrorKind::kInvalidInput, fmt::format("ion count must be >= 1, got {}", n));
  require(tolerance > 0.0, ErrorKind::kInvalidInput,
          fmt::format("tolerance must be positive, got {}", tolerance));

  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i)
    u[i] = n == 1 ? 0.0 : 0.63 * (-0.5 * n + static_cast<double>(i) * n / (n - 1));

  Eigen::VectorXd f = forces(u);
  double residual = f.cwiseAbs().maxCoeff();
  int iteration = 0;
  while (residual >= tolerance) {
    if (iteration++ >= kMaxNewtonIterations) {
      fail(ErrorKind::kConvergence,
           fmt::format("equilibrium solver did not converge for N={} after {} iterations "
                       "(residual {:.3e}, tolerance {:.3e})",
                       n, kMaxNewtonIterations, residual, tolerance));
    }
    const Eigen::VectorXd step = jacobian(u).llt().solve(f);
    // Halve the step until the crystal stays ordered and the residual drops.
    double damping = 1.0;
    Eigen::VectorXd trial;
    double trial_residual = residual;
    for (int halving = 0; halving < 40; ++halving) {
      trial = u - damping * step;
      if (strictly_increasing(trial)) {
        trial_residual = forces(trial).cwiseAbs().maxCoeff();
        if (trial_residual < residual) break;
      }
      damping *= 0.5;
    }
    if (!(trial_residual < residual)) {
      fail(ErrorKind::kConvergence,
           fmt::format("equilibrium solver stalled for N={} (residual {:.3e}, tolerance {:.3e})", n,
                       residual, tolerance));
    }
    u = trial;
    f = forces(u);
    residual = trial_residual;
  }
  return {u.data(), u.data() + u.size()};
}

IonCrystal solve_crystal(const TrapSpec& trap, double tolerance) {
  trap.validate();
  return IonCrystal{equilibrium_positions(trap.ion_count, tolerance), length_scale(trap), trap};
}

std::vector<double> ion_spacings(const IonCrystal& crystal) {
  const auto& u = crystal.dimensionless_positions;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < u.size(); ++i)
    gaps.push_back(crystal.length_scale * (u[i] - u[i - 1]));
  return gaps;
}

}  // namespace ionaddr::crystal
