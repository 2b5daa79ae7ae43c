#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ionaddr/constants.h"
#include "ionaddr/designer.h"
#include "ionaddr/error.h"

namespace ionaddr::design {

namespace {

constexpr std::array<std::pair<SweepParameter, std::string_view>, 5> kParameterNames{{
    {SweepParameter::kPrismDesignAngle, "prism_design_angle"},
    {SweepParameter::kSourceTilt, "source_tilt"},
    {SweepParameter::kLateralOffset, "lateral_offset"},
    {SweepParameter::kZOffset, "z_offset"},
    {SweepParameter::kChipWedge, "chip_wedge"},
}};

void apply(ChannelPerturbation& p, SweepParameter parameter, double value) {
  switch (parameter) {
    case SweepParameter::kPrismDesignAngle: p.prism_design_deg = value; break;
    case SweepParameter::kSourceTilt: p.source_tilt_delta_deg += value; break;
    case SweepParameter::kLateralOffset: p.lateral_offset += value; break;
    case SweepParameter::kZOffset: p.z_offset += value; break;
    case SweepParameter::kChipWedge: p.chip_wedge_deg += value; break;
  }
}

std::string describe(const std::vector<Perturbation>& perturbations, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i)
    s += fmt::format("{}{}={}", i ? ", " : "", to_string(perturbations[i].parameter), values[i]);
  return s;
}

}  // namespace

std::string_view to_string(SweepParameter parameter) {
  for (const auto& [p, name] : kParameterNames)
    if (p == parameter) return name;
  return "unknown";
}

std::optional<SweepParameter> parse_sweep_parameter(std::string_view name) {
  for (const auto& [p, n] : kParameterNames)
    if (n == name) return p;
  return std::nullopt;
}

std::vector<double> Perturbation::values() const {
  require(steps >= 1, ErrorKind::kInvalidInput, fmt::format("sweep steps must be >= 1, got {}", steps));
  require(max >= min, ErrorKind::kInvalidInput,
          fmt::format("sweep range for {} is reversed ({} > {})", to_string(parameter), min, max));
  if (steps == 1) return {min};
  std::vector<double> v(steps);
  for (int i = 0; i < steps; ++i) v[i] = min + (max - min) * i / (steps - 1);
  return v;
}

std::size_t worst_case_channel(const pic::WaveguideArraySpec& array) {
  array.validate();
  std::size_t best = 0;
  for (std::size_t i = 1; i < array.positions.size(); ++i)
    if (std::abs(array.positions[i]) >= std::abs(array.positions[best])) best = i;
  return best;
}

std::array<double, 2> propagation_angle_deg(const std::vector<wave::AxialSample>& profile) {
  std::array<double, 2> out{};
  if (profile.size() < 2) return out;
  double mz = 0.0;
  std::array<double, 2> mc{};
  for (const auto& s : profile) {
    mz += s.z;
    mc[0] += s.centroid[0];
    mc[1] += s.centroid[1];
  }
  const double n = static_cast<double>(profile.size());
  mz /= n;
  mc[0] /= n;
  mc[1] /= n;
  double szz = 0.0;
  std::array<double, 2> szc{};
  for (const auto& s : profile) {
    szz += (s.z - mz) * (s.z - mz);
    szc[0] += (s.z - mz) * (s.centroid[0] - mc[0]);
    szc[1] += (s.z - mz) * (s.centroid[1] - mc[1]);
  }
  for (int a = 0; a < 2; ++a) out[a] = constants::rad_to_deg(std::atan(szc[a] / szz));
  return out;
}

SweepReport tolerance_sweep(const LensStackPrescription& prescription,
                            const pic::WaveguideArraySpec& array, const pic::TirMirrorSpec& mirror,
                            const std::vector<Perturbation>& perturbations,
                            const SimulationOptions& options, const SweepThresholds& thresholds) {
  require(!perturbations.empty(), ErrorKind::kInvalidInput, "tolerance sweep needs at least one perturbation");
  SweepReport report;
  report.channel = worst_case_channel(array);
  report.perturbations = perturbations;
  report.thresholds = thresholds;
  report.nominal = simulate_channel(prescription, array, report.channel, mirror, options);
  report.nominal_propagation_angle_deg = propagation_angle_deg(report.nominal.axial_profile);
  const ChannelReport& nom = report.nominal;

  std::vector<std::vector<double>> axes;
  for (const auto& p : perturbations) axes.push_back(p.values());

  // Cartesian product, last parameter varying fastest.
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    SweepPoint point;
    ChannelPerturbation perturbation;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      point.values.push_back(axes[k][idx[k]]);
      apply(perturbation, perturbations[k].parameter, axes[k][idx[k]]);
    }
    try {
      point.result = simulate_channel(prescription, array, report.channel, mirror, options, perturbation);
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("sweep point ({}): {}", describe(perturbations, point.values), e.what()));
    }
    const ChannelReport& r = point.result;
    point.dz_focus = (r.stack_top + r.z_focus) - (nom.stack_top + nom.z_focus);
    for (int a = 0; a < 2; ++a) {
      point.dmfd[a] = r.metrics.mfd_fit[a] - nom.metrics.mfd_fit[a];
      point.dcentroid[a] = r.metrics.centroid[a] - nom.metrics.centroid[a];
    }
    point.propagation_angle_deg = propagation_angle_deg(r.axial_profile);
    // Off-axis channels leave the stack at an angle by design; only the
    // departure from the nominal direction counts.
    const auto& a = point.propagation_angle_deg;
    const auto& a0 = report.nominal_propagation_angle_deg;
    point.off_normal = std::abs(a[0] - a0[0]) > thresholds.off_normal_deg ||
                       std::abs(a[1] - a0[1]) > thresholds.off_normal_deg;
    point.excess_clipping =
        r.metrics.clipped_fraction - nom.metrics.clipped_fraction > thresholds.clipping_increase;
    point.centroid_shift_reportable = std::hypot(point.dcentroid[0], point.dcentroid[1]) >= thresholds.centroid_report;
    report.points.push_back(std::move(point));

    std::size_t k = axes.size();
    while (k > 0) {
      --k;
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
      if (k == 0) return report;
    }
  }
}

std::vector<std::string> sweep_preset_names() { return {"paper-prism-mismatch", "chip-wedge-budget"}; }

SweepPreset sweep_preset(std::string_view name) {
  if (name == "paper-prism-mismatch")
    return {"paper-prism-mismatch",
            "prism wedge built for a 7 deg exit angle while the mirror emits at its actual angle",
            {{SweepParameter::kPrismDesignAngle, 7.0, 7.0, 1}}};
  if (name == "chip-wedge-budget")
    return {"chip-wedge-budget", "chip-to-stack wedge over the +-0.002 deg bonding budget",
            {{SweepParameter::kChipWedge, -0.002, 0.002, 3}}};
  fail(ErrorKind::kInvalidInput,
       fmt::format("unknown preset '{}'; available presets: {}", name, fmt::join(sweep_preset_names(), ", ")));
}

}  // namespace ionaddr::design
