#pragma once

// End-to-end addressing design: pitch plan, lens-stack synthesis, per-channel
// wave simulation, channel-to-ion crosstalk and tolerance sweeps.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ionaddr/gauss_optics.h"
#include "ionaddr/ion_crystal.h"
#include "ionaddr/pic_model.h"
#include "ionaddr/wave_optics.h"

namespace ionaddr::design {

struct DesignTargets {
  double magnification = 0.6;
  double numerical_aperture = 0.24;  // object (waveguide) side, set by the clear apertures
  double image_distance = 175e-6;    // last lens to ion plane
  std::array<double, 2> source_mfd{2.0e-6, 6.0e-6};
  double wavelength = 729e-9;
  double max_stack_height = 400e-6;  // source plane to last lens
  double aperture_budget = 250e-6;   // largest clear-aperture diameter
  // Largest transverse source offset the apertures must pass; the pipeline
  // fills it from the pitch plan.
  double field_radius = 0.0;

  void validate() const;
};

struct PredictedPerformance {
  std::array<double, 2> magnification{};   // image / object waist ratio
  double lateral_magnification = 0.0;      // signed, chief ray from the source plane
  std::array<double, 2> image_distance{};  // waist position after the last lens
  std::array<double, 2> image_mfd{};
  double numerical_aperture = 0.0;  // object side, admitted by the clear apertures
  double image_side_na = 0.0;       // marginal ray after the last lens
  double stack_height = 0.0;
};

struct WaveVerification {
  double z_focus = 0.0;
  std::array<double, 2> mfd_fit{};
  double waist_ratio_x = 0.0;
  double waist_ratio_deviation = 0.0;  // relative to the ABCD prediction
  double focus_deviation = 0.0;        // relative to the ABCD image distance
};

struct LensStackPrescription {
  std::vector<wave::StackElement> elements;  // z from the source plane
  PredictedPerformance predicted;
  double source_tilt_deg = 0.0;  // tilt the wedge was built to cancel
  double wavelength = 0.0;
  double ambient_index = 1.0;
  std::optional<WaveVerification> verification;

  double stack_top() const;
  std::vector<double> focal_lengths() const;
  // Free space and thin lenses from the source plane to the last lens.
  std::vector<gauss::AbcdElement> abcd_chain() const;
};

struct SynthesisOptions {
  int lens_count = 2;  // 1 selects the closed-form single-lens conjugate
  double grid_step = 10e-6;
  double min_focal_length = 25e-6;
  double max_focal_length = 5e-3;
  double max_lens_aperture_ratio = 0.5;  // clear semi-aperture / |f|
  double ambient_index = 1.0;
  double wedge_index_step = 0.52;
  bool verify = true;
  wave::Grid verification_grid{};
  wave::PropagationModel model = wave::PropagationModel::kParaxial;
};

// Acceptance bands on the ABCD prediction and on the wave re-verification.
inline constexpr double kMagnificationTolerance = 0.01;
inline constexpr double kImageDistanceTolerance = 0.02;
inline constexpr double kNaTolerance = 0.05;
inline constexpr double kVerificationTolerance = 0.03;

// Waveguide positions (meters) imaging onto the ion positions at the given
// magnification magnitude.
std::vector<double> pitch_plan(const crystal::IonCrystal& crystal, double magnification);
std::vector<double> position_gaps(const std::vector<double>& positions);

// Throws kInfeasible naming the violated constraint.
LensStackPrescription synthesize_lens_stack(const DesignTargets& targets, double source_tilt_deg,
                                            const SynthesisOptions& options = {});

struct SimulationOptions {
  wave::Grid grid{};
  wave::FocusSearch focus{};
  wave::PropagationModel model = wave::PropagationModel::kParaxial;
};

// Deviations from the nominal channel set-up used by tolerance sweeps.
struct ChannelPerturbation {
  std::optional<double> prism_design_deg;  // exit angle the wedge was built for
  double source_tilt_delta_deg = 0.0;
  double lateral_offset = 0.0;   // source x shift, meters
  double z_offset = 0.0;         // lens shift away from the source, meters
  double chip_wedge_deg = 0.0;   // x tilt after the last lens
};

struct ChannelReport {
  std::size_t channel = 0;
  double source_x = 0.0;
  double source_tilt_deg = 0.0;
  double z_focus = 0.0;  // from the last element
  double stack_top = 0.0;
  wave::SpotMetrics metrics;
  std::vector<wave::AxialSample> axial_profile;
};

ChannelReport simulate_channel(const LensStackPrescription& prescription,
                               const pic::WaveguideArraySpec& array, std::size_t channel,
                               const pic::TirMirrorSpec& mirror, const SimulationOptions& options,
                               const ChannelPerturbation& perturbation = {});

// Field of one channel at `distance` after the last element.
wave::ScalarField channel_field_at(const LensStackPrescription& prescription,
                                   const pic::WaveguideArraySpec& array, std::size_t channel,
                                   const pic::TirMirrorSpec& mirror, const SimulationOptions& options,
                                   double distance);

struct CrosstalkContribution {
  double optical_db = 0.0;
  std::optional<double> leakage_db;
  double total_db = 0.0;
};

// Rows are channels; column j is the ion addressed by channel j, so the
// diagonal is each channel at its own ion.
struct CrosstalkReport {
  std::vector<std::vector<double>> matrix_db;
  std::vector<std::vector<CrosstalkContribution>> contributions;
  std::vector<double> ion_positions;     // ion addressed by each channel, meters
  std::vector<std::size_t> ion_index;    // its index in the crystal
  std::vector<ChannelReport> channel_focus;
  double ion_plane_z = 0.0;  // from the last element
  bool leakage_included = true;
};

inline constexpr double kCrosstalkFloorDb = -300.0;

CrosstalkReport crosstalk_matrix(const LensStackPrescription& prescription,
                                 const pic::WaveguideArraySpec& array,
                                 const crystal::IonCrystal& crystal, const pic::TirMirrorSpec& mirror,
                                 const SimulationOptions& options, bool include_leakage = true);

// Adjacent-channel pairs, both directions.
struct NeighborSummary {
  std::size_t pairs = 0;
  double worst_total_db = kCrosstalkFloorDb;
  double mean_optical_db = kCrosstalkFloorDb;  // power mean
  std::optional<double> mean_leakage_db;       // power mean
};

NeighborSummary nearest_neighbor_summary(const CrosstalkReport& report);

enum class SweepParameter { kPrismDesignAngle, kSourceTilt, kLateralOffset, kZOffset, kChipWedge };

std::string_view to_string(SweepParameter parameter);
std::optional<SweepParameter> parse_sweep_parameter(std::string_view name);

// prism_design_angle is absolute (deg); the others are deltas in degrees
// (source_tilt, chip_wedge) or meters (lateral_offset, z_offset).
struct Perturbation {
  SweepParameter parameter = SweepParameter::kChipWedge;
  double min = 0.0;
  double max = 0.0;
  int steps = 1;

  std::vector<double> values() const;
};

struct SweepThresholds {
  double off_normal_deg = 1.0;  // departure from the nominal direction
  double clipping_increase = 1e-3;
  double centroid_report = 10e-9;
};

struct SweepPoint {
  std::vector<double> values;  // aligned with the perturbation list
  ChannelReport result;
  double dz_focus = 0.0;  // absolute focus position change
  std::array<double, 2> dmfd{};
  std::array<double, 2> dcentroid{};
  std::array<double, 2> propagation_angle_deg{};
  bool off_normal = false;
  bool excess_clipping = false;
  bool centroid_shift_reportable = false;
};

struct SweepReport {
  std::string preset;
  std::size_t channel = 0;
  std::vector<Perturbation> perturbations;
  SweepThresholds thresholds;
  ChannelReport nominal;
  std::array<double, 2> nominal_propagation_angle_deg{};
  std::vector<SweepPoint> points;
};

// Outermost channel, the one with the largest field offset.
std::size_t worst_case_channel(const pic::WaveguideArraySpec& array);

// Propagation direction from a straight-line fit of centroid against z.
std::array<double, 2> propagation_angle_deg(const std::vector<wave::AxialSample>& profile);

SweepReport tolerance_sweep(const LensStackPrescription& prescription,
                            const pic::WaveguideArraySpec& array, const pic::TirMirrorSpec& mirror,
                            const std::vector<Perturbation>& perturbations,
                            const SimulationOptions& options, const SweepThresholds& thresholds = {});

struct SweepPreset {
  std::string name;
  std::string description;
  std::vector<Perturbation> perturbations;
};

std::vector<std::string> sweep_preset_names();
// Throws kInvalidInput listing the available presets for an unknown name.
SweepPreset sweep_preset(std::string_view name);

}  // namespace ionaddr::design
