#include "report.h"

#include <fmt/format.h>

#include "ionaddr/app.h"
#include "ionaddr/constants.h"

namespace ionaddr::app::report {

using nlohmann::json;

namespace {

constexpr double kUm = 1e-6;

json um(double meters) { return meters / kUm; }

json um(const std::vector<double>& meters) {
  json a = json::array();
  for (double m : meters) a.push_back(m / kUm);
  return a;
}

json um2(const std::array<double, 2>& meters) { return {meters[0] / kUm, meters[1] / kUm}; }

bool length_parameter(design::SweepParameter p) {
  return p == design::SweepParameter::kLateralOffset || p == design::SweepParameter::kZOffset;
}

// Sweep values back in file units.
double file_value(design::SweepParameter p, double v) { return length_parameter(p) ? v / kUm : v; }

const char* unit_of(design::SweepParameter p) { return length_parameter(p) ? "um" : "deg"; }

}  // namespace

json header(const std::string& command) {
  return {{"schema_version", kSchemaVersion},
          {"toolkit", {{"name", "ionaddr"}, {"version", toolkit_version()}}},
          {"command", command},
          {"units",
           {{"length", "um"},
            {"angle", "deg"},
            {"frequency", "Hz"},
            {"crosstalk", "dB"},
            {"intensity", "1/um^2 per unit source power"}}}};
}

json crystal(const crystal::IonCrystal& c) {
  const auto gaps = crystal::ion_spacings(c);
  double mean = 0.0;
  for (double g : gaps) mean += g / gaps.size();
  json j = {{"ion_count", c.trap.ion_count},
            {"length_scale_um", um(c.length_scale)},
            {"dimensionless_positions", c.dimensionless_positions},
            {"positions_um", um(c.positions())},
            {"gaps_um", um(gaps)},
            {"max_force_residual", crystal::force_residual(c.dimensionless_positions)}};
  j["mean_gap_um"] = gaps.empty() ? json(nullptr) : um(mean);
  return j;
}

json pitch_plan(const std::vector<double>& positions, double magnification) {
  const auto gaps = design::position_gaps(positions);
  json j = {{"magnification", magnification}, {"positions_um", um(positions)}, {"gaps_um", um(gaps)}};
  if (gaps.empty()) {
    j["gap_range_um"] = nullptr;
  } else {
    const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
    j["gap_range_um"] = {*lo / kUm, *hi / kUm};
  }
  return j;
}

json mirror(const pic::TirMirrorSpec& spec) {
  json j = {{"critical_angle_deg", pic::tir_critical_angle(spec)}, {"tir_satisfied", pic::satisfies_tir(spec)}};
  const auto out = pic::outcoupling_angle(spec);
  j["internal_tilt_deg"] = out.internal_tilt_deg;
  j["exit_angle_deg"] = out.exit_angle_deg;
  return j;
}

json prescription(const design::LensStackPrescription& rx) {
  json elements = json::array();
  for (const auto& e : rx.elements) {
    json el = {{"z_um", um(e.z)},
               {"offset_um", {e.element.offset_x / kUm, e.element.offset_y / kUm}}};
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, wave::ThinLensPhase>) {
            el["type"] = "thin_lens";
            el["focal_length_um"] = um(k.focal_length);
          } else if constexpr (std::is_same_v<K, wave::Wedge>) {
            el["type"] = "wedge";
            el["tilt_deg"] = {k.tilt_x_deg, k.tilt_y_deg};
            el["index_step"] = k.index_step;
            el["apex_angle_deg"] = wave::wedge_apex_angle_deg(k, rx.ambient_index);
          } else if constexpr (std::is_same_v<K, wave::RectAperture>) {
            el["type"] = "rect_aperture";
            el["width_um"] = {k.width_x / kUm, k.width_y / kUm};
          } else {
            el["type"] = "circ_aperture";
            el["radius_um"] = um(k.radius);
          }
        },
        e.element.kind);
    el["clear_aperture_radius_um"] = e.clear_aperture ? um(*e.clear_aperture) : json(nullptr);
    elements.push_back(el);
  }
  const auto& p = rx.predicted;
  json j = {{"source_tilt_deg", rx.source_tilt_deg},
            {"wavelength_um", um(rx.wavelength)},
            {"ambient_index", rx.ambient_index},
            {"elements", elements},
            {"predicted",
             {{"magnification", p.magnification},
              {"lateral_magnification", p.lateral_magnification},
              {"image_distance_um", um2(p.image_distance)},
              {"image_mfd_um", um2(p.image_mfd)},
              {"numerical_aperture", p.numerical_aperture},
              {"image_side_na", p.image_side_na},
              {"stack_height_um", um(p.stack_height)}}}};
  if (rx.verification) {
    const auto& v = *rx.verification;
    j["verification"] = {{"z_focus_um", um(v.z_focus)},
                         {"mfd_fit_um", um2(v.mfd_fit)},
                         {"waist_ratio_x", v.waist_ratio_x},
                         {"waist_ratio_deviation", v.waist_ratio_deviation},
                         {"focus_deviation", v.focus_deviation}};
  } else {
    j["verification"] = nullptr;
  }
  return j;
}

json channel(const design::ChannelReport& r, bool with_profile) {
  const auto& m = r.metrics;
  json j = {{"channel", r.channel},
            {"source_x_um", um(r.source_x)},
            {"source_tilt_deg", r.source_tilt_deg},
            {"stack_top_um", um(r.stack_top)},
            {"z_focus_um", um(r.z_focus)},
            {"centroid_um", um2(m.centroid)},
            {"mfd_moment_um", um2(m.mfd_moment)},
            {"mfd_fit_um", um2(m.mfd_fit)},
            {"fit_failed", m.fit_failed},
            {"peak_intensity", m.peak_intensity * kUm * kUm},
            {"power", m.power},
            {"clipped_fraction", m.clipped_fraction}};
  if (with_profile) {
    json profile = json::array();
    for (const auto& s : r.axial_profile)
      profile.push_back({{"z_um", um(s.z)}, {"mfd_moment_um", um2(s.mfd_moment)}, {"centroid_um", um2(s.centroid)}});
    j["axial_profile"] = profile;
  }
  return j;
}

json crosstalk(const design::CrosstalkReport& r) {
  json optical = json::array(), leakage = json::array();
  for (const auto& row : r.contributions) {
    json o = json::array(), l = json::array();
    for (const auto& c : row) {
      o.push_back(c.optical_db);
      l.push_back(c.leakage_db ? json(*c.leakage_db) : json(nullptr));
    }
    optical.push_back(o);
    leakage.push_back(l);
  }
  const auto nn = design::nearest_neighbor_summary(r);
  return {{"ion_plane_z_um", um(r.ion_plane_z)},
          {"leakage_included", r.leakage_included},
          {"ion_positions_um", um(r.ion_positions)},
          {"ion_index", r.ion_index},
          {"matrix_db", r.matrix_db},
          {"optical_db", optical},
          {"leakage_db", leakage},
          {"nearest_neighbor",
           {{"pairs", nn.pairs},
            {"worst_total_db", nn.pairs ? json(nn.worst_total_db) : json(nullptr)},
            {"mean_optical_db", nn.pairs ? json(nn.mean_optical_db) : json(nullptr)},
            {"mean_leakage_db", nn.mean_leakage_db ? json(*nn.mean_leakage_db) : json(nullptr)}}}};
}

json sweep(const design::SweepReport& r) {
  json params = json::array();
  for (const auto& p : r.perturbations)
    params.push_back({{"parameter", design::to_string(p.parameter)},
                      {"unit", unit_of(p.parameter)},
                      {"min", file_value(p.parameter, p.min)},
                      {"max", file_value(p.parameter, p.max)},
                      {"steps", p.steps}});
  json points = json::array();
  for (const auto& pt : r.points) {
    json values = json::array();
    for (std::size_t k = 0; k < pt.values.size(); ++k)
      values.push_back(file_value(r.perturbations[k].parameter, pt.values[k]));
    json c = channel(pt.result, false);
    points.push_back({{"values", values},
                      {"z_focus_um", c["z_focus_um"]},
                      {"dz_focus_um", um(pt.dz_focus)},
                      {"mfd_fit_um", c["mfd_fit_um"]},
                      {"dmfd_um", um2(pt.dmfd)},
                      {"centroid_um", c["centroid_um"]},
                      {"dcentroid_nm", {pt.dcentroid[0] * 1e9, pt.dcentroid[1] * 1e9}},
                      {"clipped_fraction", pt.result.metrics.clipped_fraction},
                      {"propagation_angle_deg", pt.propagation_angle_deg},
                      {"off_normal", pt.off_normal},
                      {"excess_clipping", pt.excess_clipping},
                      {"centroid_shift_reportable", pt.centroid_shift_reportable}});
  }
  return {{"preset", r.preset.empty() ? json(nullptr) : json(r.preset)},
          {"channel", r.channel},
          {"parameters", params},
          {"thresholds",
           {{"off_normal_deg", r.thresholds.off_normal_deg},
            {"clipping_increase", r.thresholds.clipping_increase},
            {"centroid_report_nm", r.thresholds.centroid_report * 1e9}}},
          {"nominal", channel(r.nominal, false)},
          {"nominal_propagation_angle_deg", r.nominal_propagation_angle_deg},
          {"points", points}};
}

std::string sweep_csv(const design::SweepReport& r) {
  std::string out = "point";
  for (const auto& p : r.perturbations)
    out += fmt::format(",{}_{}", design::to_string(p.parameter), unit_of(p.parameter));
  out +=
      ",z_focus_um,dz_focus_um,mfd_fit_x_um,mfd_fit_y_um,dmfd_x_um,dmfd_y_um,centroid_x_um,centroid_y_um,"
      "dcentroid_x_nm,dcentroid_y_nm,clipped_fraction,angle_x_deg,angle_y_deg,off_normal,excess_clipping,"
      "centroid_shift_reportable\n";
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& pt = r.points[i];
    const auto& m = pt.result.metrics;
    out += fmt::format("{}", i);
    for (std::size_t k = 0; k < pt.values.size(); ++k)
      out += fmt::format(",{:.9g}", file_value(r.perturbations[k].parameter, pt.values[k]));
    out += fmt::format(",{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.3f},{:.3f},{:.6e},{:.6f},{:.6f},{},{},{}\n",
                       pt.result.z_focus / kUm, pt.dz_focus / kUm, m.mfd_fit[0] / kUm, m.mfd_fit[1] / kUm,
                       pt.dmfd[0] / kUm, pt.dmfd[1] / kUm, m.centroid[0] / kUm, m.centroid[1] / kUm,
                       pt.dcentroid[0] * 1e9, pt.dcentroid[1] * 1e9, m.clipped_fraction,
                       pt.propagation_angle_deg[0], pt.propagation_angle_deg[1], pt.off_normal ? 1 : 0,
                       pt.excess_clipping ? 1 : 0, pt.centroid_shift_reportable ? 1 : 0);
  }
  return out;
}

}  // namespace ionaddr::app::report
