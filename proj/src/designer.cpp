#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>

#include "ionaddr/designer.h"
#include "ionaddr/error.h"

namespace ionaddr::design {

namespace {

struct ChannelRun {
  ChannelReport report;
  wave::SpectrumPropagator exit;
};

std::vector<wave::StackElement> perturbed_elements(const LensStackPrescription& rx,
                                                   const ChannelPerturbation& p) {
  std::vector<wave::StackElement> elements = rx.elements;
  auto wedge = std::find_if(elements.begin(), elements.end(), [](const wave::StackElement& e) {
    return std::holds_alternative<wave::Wedge>(e.element.kind);
  });
  if (p.prism_design_deg) {
    if (wedge == elements.end()) {
      elements.insert(elements.begin(), {0.0, {wave::Wedge{0.0, -*p.prism_design_deg}}, {}});
    } else {
      std::get<wave::Wedge>(wedge->element.kind).tilt_y_deg = -*p.prism_design_deg;
    }
  }
  if (p.z_offset != 0.0)
    for (auto& e : elements)
      if (!std::holds_alternative<wave::Wedge>(e.element.kind)) e.z += p.z_offset;
  require(elements.empty() || elements.front().z >= 0.0, ErrorKind::kInvalidGeometry,
          "z offset moves the stack behind the source plane");
  if (p.chip_wedge_deg != 0.0) {
    const double top = elements.empty() ? 0.0 : elements.back().z;
    elements.push_back({top, {wave::Wedge{p.chip_wedge_deg, 0.0}}, {}});
  }
  return elements;
}

struct ChannelSetup {
  ChannelReport report;  // source fields filled in
  wave::ScalarField exit;
};

ChannelSetup prepare_channel(const LensStackPrescription& rx, const pic::WaveguideArraySpec& array,
                             std::size_t channel, const pic::TirMirrorSpec& mirror,
                             const SimulationOptions& options, const ChannelPerturbation& perturbation) {
  array.validate();
  require(channel < array.channel_count(), ErrorKind::kInvalidInput,
          fmt::format("channel {} out of range for {} channels", channel, array.channel_count()));
  const double tilt = pic::outcoupling_angle(mirror).exit_angle_deg + perturbation.source_tilt_delta_deg;
  const auto beam = gauss::beam_from_mfd(array.mode_mfd[0], array.mode_mfd[1], rx.wavelength, rx.ambient_index);
  const double x0 = array.positions[channel] + perturbation.lateral_offset;
  const auto source = wave::make_gaussian_field(beam, {0.0, tilt}, options.grid, x0, 0.0);
  const auto elements = perturbed_elements(rx, perturbation);

  ChannelSetup setup;
  setup.report.channel = channel;
  setup.report.source_x = x0;
  setup.report.source_tilt_deg = tilt;
  setup.report.stack_top = elements.empty() ? 0.0 : elements.back().z;
  setup.exit = wave::propagate_stack(source, elements, options.model);
  return setup;
}

template <class F>
auto tag_channel(std::size_t channel, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("channel {}: {}", channel, e.what()));
  }
}

ChannelRun run_channel(const LensStackPrescription& rx, const pic::WaveguideArraySpec& array,
                       std::size_t channel, const pic::TirMirrorSpec& mirror,
                       const SimulationOptions& options, const ChannelPerturbation& perturbation) {
  return tag_channel(channel, [&] {
    ChannelSetup setup = prepare_channel(rx, array, channel, mirror, options, perturbation);
    wave::SpectrumPropagator exit(setup.exit, options.model);
    const auto focus = wave::scan_focus(exit, options.focus);
    ChannelReport r = std::move(setup.report);
    r.z_focus = focus.z_focus;
    r.metrics = focus.metrics;
    r.axial_profile = focus.axial_profile;
    return ChannelRun{std::move(r), std::move(exit)};
  });
}

double bilinear_intensity(const wave::ScalarField& f, double x, double y) {
  const double u = (x - f.origin_x) / f.pitch + f.nx / 2;
  const double v = (y - f.origin_y) / f.pitch + f.ny / 2;
  const int i = static_cast<int>(std::floor(u)), j = static_cast<int>(std::floor(v));
  if (i < 0 || j < 0 || i + 1 >= f.nx || j + 1 >= f.ny) return 0.0;
  const double tu = u - i, tv = v - j;
  return (1 - tu) * (1 - tv) * std::norm(f.at(i, j)) + tu * (1 - tv) * std::norm(f.at(i + 1, j)) +
         (1 - tu) * tv * std::norm(f.at(i, j + 1)) + tu * tv * std::norm(f.at(i + 1, j + 1));
}

double to_db(double ratio) {
  return ratio > 0.0 ? std::max(10.0 * std::log10(ratio), kCrosstalkFloorDb) : kCrosstalkFloorDb;
}

double power_sum_db(double a_db, double b_db) {
  return 10.0 * std::log10(std::pow(10.0, a_db / 10.0) + std::pow(10.0, b_db / 10.0));
}

double power_mean_db(const std::vector<double>& values_db) {
  double s = 0.0;
  for (double v : values_db) s += std::pow(10.0, v / 10.0);
  return to_db(s / values_db.size());
}

}  // namespace

ChannelReport simulate_channel(const LensStackPrescription& prescription,
                               const pic::WaveguideArraySpec& array, std::size_t channel,
                               const pic::TirMirrorSpec& mirror, const SimulationOptions& options,
                               const ChannelPerturbation& perturbation) {
  return run_channel(prescription, array, channel, mirror, options, perturbation).report;
}

wave::ScalarField channel_field_at(const LensStackPrescription& prescription,
                                   const pic::WaveguideArraySpec& array, std::size_t channel,
                                   const pic::TirMirrorSpec& mirror, const SimulationOptions& options,
                                   double distance) {
  return tag_channel(channel, [&] {
    const auto setup = prepare_channel(prescription, array, channel, mirror, options, {});
    return wave::angular_spectrum_propagate(setup.exit, distance, options.model);
  });
}

CrosstalkReport crosstalk_matrix(const LensStackPrescription& prescription,
                                 const pic::WaveguideArraySpec& array,
                                 const crystal::IonCrystal& crystal, const pic::TirMirrorSpec& mirror,
                                 const SimulationOptions& options, bool include_leakage) {
  array.validate();
  const std::size_t n = array.channel_count();
  const std::vector<double> ions = crystal.positions();
  require(ions.size() == n, ErrorKind::kInvalidInput,
          fmt::format("array has {} channels but the crystal has {} ions", n, ions.size()));

  CrosstalkReport report;
  report.leakage_included = include_leakage;
  const double m = prescription.predicted.lateral_magnification;
  for (std::size_t i = 0; i < n; ++i) {
    const double image = m * array.positions[i];
    const auto nearest = std::min_element(ions.begin(), ions.end(), [&](double a, double b) {
      return std::abs(a - image) < std::abs(b - image);
    });
    report.ion_index.push_back(static_cast<std::size_t>(nearest - ions.begin()));
    report.ion_positions.push_back(*nearest);
  }
  {
    auto sorted = report.ion_index;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorKind::kInvalidGeometry,
            "several channels image onto the same ion; check the magnification and pitch plan");
  }

  // Common ion plane from the central channel(s).
  std::vector<std::size_t> central = n % 2 ? std::vector<std::size_t>{n / 2}
                                           : std::vector<std::size_t>{n / 2 - 1, n / 2};
  std::map<std::size_t, ChannelRun> cached;
  double plane = 0.0;
  for (std::size_t c : central) {
    auto run = run_channel(prescription, array, c, mirror, options, {});
    plane += run.report.z_focus / central.size();
    cached.emplace(c, std::move(run));
  }
  report.ion_plane_z = plane;

  report.matrix_db.assign(n, std::vector<double>(n, 0.0));
  report.contributions.assign(n, std::vector<CrosstalkContribution>(n));
  for (std::size_t i = 0; i < n; ++i) {
    auto it = cached.find(i);
    ChannelRun run = it != cached.end() ? std::move(it->second)
                                        : run_channel(prescription, array, i, mirror, options, {});
    if (it != cached.end()) cached.erase(it);
    // The exit plane was checked on the way in; with the ion plane checked
    // too, convexity covers the span between.
    const auto at_ions = tag_channel(i, [&] {
      auto field = run.exit.at(report.ion_plane_z);
      run.exit.check_field(field, report.ion_plane_z);
      return field;
    });
    const double own = bilinear_intensity(at_ions, report.ion_positions[i], 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      CrosstalkContribution c;
      c.optical_db = own > 0.0 ? to_db(bilinear_intensity(at_ions, report.ion_positions[j], 0.0) / own)
                               : kCrosstalkFloorDb;
      c.total_db = c.optical_db;
      if (include_leakage) {
        c.leakage_db = pic::leakage_crosstalk(array, i, j);
        c.total_db = power_sum_db(c.optical_db, *c.leakage_db);
      }
      report.contributions[i][j] = c;
      report.matrix_db[i][j] = c.total_db;
    }
    report.channel_focus.push_back(std::move(run.report));
  }
  return report;
}

NeighborSummary nearest_neighbor_summary(const CrosstalkReport& report) {
  NeighborSummary s;
  std::vector<double> optical, leakage;
  const std::size_t n = report.matrix_db.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (auto [a, b] : {std::pair{i, i + 1}, std::pair{i + 1, i}}) {
      const auto& c = report.contributions[a][b];
      s.worst_total_db = std::max(s.worst_total_db, c.total_db);
      optical.push_back(c.optical_db);
      if (c.leakage_db) leakage.push_back(*c.leakage_db);
    }
  s.pairs = optical.size();
  if (!optical.empty()) s.mean_optical_db = power_mean_db(optical);
  if (!leakage.empty()) s.mean_leakage_db = power_mean_db(leakage);
  return s;
}

}  // namespace ionaddr::design
