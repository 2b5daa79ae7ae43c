#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ionaddr/app.h"
#include "ionaddr/field_io.h"
#include "report.h"

namespace ionaddr::app {

using nlohmann::json;

namespace {

template <class F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

// Everything up to and including the lens stack.
struct Front {
  crystal::IonCrystal crystal;
  pic::WaveguideArraySpec array;
  double exit_angle_deg = 0.0;
};

Front front_end(const Scenario& s) {
  Front f;
  f.crystal = stage("crystal", [&] { return crystal::solve_crystal(s.trap); });
  stage("pitch_plan", [&] {
    f.array.positions = s.array.positions ? *s.array.positions
                                          : design::pitch_plan(f.crystal, s.targets.magnification);
    f.array.mode_mfd = s.array.mode_mfd ? *s.array.mode_mfd : s.targets.source_mfd;
    f.array.leakage_decay = s.array.leakage_decay;
    f.array.leakage_reference = s.array.leakage_reference;
    f.array.validate();
    return 0;
  });
  f.exit_angle_deg = stage("mirror", [&] { return pic::outcoupling_angle(s.mirror).exit_angle_deg; });
  return f;
}

design::LensStackPrescription synthesize(const Scenario& s, const Front& f) {
  return stage("synthesis", [&] {
    design::DesignTargets targets = s.targets;
    double radius = 0.0;
    for (double x : f.array.positions) radius = std::max(radius, std::abs(x));
    targets.field_radius = radius;
    return design::synthesize_lens_stack(targets, f.exit_angle_deg, s.synthesis);
  });
}

json base(const std::string& command, const Scenario& s) {
  json j = report::header(command);
  j["status"] = "ok";
  j["scenario"] = scenario_to_json(s);
  return j;
}

}  // namespace

json run_crystal(const Scenario& s) {
  const Front f = front_end(s);
  json j = base("crystal", s);
  j["crystal"] = report::crystal(f.crystal);
  j["pitch_plan"] = report::pitch_plan(f.array.positions, s.targets.magnification);
  return j;
}

json run_design(const Scenario& s, const DesignRequest& request) {
  const Front f = front_end(s);
  const auto rx = synthesize(s, f);
  const auto xt = stage("simulation", [&] {
    return design::crosstalk_matrix(rx, f.array, f.crystal, s.mirror, s.simulation, s.array.include_leakage);
  });

  json j = base("design", s);
  j["crystal"] = report::crystal(f.crystal);
  j["pitch_plan"] = report::pitch_plan(f.array.positions, s.targets.magnification);
  j["mirror"] = report::mirror(s.mirror);
  j["prescription"] = report::prescription(rx);
  json channels = json::array();
  for (const auto& c : xt.channel_focus) channels.push_back(report::channel(c, true));
  j["channels"] = channels;
  j["crosstalk"] = report::crosstalk(xt);

  if (request.dump_field) {
    const std::size_t n = f.array.channel_count();
    const std::size_t ch = request.dump_channel.value_or(n / 2);
    stage("output", [&] {
      require(ch < n, ErrorKind::kInvalidInput, fmt::format("dump channel {} out of range for {} channels", ch, n));
      const auto field = design::channel_field_at(rx, f.array, ch, s.mirror, s.simulation, xt.ion_plane_z);
      wave::write_field(*request.dump_field, field);
      return 0;
    });
    j["field_dump"] = {{"path", request.dump_field->string()},
                       {"channel", ch},
                       {"z_um", xt.ion_plane_z / 1e-6}};
  }
  return j;
}

json run_sweep(const Scenario& s, const SweepRequest& request) {
  std::string preset;
  std::vector<design::Perturbation> perturbations = s.sweeps.perturbations;
  stage("scenario", [&] {
    if (request.preset) {
      const auto p = design::sweep_preset(*request.preset);
      preset = p.name;
      perturbations = p.perturbations;
    }
    if (!request.perturbations.empty()) perturbations = request.perturbations;
    require(!perturbations.empty(), ErrorKind::kInvalidInput,
            fmt::format("no sweep parameters; give a preset ({}) or sweeps.perturbations",
                        fmt::join(design::sweep_preset_names(), ", ")));
    return 0;
  });

  const Front f = front_end(s);
  const auto rx = synthesize(s, f);
  design::SimulationOptions options = s.simulation;
  if (s.sweeps.grid) options.grid = *s.sweeps.grid;
  auto sweep = stage("simulation", [&] {
    return design::tolerance_sweep(rx, f.array, s.mirror, perturbations, options);
  });
  sweep.preset = preset;

  json j = base("sweep", s);
  j["prescription"] = report::prescription(rx);
  j["sweep"] = report::sweep(sweep);
  j["sweep"]["grid"] = {{"nx", options.grid.nx}, {"ny", options.grid.ny}, {"pitch_um", options.grid.pitch / 1e-6}};
  if (request.csv) *request.csv = report::sweep_csv(sweep);
  return j;
}

json error_report(const std::string& command, const std::string& stage_name, const Error& error) {
  json j = report::header(command);
  j["status"] = "error";
  j["error"] = {{"stage", stage_name},
                {"kind", std::string(to_string(error.kind()))},
                {"exit_code", exit_code(error.kind())},
                {"message", error.what()}};
  return j;
}

}  // namespace ionaddr::app
