// ionaddr: command-line front end for the addressing toolkit.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ionaddr/app.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ionaddr;

namespace {

fs::path default_output(const fs::path& scenario, const std::string& suffix) {
  fs::path dir = ".";
  if (const char* env = std::getenv("IONADDR_OUTPUT_DIR"); env && *env) dir = env;
  return dir / (scenario.stem().string() + suffix);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  if (!out) fail(ErrorKind::kIo, fmt::format("write to '{}' failed", path.string()));
}

void print_summary(const json& r) {
  const std::string command = r["command"];
  if (r.contains("crystal")) {
    const auto& c = r["crystal"];
    fmt::print("crystal: {} ions, length scale {:.4f} um", c["ion_count"].get<int>(),
               c["length_scale_um"].get<double>());
    const auto gaps = c["gaps_um"].get<std::vector<double>>();
    if (!gaps.empty()) {
      const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
      fmt::print(", gaps {:.3f}..{:.3f} um", *lo, *hi);
    }
    fmt::print("\n");
  }
  if (r.contains("prescription")) {
    const auto& p = r["prescription"];
    for (const auto& e : p["elements"])
      if (e["type"] == "thin_lens")
        fmt::print("lens: z = {:.3f} um, f = {:.3f} um\n", e["z_um"].get<double>(), e["focal_length_um"].get<double>());
    const auto& pred = p["predicted"];
    fmt::print("predicted: M = {:.4f}/{:.4f}, image distance {:.3f} um, NA {:.4f}\n",
               pred["magnification"][0].get<double>(), pred["magnification"][1].get<double>(),
               pred["image_distance_um"][0].get<double>(), pred["numerical_aperture"].get<double>());
  }
  if (r.contains("channels"))
    for (const auto& c : r["channels"])
      fmt::print("channel {}: z_focus {:.3f} um, MFD {:.3f} x {:.3f} um, clipped {:.2e}\n", c["channel"].get<int>(),
                 c["z_focus_um"].get<double>(), c["mfd_fit_um"][0].get<double>(), c["mfd_fit_um"][1].get<double>(),
                 c["clipped_fraction"].get<double>());
  if (r.contains("crosstalk") && r["crosstalk"]["nearest_neighbor"]["pairs"].get<int>() > 0) {
    const auto& nn = r["crosstalk"]["nearest_neighbor"];
    fmt::print("nearest-neighbor crosstalk: worst {:.2f} dB, mean optical {:.2f} dB\n",
               nn["worst_total_db"].get<double>(), nn["mean_optical_db"].get<double>());
  }
  if (command == "sweep") {
    const auto& s = r["sweep"];
    for (const auto& pt : s["points"])
      fmt::print("point {}: dz {:.3f} um, angle {:.3f}/{:.3f} deg, clipped {:.2e}{}\n", pt["values"].dump(),
                 pt["dz_focus_um"].get<double>(), pt["propagation_angle_deg"][0].get<double>(),
                 pt["propagation_angle_deg"][1].get<double>(), pt["clipped_fraction"].get<double>(),
                 pt["off_normal"].get<bool>() ? " [off normal]" : "");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Design and verification toolkit for integrated single-ion optical addressing", "ionaddr"};
  cli.require_subcommand(1);

  std::string scenario_path, report_path, dump_field, grid_override, preset, csv_path;
  std::size_t dump_channel = 0;
  bool no_timing = false;
  std::vector<std::string> params;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    sub->add_option("--report", report_path, "Report path (default <stem>.<command>.json)");
    sub->add_option("--grid", grid_override, "Simulation grid override nx,ny,pitch_um (also replaces the sweep grid)");
    sub->add_flag("--no-timing", no_timing, "Leave wall time out of the report");
  };
  auto* crystal_cmd = cli.add_subcommand("crystal", "Ion positions and waveguide pitch plan");
  add_common(crystal_cmd);
  auto* design_cmd = cli.add_subcommand("design", "Synthesize the lens stack and simulate every channel");
  add_common(design_cmd);
  auto* dump_opt = design_cmd->add_option("--dump-field", dump_field, "Write one channel's field at the ion plane (.sfld or .csv)");
  auto* dump_ch_opt = design_cmd->add_option("--dump-channel", dump_channel, "Channel to dump (default: central)");
  auto* sweep_cmd = cli.add_subcommand("sweep", "Tolerance sweep of the outermost channel");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--preset", preset, "Named sweep preset");
  sweep_cmd->add_option("--param", params, "Sweep parameter name:min:max:steps (repeatable)");
  sweep_cmd->add_option("--csv", csv_path, "Sweep table path (default <stem>.sweep.csv)");
  cli.add_subcommand("version", "Print the toolkit version");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return app::kExitParse;
  }

  if (cli.got_subcommand("version")) {
    fmt::print("ionaddr {} (report schema {})\n", app::toolkit_version(), app::kSchemaVersion);
    return app::kExitOk;
  }

  const CLI::App* sub = cli.get_subcommands().front();
  const std::string command = sub->get_name();
  const fs::path scenario_file = scenario_path;
  const fs::path report_file = report_path.empty() ? default_output(scenario_file, "." + command + ".json")
                                                   : fs::path(report_path);

  const auto start = std::chrono::steady_clock::now();
  json report;
  int code = app::kExitOk;
  try {
    try {
      app::Scenario scenario;
      std::vector<design::Perturbation> overrides;
      try {
        scenario = app::load_scenario(scenario_file);
        if (!grid_override.empty()) {
          scenario.simulation.grid = app::parse_grid_override(grid_override);
          if (command == "sweep") scenario.sweeps.grid = scenario.simulation.grid;
        }
        for (const auto& p : params) overrides.push_back(app::parse_perturbation(p));
      } catch (const Error& e) {
        throw app::StageError("scenario", e);
      }
      if (command == "crystal") {
        report = app::run_crystal(scenario);
      } else if (command == "design") {
        app::DesignRequest request;
        if (*dump_opt) request.dump_field = fs::path(dump_field);
        if (*dump_ch_opt) request.dump_channel = dump_channel;
        report = app::run_design(scenario, request);
      } else {
        app::SweepRequest request;
        if (!preset.empty()) request.preset = preset;
        request.perturbations = overrides;
        std::string csv;
        request.csv = &csv;
        report = app::run_sweep(scenario, request);
        const fs::path csv_file = csv_path.empty() ? default_output(scenario_file, ".sweep.csv") : fs::path(csv_path);
        try {
          write_text(csv_file, csv);
        } catch (const Error& e) {
          throw app::StageError("output", e);
        }
        report["sweep"]["csv"] = csv_file.string();
      }
    } catch (const app::StageError& e) {
      report = app::error_report(command, e.stage(), e);
      code = app::exit_code(e.kind());
    } catch (const Error& e) {
      report = app::error_report(command, "unknown", e);
      code = app::exit_code(e.kind());
    } catch (const std::exception& e) {
      report = app::error_report(command, "unknown", Error(ErrorKind::kInvalidInput, e.what()));
      report["error"]["kind"] = "internal";
      report["error"]["exit_code"] = app::kExitGeneric;
      code = app::kExitGeneric;
    }

    if (!no_timing)
      report["timing"] = {
          {"wall_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    write_text(report_file, report.dump(2) + "\n");
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return app::kExitIo;
  }

  if (code == app::kExitOk) {
    print_summary(report);
    fmt::print("report: {}\n", report_file.string());
  } else {
    const auto& err = report["error"];
    fmt::print(stderr, "error [{}] in stage {}: {}\n", err["kind"].get<std::string>(),
               err["stage"].get<std::string>(), err["message"].get<std::string>());
    fmt::print(stderr, "report: {}\n", report_file.string());
  }
  return code;
}
