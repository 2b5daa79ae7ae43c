// Acceptance run: one PASS/FAIL line per criterion. The end-to-end criteria
// go through the ionaddr executable exactly as a user would run it.
//
//   acceptance <output-dir>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "ionaddr/designer.h"
#include "ionaddr/gauss_optics.h"
#include "ionaddr/ion_crystal.h"
#include "ionaddr/pic_model.h"
#include "ionaddr/wave_optics.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ionaddr;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kEquilibriumAnalyticTol = 1e-10;
constexpr double kForceResidualTol = 1e-10;
constexpr double kCrystalTimeLimit_s = 1.0;

constexpr double kGapRangeLo_um = 4.84, kGapRangeHi_um = 6.62, kGapRangeTol = 0.10;

constexpr double kCriticalAngle_deg = 43.0, kCriticalAngleTol_deg = 0.2;
constexpr double kExitAngleLo_deg = 20.0, kExitAngleHi_deg = 21.5;

constexpr double kRayleigh_um = 12.6, kRayleighTol_um = 0.1;

constexpr double kFocus_um = 177.0, kFocusTol_um = 8.0;
constexpr double kFocusBandLo_um = 163.0, kFocusBandHi_um = 185.0;
constexpr double kMfdX_um = 1.3, kMfdY_um = 3.5, kMfdTol = 0.15;
constexpr double kDesignTimeLimit_s = 120.0;

constexpr double kLeakageAnchor_db = -30.0, kLeakageAnchorTol_db = 1.0;
constexpr double kNeighborLimit_db = -25.0;
constexpr double kMechanismGap_db = 10.0;
constexpr double kCrosstalkTimeLimit_s = 600.0;

constexpr double kPowerTol = 1e-6, kRoundTripTol = 1e-9, kWidthTol = 0.01, kAbcdWaveTol = 0.03;
constexpr double kPropagatorTimeLimit_s = 60.0;

constexpr double kCentroidShiftLimit_nm = 10.0;
constexpr double kSweepTimeLimit_s = 120.0;

constexpr double kLambda = 729e-9;
constexpr double kPi = 3.14159265358979323846;

int failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
  if (!pass) ++failures;
  fmt::print("{} {} {}: {}\n", pass ? "PASS" : "FAIL", criterion, what, detail);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

// Runs the CLI in `dir` so that default and relative output paths are the same
// for every run. Returns the exit status and the wall time.
struct CliRun {
  int status = -1;
  double seconds = 0.0;
};

CliRun cli(const fs::path& dir, const std::string& args) {
  fs::create_directories(dir);
  const std::string cmd = fmt::format("cd '{}' && '{}' {} > cli.log 2>&1", dir.string(), IONADDR_CLI, args);
  const auto t0 = Clock::now();
  const int raw = std::system(cmd.c_str());
  CliRun r;
  r.seconds = seconds_since(t0);
  r.status = (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json load(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

// Guards each criterion against stray exceptions so one broken stage cannot
// hide the others.
void criterion(int n, const std::string& what, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, false, what, fmt::format("exception: {}", e.what()));
  }
}

// Ion-plane channel: for even counts the one just right of center.
const json& central_channel(const json& design) {
  const auto& ch = design["channels"];
  return ch[ch.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "ionaddr_acceptance";
  fs::remove_all(out);
  fs::create_directories(out);
  const fs::path scenarios = fs::path(IONADDR_SOURCE_DIR) / "scenarios";
  const fs::path run1 = out / "run1", run2 = out / "run2";
  const std::string reference = (scenarios / "reference.json").string();

  criterion(1, "crystal equilibrium", [&] {
    const auto t0 = Clock::now();
    // Two ions sit at +-(1/4)^(1/3); three at 0 and +-(5/4)^(1/3).
    const auto p2 = crystal::equilibrium_positions(2);
    const auto p3 = crystal::equilibrium_positions(3);
    const double a2 = std::cbrt(0.25), a3 = std::cbrt(1.25);
    double analytic = std::max(std::abs(p2[0] + a2), std::abs(p2[1] - a2));
    analytic = std::max({analytic, std::abs(p3[0] + a3), std::abs(p3[1]), std::abs(p3[2] - a3)});
    // Residual recomputed here from the force balance.
    double residual = 0.0;
    for (int n = 1; n <= 50; ++n) {
      const auto u = crystal::equilibrium_positions(n);
      for (int m = 0; m < n; ++m) {
        double f = u[m];
        for (int k = 0; k < n; ++k)
          if (k != m) f += (k < m ? -1.0 : 1.0) / ((u[m] - u[k]) * (u[m] - u[k]));
        residual = std::max(residual, std::abs(f));
      }
    }
    const double t = seconds_since(t0);
    report(1, analytic < kEquilibriumAnalyticTol && residual < kForceResidualTol && t < kCrystalTimeLimit_s,
           "crystal equilibrium",
           fmt::format("analytic error {:.1e} (< {:.0e}), max residual N<=50 {:.1e} (< {:.0e}), {:.3f} s (< {} s)",
                       analytic, kEquilibriumAnalyticTol, residual, kForceResidualTol, t, kCrystalTimeLimit_s));
  });

  criterion(2, "waveguide pitch plan", [&] {
    const auto t0 = Clock::now();
    const auto ions = crystal::solve_crystal(crystal::TrapSpec{});
    const auto gaps = design::position_gaps(design::pitch_plan(ions, 0.6));
    const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
    const double t = seconds_since(t0);
    const double glo = *lo * 1e6, ghi = *hi * 1e6;
    report(2, within(glo, kGapRangeLo_um, kGapRangeTol) && within(ghi, kGapRangeHi_um, kGapRangeTol),
           "waveguide pitch plan",
           fmt::format("gaps {:.3f}..{:.3f} um vs {}..{} um +-{:.0f}%, {:.3f} s", glo, ghi, kGapRangeLo_um,
                       kGapRangeHi_um, kGapRangeTol * 100, t));
  });

  criterion(3, "TIR out-coupling", [&] {
    const pic::TirMirrorSpec mirror{};
    const double crit = pic::tir_critical_angle(mirror);
    const auto a = pic::outcoupling_angle(mirror);
    report(3,
           std::abs(crit - kCriticalAngle_deg) <= kCriticalAngleTol_deg && a.tir_satisfied &&
               a.exit_angle_deg >= kExitAngleLo_deg && a.exit_angle_deg <= kExitAngleHi_deg,
           "TIR out-coupling",
           fmt::format("critical {:.3f} deg ({}+-{}), exit {:.3f} deg in [{}, {}]", crit, kCriticalAngle_deg,
                       kCriticalAngleTol_deg, a.exit_angle_deg, kExitAngleLo_deg, kExitAngleHi_deg));
  });

  criterion(4, "Rayleigh length", [&] {
    const auto b = gauss::beam_from_mfd(1.73e-6, 3.42e-6, kLambda);
    const double zr = gauss::rayleigh_length(b, gauss::Axis::kY) * 1e6;
    // pi w0^2 / lambda with w0 = MFD/2, written out independently.
    const double oracle = kPi * std::pow(3.42e-6 / 2, 2) / kLambda * 1e6;
    report(4, std::abs(zr - kRayleigh_um) <= kRayleighTol_um && std::abs(zr - oracle) < 1e-9, "Rayleigh length",
           fmt::format("z_R {:.4f} um ({}+-{}), oracle {:.4f} um", zr, kRayleigh_um, kRayleighTol_um, oracle));
  });

  // Every shipped scenario, twice, through the CLI.
  std::vector<fs::path> shipped;
  for (const auto& e : fs::directory_iterator(scenarios))
    if (e.path().extension() == ".json") shipped.push_back(e.path());
  std::sort(shipped.begin(), shipped.end());

  struct Pair {
    std::string label;
    CliRun first, second;
    std::vector<std::string> files;
  };
  std::vector<Pair> pairs;
  for (const auto& sc : shipped)
    for (const char* command : {"crystal", "design"}) {
      const std::string args = fmt::format("{} '{}' --no-timing", command, sc.string());
      Pair p{fmt::format("{} {}", command, sc.filename().string()), cli(run1, args), cli(run2, args), {}};
      p.files.push_back(sc.stem().string() + "." + command + ".json");
      pairs.push_back(p);
    }

  criterion(5, "reference focus", [&] {
    const auto& run = *std::find_if(pairs.begin(), pairs.end(),
                                    [](const Pair& p) { return p.label == "design reference.json"; });
    if (run.first.status != 0) {
      report(5, false, "reference focus", fmt::format("design exited {}", run.first.status));
      return;
    }
    const json d = load(run1 / "reference.design.json");
    const auto& c = central_channel(d);
    const auto& third = d["channels"][2];
    const double z = c["z_focus_um"], mx = c["mfd_fit_um"][0], my = c["mfd_fit_um"][1];
    const double z3 = third["z_focus_um"], mx3 = third["mfd_fit_um"][0], my3 = third["mfd_fit_um"][1];
    bool pass = run.first.seconds < kDesignTimeLimit_s;
    for (auto [zz, xx, yy] : {std::tuple{z, mx, my}, std::tuple{z3, mx3, my3}})
      pass = pass && std::abs(zz - kFocus_um) <= kFocusTol_um && within(xx, kMfdX_um, kMfdTol) &&
             within(yy, kMfdY_um, kMfdTol);
    const bool band = z >= kFocusBandLo_um && z <= kFocusBandHi_um;
    report(5, pass, "reference focus",
           fmt::format("central z {:.2f} um ({}+-{}, band [{}, {}] {}), MFD {:.3f} x {:.3f} um; third channel z "
                       "{:.2f} um, MFD {:.3f} x {:.3f} um (vs {} x {} +-{:.0f}%); {:.1f} s (< {} s)",
                       z, kFocus_um, kFocusTol_um, kFocusBandLo_um, kFocusBandHi_um, band ? "inside" : "outside", mx,
                       my, z3, mx3, my3, kMfdX_um, kMfdY_um, kMfdTol * 100, run.first.seconds, kDesignTimeLimit_s));
  });

  criterion(6, "crosstalk", [&] {
    const pic::WaveguideArraySpec array{};
    const double anchor = pic::leakage_crosstalk_at(array, 5e-6);
    const auto& run = *std::find_if(pairs.begin(), pairs.end(),
                                    [](const Pair& p) { return p.label == "design reference.json"; });
    if (run.first.status != 0) {
      report(6, false, "crosstalk", fmt::format("design exited {}", run.first.status));
      return;
    }
    const json d = load(run1 / "reference.design.json");
    const auto& nn = d["crosstalk"]["nearest_neighbor"];
    const double worst = nn["worst_total_db"], opt = nn["mean_optical_db"], leak = nn["mean_leakage_db"];
    const bool pass = std::abs(anchor - kLeakageAnchor_db) <= kLeakageAnchorTol_db && worst <= kNeighborLimit_db &&
                      std::abs(opt - leak) <= kMechanismGap_db && run.first.seconds < kCrosstalkTimeLimit_s &&
                      d["crosstalk"]["leakage_included"].get<bool>();
    report(6, pass, "crosstalk",
           fmt::format("leakage at 5 um {:.2f} dB ({}+-{}), worst neighbor {:.2f} dB (<= {}), mean optical {:.2f} "
                       "vs leakage {:.2f} dB (within {}), {:.1f} s (< {} s)",
                       anchor, kLeakageAnchor_db, kLeakageAnchorTol_db, worst, kNeighborLimit_db, opt, leak,
                       kMechanismGap_db, run.first.seconds, kCrosstalkTimeLimit_s));
  });

  criterion(7, "propagator properties", [&] {
    const auto t0 = Clock::now();
    const wave::Grid grid{1024, 1024, 0.2e-6};
    // Power and round trip on the y mode of the source (MFD 3.42 um), whose
    // spectrum lies well inside the propagating disk.
    const auto slow = wave::make_gaussian_field(gauss::beam_from_mfd(3.42e-6, 3.42e-6, kLambda), {2, -3}, grid);
    double power = 0.0, trip = 0.0;
    for (auto model : {wave::PropagationModel::kExact, wave::PropagationModel::kParaxial}) {
      const auto g = wave::angular_spectrum_propagate(slow, 30e-6, model);
      power = std::max(power, std::abs(g.power() - slow.power()));
      const auto back = wave::angular_spectrum_propagate(g, -30e-6, model);
      double num = 0, den = 0;
      for (std::size_t i = 0; i < slow.samples.size(); ++i) {
        num += std::norm(back.samples[i] - slow.samples[i]);
        den += std::norm(slow.samples[i]);
      }
      trip = std::max(trip, std::sqrt(num / den));
    }

    // w(z) of an MFD 2 um beam: the paraxial model against the Gaussian
    // hyperbola, the exact model against sigma^2 = sigma0^2 + z^2 <tan^2>
    // integrated over the angular spectrum here.
    const double w0 = 1e-6, zr = kPi * w0 * w0 / kLambda;
    const auto f = wave::make_gaussian_field(gauss::beam_from_mfd(2 * w0, 2 * w0, kLambda), {}, grid);
    double tan2 = 0.0;
    {
      const double fmax = 1.0 / kLambda, df = 2 * fmax / 1200;
      double num = 0, den = 0;
      for (int i = 0; i < 1200; ++i)
        for (int j = 0; j < 1200; ++j) {
          const double fx = -fmax + (i + 0.5) * df, fy = -fmax + (j + 0.5) * df;
          const double s2 = kLambda * kLambda * (fx * fx + fy * fy);
          if (s2 >= 1) continue;
          const double w = std::exp(-2 * kPi * kPi * w0 * w0 * (fx * fx + fy * fy));
          num += w * kLambda * kLambda * fx * fx / (1 - s2);
          den += w;
        }
      tan2 = num / den;
    }
    const wave::SpectrumPropagator paraxial(f, wave::PropagationModel::kParaxial);
    const wave::SpectrumPropagator exact(f, wave::PropagationModel::kExact);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dist(1e-6, 60e-6);
    double width_par = 0.0, width_exact = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double z = dist(rng);
      const double hyperbola = 2 * w0 * std::sqrt(1 + z * z / (zr * zr));
      const double moment = 4 * std::sqrt(w0 * w0 / 4 + z * z * tan2);
      const auto mp = wave::spot_metrics(paraxial.at(z));
      const auto me = wave::spot_metrics(exact.at(z));
      width_par = std::max({width_par, std::abs(mp.mfd_moment[0] / hyperbola - 1),
                            std::abs(mp.mfd_moment[1] / hyperbola - 1)});
      width_exact = std::max({width_exact, std::abs(me.mfd_moment[0] / moment - 1),
                              std::abs(me.mfd_moment[1] / moment - 1)});
    }
    const double width = std::max(width_par, width_exact);

    // Reference-like two-lens stack; ABCD against the wave focus in x.
    const auto src = gauss::beam_from_mfd(2e-6, 6e-6, kLambda);
    const std::vector<gauss::AbcdElement> chain{gauss::FreeSpace{300e-6}, gauss::ThinLens{211.655e-6},
                                                gauss::FreeSpace{20e-6}, gauss::ThinLens{233.535e-6}};
    const auto image = gauss::propagate_abcd(src, chain);
    const std::vector<wave::StackElement> stack{{300e-6, {wave::ThinLensPhase{211.655e-6}}, {}},
                                                {320e-6, {wave::ThinLensPhase{233.535e-6}}, {}}};
    const auto sf = wave::make_gaussian_field(src, {}, wave::Grid{2048, 1024, 0.2e-6});
    const auto focus = wave::find_focus(sf, stack, {140e-6, 210e-6, 36}, wave::PropagationModel::kParaxial);
    const double dz = std::abs(focus.z_focus / image.x.waist_position - 1);
    const double dw = std::abs(focus.metrics.mfd_fit[0] / (2 * image.x.waist_radius) - 1);
    const double t = seconds_since(t0);
    report(7,
           power < kPowerTol && trip < kRoundTripTol && width < kWidthTol && dz < kAbcdWaveTol &&
               dw < kAbcdWaveTol && t < kPropagatorTimeLimit_s,
           "propagator properties",
           fmt::format("power {:.1e} (< {:.0e}), round trip {:.1e} (< {:.0e}), w(z) at 20 z paraxial {:.3f}% / exact "
                       "{:.3f}% (< {:.0f}%), ABCD vs wave focus {:.2f}% / MFD {:.2f}% (< {:.0f}%), {:.1f} s (< {} s)",
                       power, kPowerTol, trip, kRoundTripTol, width_par * 100, width_exact * 100, kWidthTol * 100,
                       dz * 100, dw * 100,
                       kAbcdWaveTol * 100, t, kPropagatorTimeLimit_s));
  });

  // Sweeps: prism once, wedge twice (the second run joins the determinism check).
  const std::string prism_args =
      fmt::format("sweep '{}' --preset paper-prism-mismatch --report prism.json --csv prism.csv --no-timing", reference);
  const std::string wedge_args =
      fmt::format("sweep '{}' --preset chip-wedge-budget --report wedge.json --csv wedge.csv --no-timing", reference);
  const CliRun prism = cli(run1, prism_args);
  Pair wedge{"sweep chip-wedge-budget reference.json", cli(run1, wedge_args), cli(run2, wedge_args),
             {"wedge.json", "wedge.csv"}};
  pairs.push_back(wedge);

  criterion(8, "tolerance presets", [&] {
    if (prism.status != 0 || wedge.first.status != 0) {
      report(8, false, "tolerance presets",
             fmt::format("sweep exit codes prism {} wedge {}", prism.status, wedge.first.status));
      return;
    }
    const json ps = load(run1 / "prism.json")["sweep"];
    const double nominal_clip = ps["nominal"]["clipped_fraction"];
    bool flagged = false;
    double clip = 0.0;
    for (const auto& pt : ps["points"]) {
      clip = std::max(clip, pt["clipped_fraction"].get<double>());
      flagged = flagged || (pt["off_normal"].get<bool>() && pt["excess_clipping"].get<bool>());
    }
    const json ws = load(run1 / "wedge.json")["sweep"];
    double shift = 0.0;
    bool reportable = false;
    for (const auto& pt : ws["points"]) {
      shift = std::max({shift, std::abs(pt["dcentroid_nm"][0].get<double>()),
                        std::abs(pt["dcentroid_nm"][1].get<double>())});
      reportable = reportable || pt["centroid_shift_reportable"].get<bool>();
    }
    const bool pass = flagged && clip > nominal_clip && shift < kCentroidShiftLimit_nm && !reportable &&
                      prism.seconds < kSweepTimeLimit_s && wedge.first.seconds < kSweepTimeLimit_s;
    report(8, pass, "tolerance presets",
           fmt::format("prism: clipping {:.3f} vs nominal {:.1e}, off-normal and excess flagged {}, {:.1f} s; wedge: "
                       "max centroid shift {:.2f} nm (< {}), {:.1f} s (each < {} s)",
                       clip, nominal_clip, flagged ? "yes" : "no", prism.seconds, shift, kCentroidShiftLimit_nm,
                       wedge.first.seconds, kSweepTimeLimit_s));
  });

  criterion(9, "determinism", [&] {
    int compared = 0;
    std::vector<std::string> bad;
    for (const auto& p : pairs) {
      // Infeasible scenarios must fail the same way both times.
      if (p.first.status != p.second.status) bad.push_back(p.label + " (exit code)");
      for (const auto& name : p.files) {
        const auto a = run1 / name, b = run2 / name;
        if (!fs::exists(a) || !fs::exists(b) || slurp(a) != slurp(b)) bad.push_back(p.label + " " + name);
        ++compared;
      }
    }
    report(9, bad.empty() && compared > 0, "determinism",
           bad.empty() ? fmt::format("{} outputs byte-identical over {} scenarios", compared, shipped.size())
                       : fmt::format("differs: {}", fmt::join(bad, "; ")));
  });

  fmt::print("{} of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
