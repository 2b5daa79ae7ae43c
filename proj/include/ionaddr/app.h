#pragma once

// Scenario files, run reports and the commands behind the ionaddr CLI.
//
// Scenario files are strict JSON: unknown keys are rejected with their path.
// Lengths are micrometers, angles degrees and frequencies hertz; every
// length key carries an _um suffix.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ionaddr/designer.h"
#include "ionaddr/error.h"

namespace ionaddr::app {

inline constexpr const char* kSchemaVersion = "1.0";
const char* toolkit_version();

struct ArrayConfig {
  std::optional<std::array<double, 2>> mode_mfd;  // defaults to targets.source_mfd
  std::optional<std::vector<double>> positions;   // defaults to the pitch plan
  double leakage_decay = pic::kDefaultLeakageDecay;
  pic::LeakageReference leakage_reference;
  bool include_leakage = true;
};

struct SweepConfig {
  std::optional<wave::Grid> grid;  // defaults to the scenario grid
  std::vector<design::Perturbation> perturbations;  // library units
};

struct Scenario {
  std::string comment;
  crystal::TrapSpec trap;
  design::DesignTargets targets;
  pic::TirMirrorSpec mirror;
  ArrayConfig array;
  design::SimulationOptions simulation;
  design::SynthesisOptions synthesis;
  SweepConfig sweeps;
};

// Throws kParse naming the offending key, or kInvalidInput naming the field
// whose invariant fails.
Scenario parse_scenario(const nlohmann::json& document);
Scenario load_scenario(const std::filesystem::path& path);
// Normalized echo in file units, with defaults filled in.
nlohmann::json scenario_to_json(const Scenario& scenario);

// "nx,ny,pitch_um"
wave::Grid parse_grid_override(const std::string& text);
// "name:min:max:steps" in file units
design::Perturbation parse_perturbation(const std::string& text);

enum ExitCode {
  kExitOk = 0,
  kExitGeneric = 1,
  kExitParse = 2,
  kExitInvariant = 3,
  kExitInfeasible = 4,
  kExitConvergence = 5,
  kExitPropagationWindow = 6,
  kExitSimulation = 7,
  kExitIo = 8,
};

int exit_code(ErrorKind kind);

// Failure inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct DesignRequest {
  std::optional<std::filesystem::path> dump_field;
  std::optional<std::size_t> dump_channel;  // defaults to a central channel
};

struct SweepRequest {
  std::optional<std::string> preset;
  std::vector<design::Perturbation> perturbations;  // overrides the scenario list
  std::string* csv = nullptr;                        // receives the sweep table
};

// Each returns the report body; failures throw StageError.
nlohmann::json run_crystal(const Scenario& scenario);
nlohmann::json run_design(const Scenario& scenario, const DesignRequest& request = {});
nlohmann::json run_sweep(const Scenario& scenario, const SweepRequest& request = {});

// Report body for a failed command.
nlohmann::json error_report(const std::string& command, const std::string& stage, const Error& error);

}  // namespace ionaddr::app
