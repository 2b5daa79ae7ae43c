#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "ionaddr/app.h"

namespace ionaddr::app {

using nlohmann::json;

namespace {

constexpr double kUm = 1e-6;

// Meters to micrometers for the echo, dropping the last-digit noise of the
// conversion so that 25e-6 echoes as 25.
double to_um(double meters) { return std::round(meters / kUm * 1e9) / 1e9; }

// Reads keys from one JSON object and rejects the ones never asked for.
class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), ErrorKind::kParse, fmt::format("{}: expected an object", path_));
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    require(v->is_number(), ErrorKind::kParse, fmt::format("{}: expected a number", where(key)));
    const double x = v->get<double>();
    require(std::isfinite(x), ErrorKind::kParse, fmt::format("{}: expected a finite number", where(key)));
    return x;
  }

  int integer(const std::string& key, int fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    require(v->is_number_integer(), ErrorKind::kParse, fmt::format("{}: expected an integer", where(key)));
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    require(v->is_boolean(), ErrorKind::kParse, fmt::format("{}: expected true or false", where(key)));
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    require(v->is_string(), ErrorKind::kParse, fmt::format("{}: expected a string", where(key)));
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = find(key);
    if (!v) return {};
    require(v->is_array(), ErrorKind::kParse, fmt::format("{}: expected an array of numbers", where(key)));
    std::vector<double> out;
    for (const auto& x : *v) {
      require(x.is_number(), ErrorKind::kParse, fmt::format("{}: expected an array of numbers", where(key)));
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<std::array<double, 2>> pair(const std::string& key) {
    if (!j_.contains(key)) {
      used_.insert(key);
      return std::nullopt;
    }
    const auto v = numbers(key);
    require(v.size() == 2, ErrorKind::kParse, fmt::format("{}: expected [x, y]", where(key)));
    return std::array<double, 2>{v[0], v[1]};
  }

  std::optional<Object> child(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return Object(*v, where(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      require(used_.count(key), ErrorKind::kParse, fmt::format("unknown key '{}'", where(key)));
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class F>
void check(const std::string& block, F&& validate) {
  try {
    validate();
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{}: {}", block, e.what()));
  }
}

wave::PropagationModel parse_model(const std::string& name, const std::string& where) {
  if (name == "paraxial") return wave::PropagationModel::kParaxial;
  if (name == "exact") return wave::PropagationModel::kExact;
  fail(ErrorKind::kParse, fmt::format("{}: expected \"paraxial\" or \"exact\", got \"{}\"", where, name));
}

const char* model_name(wave::PropagationModel m) {
  return m == wave::PropagationModel::kParaxial ? "paraxial" : "exact";
}

bool length_parameter(design::SweepParameter p) {
  return p == design::SweepParameter::kLateralOffset || p == design::SweepParameter::kZOffset;
}

// File units (deg / um) to library units (deg / m) and back.
design::Perturbation to_library(design::Perturbation p) {
  if (length_parameter(p.parameter)) {
    p.min *= kUm;
    p.max *= kUm;
  }
  return p;
}

design::Perturbation to_file(design::Perturbation p) {
  if (length_parameter(p.parameter)) {
    p.min = to_um(p.min);
    p.max = to_um(p.max);
  }
  return p;
}

design::SweepParameter parameter_named(const std::string& name, const std::string& where) {
  if (auto p = design::parse_sweep_parameter(name)) return *p;
  fail(ErrorKind::kParse,
       fmt::format("{}: unknown sweep parameter \"{}\" (expected prism_design_angle, source_tilt, "
                   "lateral_offset, z_offset or chip_wedge)",
                   where, name));
}

wave::Grid parse_grid(Object& o, wave::Grid g) {
  g.nx = o.integer("nx", g.nx);
  g.ny = o.integer("ny", g.ny);
  g.pitch = o.number("pitch_um", g.pitch / kUm) * kUm;
  return g;
}

json grid_json(const wave::Grid& g) { return {{"nx", g.nx}, {"ny", g.ny}, {"pitch_um", to_um(g.pitch)}}; }

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

const char* toolkit_version() { return IONADDR_VERSION; }

Scenario parse_scenario(const json& document) {
  Scenario s;
  Object root(document, "");
  s.comment = root.text("comment", "");

  if (auto o = root.child("trap")) {
    s.trap.ion_mass_amu = o->number("ion_mass_amu", s.trap.ion_mass_amu);
    s.trap.ion_charge = o->integer("ion_charge", s.trap.ion_charge);
    s.trap.axial_frequency_hz = o->number("axial_frequency_hz", s.trap.axial_frequency_hz);
    s.trap.ion_count = o->integer("ion_count", s.trap.ion_count);
    o->finish();
  }
  if (auto o = root.child("targets")) {
    auto& t = s.targets;
    t.magnification = o->number("magnification", t.magnification);
    t.numerical_aperture = o->number("numerical_aperture", t.numerical_aperture);
    t.image_distance = o->number("image_distance_um", t.image_distance / kUm) * kUm;
    if (auto m = o->pair("source_mfd_um")) t.source_mfd = {(*m)[0] * kUm, (*m)[1] * kUm};
    t.wavelength = o->number("wavelength_um", t.wavelength / kUm) * kUm;
    t.max_stack_height = o->number("max_stack_height_um", t.max_stack_height / kUm) * kUm;
    t.aperture_budget = o->number("aperture_budget_um", t.aperture_budget / kUm) * kUm;
    o->finish();
  }
  if (auto o = root.child("mirror")) {
    auto& m = s.mirror;
    m.facet_angle_deg = o->number("facet_angle_deg", m.facet_angle_deg);
    m.n_effective = o->number("n_effective", m.n_effective);
    m.n_ambient = o->number("n_ambient", m.n_ambient);
    m.n_exit = o->number("n_exit", m.n_exit);
    o->finish();
  }
  if (auto o = root.child("array")) {
    auto& a = s.array;
    if (auto m = o->pair("mode_mfd_um")) a.mode_mfd = std::array<double, 2>{(*m)[0] * kUm, (*m)[1] * kUm};
    if (o->find("positions_um")) {
      auto p = o->numbers("positions_um");
      for (double& x : p) x *= kUm;
      a.positions = p;
    }
    a.leakage_decay = o->number("leakage_decay_per_um", a.leakage_decay * kUm) / kUm;
    if (auto r = o->child("leakage_reference")) {
      a.leakage_reference.pitch = r->number("pitch_um", a.leakage_reference.pitch / kUm) * kUm;
      a.leakage_reference.crosstalk_db = r->number("crosstalk_db", a.leakage_reference.crosstalk_db);
      r->finish();
    }
    a.include_leakage = o->boolean("include_leakage", a.include_leakage);
    o->finish();
  }
  if (auto o = root.child("grid")) {
    s.simulation.grid = parse_grid(*o, s.simulation.grid);
    s.simulation.model = parse_model(o->text("propagation", model_name(s.simulation.model)),
                                     o->where("propagation"));
    o->finish();
  }
  if (auto o = root.child("focus_search")) {
    auto& f = s.simulation.focus;
    f.z_min = o->number("z_min_um", f.z_min / kUm) * kUm;
    f.z_max = o->number("z_max_um", f.z_max / kUm) * kUm;
    f.steps = o->integer("steps", f.steps);
    o->finish();
  }
  if (auto o = root.child("synthesis")) {
    auto& y = s.synthesis;
    y.lens_count = o->integer("lens_count", y.lens_count);
    y.grid_step = o->number("grid_step_um", y.grid_step / kUm) * kUm;
    y.min_focal_length = o->number("min_focal_length_um", y.min_focal_length / kUm) * kUm;
    y.max_focal_length = o->number("max_focal_length_um", y.max_focal_length / kUm) * kUm;
    y.max_lens_aperture_ratio = o->number("max_lens_aperture_ratio", y.max_lens_aperture_ratio);
    y.wedge_index_step = o->number("wedge_index_step", y.wedge_index_step);
    y.verify = o->boolean("verify", y.verify);
    o->finish();
  }
  if (auto o = root.child("sweeps")) {
    if (auto g = o->child("grid")) {
      s.sweeps.grid = parse_grid(*g, s.simulation.grid);
      g->finish();
    }
    if (const json* list = o->find("perturbations")) {
      require(list->is_array(), ErrorKind::kParse, "sweeps.perturbations: expected an array");
      for (std::size_t i = 0; i < list->size(); ++i) {
        Object p((*list)[i], fmt::format("sweeps.perturbations[{}]", i));
        design::Perturbation x;
        x.parameter = parameter_named(p.text("parameter", ""), p.where("parameter"));
        x.min = p.number("min", 0.0);
        x.max = p.number("max", x.min);
        x.steps = p.integer("steps", 1);
        p.finish();
        s.sweeps.perturbations.push_back(to_library(x));
      }
    }
    o->finish();
  }
  root.finish();

  s.synthesis.verification_grid = s.simulation.grid;
  s.synthesis.model = s.simulation.model;
  s.synthesis.ambient_index = s.mirror.n_exit;

  check("trap", [&] { s.trap.validate(); });
  check("targets", [&] { s.targets.validate(); });
  check("mirror", [&] { s.mirror.validate(); });
  check("grid", [&] { s.simulation.grid.validate(); });
  check("focus_search", [&] { s.simulation.focus.validate(); });
  check("sweeps", [&] {
    if (s.sweeps.grid) s.sweeps.grid->validate();
    for (const auto& p : s.sweeps.perturbations) p.values();
  });
  check("array", [&] {
    require(s.array.leakage_decay > 0.0, ErrorKind::kInvalidInput, "leakage_decay_per_um must be positive");
    require(s.array.leakage_reference.pitch > 0.0, ErrorKind::kInvalidInput,
            "leakage_reference.pitch_um must be positive");
    if (s.array.mode_mfd)
      require((*s.array.mode_mfd)[0] > 0.0 && (*s.array.mode_mfd)[1] > 0.0, ErrorKind::kInvalidInput,
              "mode_mfd_um must be positive");
    if (s.array.positions)
      require(static_cast<int>(s.array.positions->size()) == s.trap.ion_count, ErrorKind::kInvalidInput,
              fmt::format("positions_um lists {} channels for {} ions", s.array.positions->size(),
                          s.trap.ion_count));
  });
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, fmt::format("cannot open scenario {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    fail(ErrorKind::kParse, fmt::format("{}:{}:{}: invalid JSON ({})", path.string(), line, column, e.what()));
  }
  try {
    return parse_scenario(document);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["comment"] = s.comment;
  j["trap"] = {{"ion_mass_amu", s.trap.ion_mass_amu},
               {"ion_charge", s.trap.ion_charge},
               {"axial_frequency_hz", s.trap.axial_frequency_hz},
               {"ion_count", s.trap.ion_count}};
  const auto& t = s.targets;
  j["targets"] = {{"magnification", t.magnification},
                  {"numerical_aperture", t.numerical_aperture},
                  {"image_distance_um", to_um(t.image_distance)},
                  {"source_mfd_um", {to_um(t.source_mfd[0]), to_um(t.source_mfd[1])}},
                  {"wavelength_um", to_um(t.wavelength)},
                  {"max_stack_height_um", to_um(t.max_stack_height)},
                  {"aperture_budget_um", to_um(t.aperture_budget)}};
  j["mirror"] = {{"facet_angle_deg", s.mirror.facet_angle_deg},
                 {"n_effective", s.mirror.n_effective},
                 {"n_ambient", s.mirror.n_ambient},
                 {"n_exit", s.mirror.n_exit}};
  json array = {{"leakage_decay_per_um", std::round(s.array.leakage_decay * kUm * 1e9) / 1e9},
                {"leakage_reference",
                 {{"pitch_um", to_um(s.array.leakage_reference.pitch)},
                  {"crosstalk_db", s.array.leakage_reference.crosstalk_db}}},
                {"include_leakage", s.array.include_leakage}};
  const auto mode = s.array.mode_mfd.value_or(t.source_mfd);
  array["mode_mfd_um"] = {to_um(mode[0]), to_um(mode[1])};
  if (s.array.positions) {
    json p = json::array();
    for (double x : *s.array.positions) p.push_back(to_um(x));
    array["positions_um"] = p;
  }
  j["array"] = array;
  j["grid"] = grid_json(s.simulation.grid);
  j["grid"]["propagation"] = model_name(s.simulation.model);
  j["focus_search"] = {{"z_min_um", to_um(s.simulation.focus.z_min)},
                       {"z_max_um", to_um(s.simulation.focus.z_max)},
                       {"steps", s.simulation.focus.steps}};
  const auto& y = s.synthesis;
  j["synthesis"] = {{"lens_count", y.lens_count},
                    {"grid_step_um", to_um(y.grid_step)},
                    {"min_focal_length_um", to_um(y.min_focal_length)},
                    {"max_focal_length_um", to_um(y.max_focal_length)},
                    {"max_lens_aperture_ratio", y.max_lens_aperture_ratio},
                    {"wedge_index_step", y.wedge_index_step},
                    {"verify", y.verify}};
  json sweeps = json::object();
  if (s.sweeps.grid) sweeps["grid"] = grid_json(*s.sweeps.grid);
  json list = json::array();
  for (const auto& p : s.sweeps.perturbations) {
    const auto f = to_file(p);
    list.push_back({{"parameter", design::to_string(f.parameter)}, {"min", f.min}, {"max", f.max}, {"steps", f.steps}});
  }
  sweeps["perturbations"] = list;
  j["sweeps"] = sweeps;
  return j;
}

wave::Grid parse_grid_override(const std::string& text) {
  wave::Grid g;
  char extra = 0;
  std::istringstream in(text);
  char c1 = 0, c2 = 0;
  in >> g.nx >> c1 >> g.ny >> c2 >> g.pitch;
  require(in && c1 == ',' && c2 == ',' && !(in >> extra), ErrorKind::kParse,
          fmt::format("--grid expects nx,ny,pitch_um, got \"{}\"", text));
  g.pitch *= kUm;
  check("--grid", [&] { g.validate(); });
  return g;
}

design::Perturbation parse_perturbation(const std::string& text) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ':')) parts.push_back(part);
  require(parts.size() == 4, ErrorKind::kParse,
          fmt::format("--param expects name:min:max:steps, got \"{}\"", text));
  design::Perturbation p;
  p.parameter = parameter_named(parts[0], "--param");
  try {
    std::size_t used = 0;
    p.min = std::stod(parts[1], &used);
    require(used == parts[1].size(), ErrorKind::kParse, "");
    p.max = std::stod(parts[2], &used);
    require(used == parts[2].size(), ErrorKind::kParse, "");
    p.steps = std::stoi(parts[3], &used);
    require(used == parts[3].size(), ErrorKind::kParse, "");
  } catch (const std::exception&) {
    fail(ErrorKind::kParse, fmt::format("--param \"{}\": min, max and steps must be numbers", text));
  }
  check("--param", [&] { p.values(); });
  return to_library(p);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return kExitParse;
    case ErrorKind::kInvalidInput:
    case ErrorKind::kInvalidGeometry: return kExitInvariant;
    case ErrorKind::kInfeasible: return kExitInfeasible;
    case ErrorKind::kConvergence: return kExitConvergence;
    case ErrorKind::kPropagationWindow: return kExitPropagationWindow;
    case ErrorKind::kSingularConfiguration:
    case ErrorKind::kSampling:
    case ErrorKind::kFocusNotBracketed:
    case ErrorKind::kNoTir:
    case ErrorKind::kTrappedRay: return kExitSimulation;
    case ErrorKind::kIo: return kExitIo;
  }
  return kExitGeneric;
}

}  // namespace ionaddr::app
