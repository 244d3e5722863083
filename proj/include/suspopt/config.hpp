#pragma once

// Run configuration: one JSON file per run. Every key has a per-case default,
// unknown keys are rejected, and relative file paths are taken relative to the
// config file. to_json() echoes the fully resolved configuration.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "suspopt/analysis.hpp"
#include "suspopt/characteristics.hpp"
#include "suspopt/errors.hpp"
#include "suspopt/io.hpp"
#include "suspopt/objectives.hpp"
#include "suspopt/optimizer.hpp"
#include "suspopt/road.hpp"
#include "suspopt/simulate.hpp"
#include "suspopt/vehicle.hpp"

namespace suspopt {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Characteristic sources

/// Where a spring or damper law came from, kept so the manifest can echo it.
struct CurveSource {
  std::string kind;  // linear | table | exponential | samples
  double coefficient = 0.0;
  std::vector<double> input;   // table deflections
  std::vector<double> force;   // table forces
  DamperCurve exponential{};
  std::array<double, 2> velocity_range{-1.0, 1.0};
  std::filesystem::path file;  // as written in the config
  bool normalize = false;
  std::optional<double> scale;
};

struct VehicleConfig {
  double sprung_mass = 450.0;
  double unsprung_mass = 45.0;
  double tire_stiffness = 200000.0;
  double tire_damping = 150.0;      // quarter car only
  double roll_inertia = 250.0;      // half car only
  double axle_roll_inertia = 40.0;  // half car only
  double track_width = 1.6;         // half car only
  DeflectionLimits deflection_limits{};
};

enum class TrackLayout { single, identical, independent };

inline std::string to_string(TrackLayout t) {
  switch (t) {
    case TrackLayout::single: return "single";
    case TrackLayout::identical: return "identical";
    case TrackLayout::independent: return "independent";
  }
  return "?";
}

struct RoadConfig {
  std::string kind = "random";  // random | chirp | file
  std::uint64_t seed = 1;
  std::uint64_t right_seed = 2;
  double roughness = 16e-6;
  double roughness_multiplier = 1.0;
  double speed = 20.0;
  double f0 = 0.1;
  double f1 = 20.0;
  double amplitude = 0.01;
  std::optional<double> duration;  // default: simulation duration
  std::optional<double> dt;        // default: simulation step
  TrackLayout tracks = TrackLayout::single;
  std::filesystem::path file;
};

struct ObjectiveConfig {
  std::array<double, 3> weights{0.5, 0.5, 0.0};
  std::optional<std::array<double, 3>> normalization;  // empty: values at the initial design
  std::string weighting = "wk";
};

/// Linear suspension whose wheel acceleration quarter-1 tries to follow.
struct ReferenceConfig {
  double stiffness = 26000.0;
  double damping = 2400.0;
};

struct OptimizerConfig {
  std::optional<std::array<double, 2>> initial;  // empty: 1, 1 (half-3: the baseline optimum)
  std::array<double, 2> lower{0.2, 0.2};
  std::array<double, 2> upper{5.0, 5.0};
  OptimizerOptions options{};
};

struct BodeConfig {
  bool enabled = false;
  BodeOptions options{};
  std::vector<BodeOutput> outputs{BodeOutput::body_displacement, BodeOutput::unsprung_displacement};
};

struct GridConfig {
  bool enabled = false;
  GridAxis spring{0.2, 5.0, 21};
  GridAxis damper{0.2, 5.0, 21};
};

struct RunConfig {
  CaseId scenario = CaseId::quarter2;
  VehicleConfig vehicle;
  std::filesystem::path vehicle_file;
  CurveSource spring_source;
  CurveSource damper_source;
  ScaledCharacteristic spring{LinearLaw(22000.0)};
  ScaledCharacteristic damper{LinearLaw(1800.0)};
  RoadConfig road;
  SimulationSettings simulation{};
  ObjectiveConfig objective;
  ReferenceConfig reference;
  std::optional<std::filesystem::path> baseline;  // resolved path to a half-2 optimum.json
  OptimizerConfig optimizer;
  BodeConfig bode;
  GridConfig grid;
  std::filesystem::path output;
  std::filesystem::path base_dir;  // directory of the config file
};

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline double get_number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + "." + key + " must be finite");
  return d;
}

inline double get_positive(const json& obj, const char* key, double fallback, const std::string& where) {
  const double d = get_number(obj, key, fallback, where);
  if (!(d > 0.0)) throw ConfigError(where + "." + key + " must be positive");
  return d;
}

inline std::uint64_t get_count(const json& obj, const char* key, std::uint64_t fallback,
                               const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  // Values built in code arrive as signed integers, parsed text as unsigned.
  const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (!ok) throw ConfigError(where + "." + key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline bool get_bool(const json& obj, const char* key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  return obj.at(key).get<bool>();
}

inline std::string get_string(const json& obj, const char* key, const std::string& fallback,
                              const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
  return obj.at(key).get<std::string>();
}

inline std::vector<double> get_numbers(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + "." + key + " must be a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

template <std::size_t N>
std::array<double, N> get_fixed(const json& obj, const char* key, const std::string& where) {
  const auto v = get_numbers(obj, key, where);
  if (v.size() != N) {
    throw ConfigError(where + "." + key + " must have " + std::to_string(N) + " entries");
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

// Representative curve shapes, normalized to unit peak force.
inline CurveSource default_nonlinear_damper() {
  CurveSource s;
  s.kind = "exponential";
  s.exponential = DamperCurve{-0.1411, 1.2, 0.1411, 2.0};
  s.scale = 3987.0;  // slope at v = 0 is then about 1800 N s/m
  return s;
}

inline CurveSource default_spring_table() {
  CurveSource s;
  s.kind = "table";
  s.input = {0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35};
  s.force = {0.0, 0.09, 0.19, 0.30, 0.43, 0.59, 0.78, 1.0};
  s.scale = 10000.0;
  return s;
}

inline CurveSource linear_source(double c) {
  CurveSource s;
  s.kind = "linear";
  s.coefficient = c;
  return s;
}

inline CurveSource parse_curve(const json& obj, bool spring, const CurveSource& fallback,
                               const std::string& where) {
  if (obj.is_null()) return fallback;
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  CurveSource s;
  s.kind = get_string(obj, "kind", "", where);
  if (s.kind.empty()) throw ConfigError(where + ".kind is required");
  std::set<std::string> keys{"kind", "scale", "normalize"};
  if (s.kind == "linear") {
    keys.insert("coefficient");
    check_keys(obj, keys, where);
    if (!obj.contains("coefficient")) throw ConfigError(where + ".coefficient is required");
    s.coefficient = get_positive(obj, "coefficient", 0.0, where);
  } else if (spring && s.kind == "table") {
    keys.insert({"deflection", "force", "file"});
    check_keys(obj, keys, where);
    if (obj.contains("file")) {
      if (obj.contains("deflection") || obj.contains("force")) {
        throw ConfigError(where + ": give either a file or inline deflection/force, not both");
      }
      s.file = get_string(obj, "file", "", where);
    } else {
      if (!obj.contains("deflection") || !obj.contains("force")) {
        throw ConfigError(where + " needs deflection and force lists (or a file)");
      }
      s.input = get_numbers(obj, "deflection", where);
      s.force = get_numbers(obj, "force", where);
    }
  } else if (!spring && s.kind == "exponential") {
    keys.insert({"decay_amplitude", "decay_rate", "growth_amplitude", "growth_rate", "velocity_range"});
    check_keys(obj, keys, where);
    for (const char* k : {"decay_amplitude", "decay_rate", "growth_amplitude", "growth_rate"}) {
      if (!obj.contains(k)) throw ConfigError(where + "." + k + " is required");
    }
    s.exponential = DamperCurve{get_number(obj, "decay_amplitude", 0, where),
                                get_number(obj, "decay_rate", 0, where),
                                get_number(obj, "growth_amplitude", 0, where),
                                get_number(obj, "growth_rate", 0, where)};
    if (obj.contains("velocity_range")) s.velocity_range = get_fixed<2>(obj, "velocity_range", where);
  } else if (!spring && s.kind == "samples") {
    keys.insert({"file", "velocity_range"});
    check_keys(obj, keys, where);
    s.file = get_string(obj, "file", "", where);
    if (s.file.empty()) throw ConfigError(where + ".file is required");
    if (obj.contains("velocity_range")) s.velocity_range = get_fixed<2>(obj, "velocity_range", where);
  } else {
    throw ConfigError(where + ".kind '" + s.kind + "' is not a " + (spring ? "spring" : "damper") +
                      " law (spring: linear, table; damper: linear, exponential, samples)");
  }
  s.normalize = get_bool(obj, "normalize", false, where);
  if (obj.contains("scale")) s.scale = get_positive(obj, "scale", 1.0, where);
  return s;
}

/// Physical characteristic from its source. Normalizing moves the peak force
/// into the scale; an explicit scale then replaces it.
inline ScaledCharacteristic build_curve(const CurveSource& s, const std::filesystem::path& base_dir,
                                        const std::string& where) {
  try {
    std::optional<ScaledCharacteristic> c;
    if (s.kind == "linear") {
      c.emplace(LinearLaw(s.coefficient));
    } else if (s.kind == "table") {
      std::vector<double> x = s.input, f = s.force;
      if (!s.file.empty()) {
        const auto t = io::read_table(resolve(base_dir, s.file), 2);
        x = t.columns[0];
        f = t.columns[1];
      }
      SpringTable table(std::move(x), std::move(f));
      if (s.normalize) {
        c.emplace(normalized(table));
      } else {
        c.emplace(std::move(table));
      }
    } else {
      DamperCurve curve = s.exponential;
      if (s.kind == "samples") {
        const auto t = io::read_table(resolve(base_dir, s.file), 2);
        std::vector<DamperSample> samples;
        for (std::size_t i = 0; i < t.rows(); ++i) samples.push_back({t.columns[0][i], t.columns[1][i]});
        curve = fit_damper_curve(samples).curve;
      }
      if (s.normalize) {
        c.emplace(normalized(curve, s.velocity_range[0], s.velocity_range[1]));
      } else {
        c.emplace(curve);
      }
    }
    if (s.scale) return ScaledCharacteristic(c->base(), *s.scale);
    return *c;
  } catch (const IoError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline json curve_to_json(const CurveSource& s) {
  json j;
  j["kind"] = s.kind;
  if (s.kind == "linear") j["coefficient"] = s.coefficient;
  if (s.kind == "table") {
    if (!s.file.empty()) {
      j["file"] = s.file.generic_string();
    } else {
      j["deflection"] = s.input;
      j["force"] = s.force;
    }
  }
  if (s.kind == "exponential") {
    j["decay_amplitude"] = s.exponential.decay_amplitude;
    j["decay_rate"] = s.exponential.decay_rate;
    j["growth_amplitude"] = s.exponential.growth_amplitude;
    j["growth_rate"] = s.exponential.growth_rate;
  }
  if (s.kind == "samples") j["file"] = s.file.generic_string();
  if (s.kind == "exponential" || s.kind == "samples") j["velocity_range"] = s.velocity_range;
  j["normalize"] = s.normalize;
  if (s.scale) j["scale"] = *s.scale;
  return j;
}

inline BodeOutput parse_bode_output(const std::string& s) {
  if (s == "body_displacement") return BodeOutput::body_displacement;
  if (s == "unsprung_displacement") return BodeOutput::unsprung_displacement;
  throw ConfigError("unknown bode output '" + s + "' (body_displacement, unsprung_displacement)");
}

inline GridAxis parse_axis(const json& obj, const char* key, const GridAxis& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto v = get_fixed<3>(obj, key, "grid");
  const double n = v[2];
  if (!(n >= 2.0) || n != std::floor(n)) throw ConfigError(std::string("grid.") + key + " resolution must be an integer >= 2");
  if (!(v[1] > v[0]) || !(v[0] > 0.0)) throw ConfigError(std::string("grid.") + key + " range must satisfy 0 < lo < hi");
  return GridAxis{v[0], v[1], static_cast<std::size_t>(n)};
}

inline void parse_vehicle(const json& obj, bool half, VehicleConfig& v, const std::string& where) {
  std::set<std::string> keys{"sprung_mass", "unsprung_mass", "tire_stiffness", "deflection_limits", "file"};
  if (half) {
    keys.insert({"roll_inertia", "axle_roll_inertia", "track_width"});
  } else {
    keys.insert("tire_damping");
  }
  check_keys(obj, keys, where);
  v.sprung_mass = get_positive(obj, "sprung_mass", v.sprung_mass, where);
  v.unsprung_mass = get_positive(obj, "unsprung_mass", v.unsprung_mass, where);
  v.tire_stiffness = get_positive(obj, "tire_stiffness", v.tire_stiffness, where);
  if (half) {
    v.roll_inertia = get_positive(obj, "roll_inertia", v.roll_inertia, where);
    v.axle_roll_inertia = get_positive(obj, "axle_roll_inertia", v.axle_roll_inertia, where);
    v.track_width = get_positive(obj, "track_width", v.track_width, where);
  } else {
    v.tire_damping = get_number(obj, "tire_damping", v.tire_damping, where);
    if (v.tire_damping < 0.0) throw ConfigError(where + ".tire_damping must be >= 0");
  }
  if (obj.contains("deflection_limits")) {
    const auto l = get_fixed<2>(obj, "deflection_limits", where);
    if (!(l[0] < l[1])) throw ConfigError(where + ".deflection_limits must be increasing");
    v.deflection_limits = DeflectionLimits{l[0], l[1]};
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace detail

/// Defaults that differ between the six cases.
inline RunConfig case_defaults(CaseId id) {
  RunConfig c;
  c.scenario = id;
  c.output = std::filesystem::path("runs") / to_string(id);
  const bool half = is_half_car(id);
  if (half) {
    c.vehicle.sprung_mass = 900.0;
    c.vehicle.unsprung_mass = 90.0;
    c.road.tracks = TrackLayout::independent;
  }
  c.spring_source = detail::linear_source(22000.0);
  c.damper_source = detail::linear_source(1800.0);
  switch (id) {
    case CaseId::quarter1:
      c.road.kind = "chirp";
      break;
    case CaseId::quarter2:
    case CaseId::half1:
      break;
    case CaseId::quarter3:
      c.damper_source = detail::default_nonlinear_damper();
      break;
    case CaseId::half2:
      // Same two-term index as half-1; the roll term enters only in half-3.
      c.spring_source = detail::default_spring_table();
      c.damper_source = detail::default_nonlinear_damper();
      c.objective.weights = {0.5, 0.5, 0.0};
      c.grid.enabled = true;
      break;
    case CaseId::half3:
      c.spring_source = detail::default_spring_table();
      c.damper_source = detail::default_nonlinear_damper();
      c.objective.weights = {0.4, 0.4, 0.2};
      c.road.roughness_multiplier = 4.0;
      break;
  }
  if (id == CaseId::half1) c.grid.enabled = true;
  return c;
}

/// Parses a configuration document. base_dir anchors relative file paths.
inline RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  check_keys(doc, {"scenario", "vehicle", "spring", "damper", "road", "simulation", "objective",
                   "reference", "baseline", "optimizer", "bode", "grid", "output"},
             "config");
  if (!doc.contains("scenario") || !doc.at("scenario").is_string()) {
    throw ConfigError("config.scenario is required (quarter-1 .. half-3)");
  }
  RunConfig c = case_defaults(parse_case(doc.at("scenario").get<std::string>()));
  c.base_dir = base_dir;
  const bool half = is_half_car(c.scenario);

  if (doc.contains("vehicle")) {
    const json& v = doc.at("vehicle");
    check_keys(v, {"sprung_mass", "unsprung_mass", "tire_stiffness", "tire_damping", "roll_inertia",
                   "axle_roll_inertia", "track_width", "deflection_limits", "file"},
               "vehicle");
    if (v.contains("file")) {
      c.vehicle_file = get_string(v, "file", "", "vehicle");
      const json from_file = read_json_file(resolve(base_dir, c.vehicle_file));
      if (from_file.contains("file")) throw ConfigError("vehicle file may not reference another file");
      parse_vehicle(from_file, half, c.vehicle, c.vehicle_file.string());
    }
    parse_vehicle(v, half, c.vehicle, "vehicle");
  }

  if (doc.contains("spring")) c.spring_source = parse_curve(doc.at("spring"), true, c.spring_source, "spring");
  if (doc.contains("damper")) c.damper_source = parse_curve(doc.at("damper"), false, c.damper_source, "damper");

  if (doc.contains("simulation")) {
    const json& s = doc.at("simulation");
    check_keys(s, {"dt", "duration", "t_skip"}, "simulation");
    c.simulation.dt = get_positive(s, "dt", c.simulation.dt, "simulation");
    c.simulation.duration = get_positive(s, "duration", c.simulation.duration, "simulation");
    c.simulation.t_skip = get_number(s, "t_skip", c.simulation.t_skip, "simulation");
  }
  if (!(c.simulation.t_skip >= 0.0) || !(c.simulation.t_skip < c.simulation.duration)) {
    throw ConfigError("simulation.t_skip must lie in [0, duration)");
  }

  if (doc.contains("road")) {
    const json& r = doc.at("road");
    auto& road = c.road;
    road.kind = get_string(r, "kind", road.kind, "road");
    std::set<std::string> keys{"kind", "duration", "dt", "tracks"};
    if (road.kind == "random") {
      keys.insert({"seed", "right_seed", "roughness", "roughness_multiplier", "speed"});
    } else if (road.kind == "chirp") {
      keys.insert({"f0", "f1", "amplitude"});
    } else if (road.kind == "file") {
      keys.insert("file");
    } else {
      throw ConfigError("road.kind must be random, chirp or file");
    }
    check_keys(r, keys, "road");
    road.seed = get_count(r, "seed", road.seed, "road");
    road.right_seed = get_count(r, "right_seed", road.seed + 1, "road");
    road.roughness = get_positive(r, "roughness", road.roughness, "road");
    road.roughness_multiplier = get_positive(r, "roughness_multiplier", road.roughness_multiplier, "road");
    road.speed = get_positive(r, "speed", road.speed, "road");
    road.f0 = get_positive(r, "f0", road.f0, "road");
    road.f1 = get_positive(r, "f1", road.f1, "road");
    road.amplitude = get_positive(r, "amplitude", road.amplitude, "road");
    if (r.contains("duration")) road.duration = get_positive(r, "duration", 0.0, "road");
    if (r.contains("dt")) road.dt = get_positive(r, "dt", 0.0, "road");
    if (r.contains("file")) road.file = get_string(r, "file", "", "road");
    if (road.kind == "file" && road.file.empty()) throw ConfigError("road.file is required for kind file");
    if (r.contains("tracks")) {
      const std::string t = get_string(r, "tracks", "", "road");
      if (t == "single") {
        road.tracks = TrackLayout::single;
      } else if (t == "identical") {
        road.tracks = TrackLayout::identical;
      } else if (t == "independent") {
        road.tracks = TrackLayout::independent;
      } else {
        throw ConfigError("road.tracks must be single, identical or independent");
      }
    }
    if (road.kind == "chirp" && !(road.f1 > road.f0)) throw ConfigError("road.f1 must exceed road.f0");
  }
  if (half && c.road.tracks == TrackLayout::single) {
    throw ConfigError("half-car scenarios need identical or independent tracks");
  }
  if (!half && c.road.tracks != TrackLayout::single) {
    throw ConfigError("quarter-car scenarios use a single track");
  }
  if (c.road.tracks == TrackLayout::independent && c.road.kind != "random") {
    throw ConfigError("independent tracks need a random road");
  }

  if (doc.contains("objective")) {
    const json& o = doc.at("objective");
    check_keys(o, {"weights", "normalization", "weighting"}, "objective");
    if (o.contains("weights")) {
      const auto w = get_numbers(o, "weights", "objective");
      if (w.size() < 2 || w.size() > 3) throw ConfigError("objective.weights needs 2 or 3 entries");
      c.objective.weights = {w[0], w[1], w.size() == 3 ? w[2] : 0.0};
    }
    if (o.contains("normalization")) {
      const auto& n = o.at("normalization");
      if (n.is_string()) {
        if (n.get<std::string>() != "initial") {
          throw ConfigError("objective.normalization must be \"initial\" or a list of 3 numbers");
        }
        c.objective.normalization.reset();
      } else {
        c.objective.normalization = get_fixed<3>(o, "normalization", "objective");
      }
    }
    c.objective.weighting = get_string(o, "weighting", c.objective.weighting, "objective");
  }
  for (double w : c.objective.weights) {
    if (!(w >= 0.0)) throw ConfigError("objective weights must be >= 0");
  }
  if (c.objective.weighting != "wk" && c.objective.weighting != "identity") {
    throw ConfigError("objective.weighting must be wk or identity");
  }
  if (c.scenario == CaseId::half1 && c.objective.weights[2] != 0.0) {
    throw ConfigError("half-1 uses no roll term: the third weight must be 0");
  }
  if (c.scenario != CaseId::half2 && c.scenario != CaseId::half3 && c.scenario != CaseId::half1 &&
      c.objective.weights[2] != 0.0) {
    throw ConfigError("quarter-car objectives have two terms; the third weight must be 0");
  }

  if (doc.contains("reference")) {
    if (c.scenario != CaseId::quarter1) throw ConfigError("reference applies to quarter-1 only");
    const json& r = doc.at("reference");
    check_keys(r, {"stiffness", "damping"}, "reference");
    c.reference.stiffness = get_positive(r, "stiffness", c.reference.stiffness, "reference");
    c.reference.damping = get_positive(r, "damping", c.reference.damping, "reference");
  }

  if (doc.contains("baseline")) {
    if (c.scenario != CaseId::half3) throw ConfigError("baseline applies to half-3 only");
    const std::string b = get_string(doc, "baseline", "", "config");
    if (!b.empty()) c.baseline = resolve(base_dir, b);
  }

  if (doc.contains("optimizer")) {
    const json& o = doc.at("optimizer");
    check_keys(o, {"initial", "lower", "upper", "gradient_tolerance", "step_tolerance", "max_evaluations",
                   "max_iterations", "fd_relative_step", "parallel_gradient"},
               "optimizer");
    auto& opt = c.optimizer;
    if (o.contains("initial")) opt.initial = get_fixed<2>(o, "initial", "optimizer");
    if (o.contains("lower")) opt.lower = get_fixed<2>(o, "lower", "optimizer");
    if (o.contains("upper")) opt.upper = get_fixed<2>(o, "upper", "optimizer");
    opt.options.gradient_tolerance =
        get_positive(o, "gradient_tolerance", opt.options.gradient_tolerance, "optimizer");
    opt.options.step_tolerance = get_positive(o, "step_tolerance", opt.options.step_tolerance, "optimizer");
    opt.options.max_evaluations = get_count(o, "max_evaluations", opt.options.max_evaluations, "optimizer");
    opt.options.max_iterations = get_count(o, "max_iterations", opt.options.max_iterations, "optimizer");
    opt.options.fd_relative_step =
        get_positive(o, "fd_relative_step", opt.options.fd_relative_step, "optimizer");
    opt.options.parallel_gradient =
        get_bool(o, "parallel_gradient", opt.options.parallel_gradient, "optimizer");
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& o = c.optimizer;
    if (!(o.lower[i] > 0.0) || !(o.upper[i] > o.lower[i])) {
      throw ConfigError("optimizer bounds must satisfy 0 < lower < upper");
    }
    if (o.initial && !((*o.initial)[i] >= o.lower[i] && (*o.initial)[i] <= o.upper[i])) {
      throw ConfigError("optimizer.initial lies outside the bounds");
    }
  }

  if (doc.contains("bode")) {
    const json& b = doc.at("bode");
    check_keys(b, {"enabled", "f0", "f1", "amplitude", "duration", "segment_seconds", "overlap", "outputs"},
               "bode");
    auto& bo = c.bode;
    bo.enabled = get_bool(b, "enabled", true, "bode");
    bo.options.chirp.f0 = get_positive(b, "f0", bo.options.chirp.f0, "bode");
    bo.options.chirp.f1 = get_positive(b, "f1", bo.options.chirp.f1, "bode");
    bo.options.chirp.amplitude = get_positive(b, "amplitude", bo.options.chirp.amplitude, "bode");
    bo.options.chirp.duration = get_positive(b, "duration", bo.options.chirp.duration, "bode");
    bo.options.segment_seconds = get_positive(b, "segment_seconds", bo.options.segment_seconds, "bode");
    bo.options.overlap = get_number(b, "overlap", bo.options.overlap, "bode");
    if (!(bo.options.overlap >= 0.0 && bo.options.overlap < 1.0)) throw ConfigError("bode.overlap must be in [0, 1)");
    if (!(bo.options.chirp.f1 > bo.options.chirp.f0)) throw ConfigError("bode.f1 must exceed bode.f0");
    if (b.contains("outputs")) {
      if (!b.at("outputs").is_array() || b.at("outputs").empty()) throw ConfigError("bode.outputs must be a non-empty list");
      bo.outputs.clear();
      for (const auto& e : b.at("outputs")) {
        if (!e.is_string()) throw ConfigError("bode.outputs must be strings");
        bo.outputs.push_back(parse_bode_output(e.get<std::string>()));
      }
    }
  }
  // The sweep uses the run's integration step and transient trim.
  c.bode.options.chirp.dt = c.simulation.dt;
  c.bode.options.sim = SimulationSettings{c.simulation.dt, c.bode.options.chirp.duration, c.simulation.t_skip};

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    check_keys(g, {"enabled", "spring", "damper"}, "grid");
    c.grid.enabled = get_bool(g, "enabled", true, "grid");
    c.grid.spring = parse_axis(g, "spring", c.grid.spring);
    c.grid.damper = parse_axis(g, "damper", c.grid.damper);
  }

  if (doc.contains("output")) c.output = get_string(doc, "output", "", "config");
  if (c.output.empty()) throw ConfigError("config.output must not be empty");

  c.spring = build_curve(c.spring_source, base_dir, "spring");
  c.damper = build_curve(c.damper_source, base_dir, "damper");
  if (!c.spring.is_spring_law()) throw ConfigError("spring: not a spring law");
  if (!c.damper.is_damper_law()) throw ConfigError("damper: not a damper law");
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  const json doc = detail::read_json_file(path);
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(doc, base);
}

/// The resolved configuration, every default filled in.
inline json to_json(const RunConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  json v;
  v["sprung_mass"] = c.vehicle.sprung_mass;
  v["unsprung_mass"] = c.vehicle.unsprung_mass;
  v["tire_stiffness"] = c.vehicle.tire_stiffness;
  if (is_half_car(c.scenario)) {
    v["roll_inertia"] = c.vehicle.roll_inertia;
    v["axle_roll_inertia"] = c.vehicle.axle_roll_inertia;
    v["track_width"] = c.vehicle.track_width;
  } else {
    v["tire_damping"] = c.vehicle.tire_damping;
  }
  v["deflection_limits"] = {c.vehicle.deflection_limits.lower, c.vehicle.deflection_limits.upper};
  if (!c.vehicle_file.empty()) v["file"] = c.vehicle_file.generic_string();
  j["vehicle"] = v;
  j["spring"] = detail::curve_to_json(c.spring_source);
  j["damper"] = detail::curve_to_json(c.damper_source);

  json r;
  r["kind"] = c.road.kind;
  r["tracks"] = to_string(c.road.tracks);
  r["duration"] = c.road.duration.value_or(c.simulation.duration);
  r["dt"] = c.road.dt.value_or(c.simulation.dt);
  if (c.road.kind == "random") {
    r["seed"] = c.road.seed;
    if (c.road.tracks == TrackLayout::independent) r["right_seed"] = c.road.right_seed;
    r["roughness"] = c.road.roughness;
    r["roughness_multiplier"] = c.road.roughness_multiplier;
    r["speed"] = c.road.speed;
  } else if (c.road.kind == "chirp") {
    r["f0"] = c.road.f0;
    r["f1"] = c.road.f1;
    r["amplitude"] = c.road.amplitude;
  } else {
    r["file"] = c.road.file.generic_string();
  }
  j["road"] = r;

  j["simulation"] = {{"dt", c.simulation.dt}, {"duration", c.simulation.duration}, {"t_skip", c.simulation.t_skip}};
  json o;
  o["weights"] = c.objective.weights;
  if (c.objective.normalization) {
    o["normalization"] = *c.objective.normalization;
  } else {
    o["normalization"] = "initial";
  }
  o["weighting"] = c.objective.weighting;
  j["objective"] = o;
  if (c.scenario == CaseId::quarter1) {
    j["reference"] = {{"stiffness", c.reference.stiffness}, {"damping", c.reference.damping}};
  }
  if (c.scenario == CaseId::half3) {
    j["baseline"] = c.baseline ? json(c.baseline->generic_string()) : json(nullptr);
  }
  json opt;
  if (c.optimizer.initial) opt["initial"] = *c.optimizer.initial;
  opt["lower"] = c.optimizer.lower;
  opt["upper"] = c.optimizer.upper;
  const auto& oo = c.optimizer.options;
  opt["gradient_tolerance"] = oo.gradient_tolerance;
  opt["step_tolerance"] = oo.step_tolerance;
  opt["max_evaluations"] = oo.max_evaluations;
  opt["max_iterations"] = oo.max_iterations;
  opt["fd_relative_step"] = oo.fd_relative_step;
  opt["parallel_gradient"] = oo.parallel_gradient;
  j["optimizer"] = opt;

  json b;
  b["enabled"] = c.bode.enabled;
  b["f0"] = c.bode.options.chirp.f0;
  b["f1"] = c.bode.options.chirp.f1;
  b["amplitude"] = c.bode.options.chirp.amplitude;
  b["duration"] = c.bode.options.chirp.duration;
  b["segment_seconds"] = c.bode.options.segment_seconds;
  b["overlap"] = c.bode.options.overlap;
  json outs = json::array();
  for (auto out : c.bode.outputs) outs.push_back(to_string(out));
  b["outputs"] = outs;
  j["bode"] = b;

  auto axis = [](const GridAxis& a) { return json::array({a.lower, a.upper, a.resolution}); };
  j["grid"] = {{"enabled", c.grid.enabled}, {"spring", axis(c.grid.spring)}, {"damper", axis(c.grid.damper)}};
  j["output"] = c.output.generic_string();
  return j;
}

}  // namespace suspopt
