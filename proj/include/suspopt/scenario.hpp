#pragma once

// End-to-end runs of the six cases: road, reference/baseline, optimization,
// and every result file. Also the bode, grid, compare and fit-damper commands.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "suspopt/config.hpp"

namespace suspopt {

class ComparisonError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Building blocks

inline QuarterCar make_quarter_car(const RunConfig& c, double spring_scale, double damper_scale) {
  QuarterCarParams p;
  p.sprung_mass = c.vehicle.sprung_mass;
  p.unsprung_mass = c.vehicle.unsprung_mass;
  p.tire_stiffness = c.vehicle.tire_stiffness;
  p.tire_damping = c.vehicle.tire_damping;
  p.deflection_limits = c.vehicle.deflection_limits;
  p.spring = scale_characteristic(c.spring, spring_scale);
  p.damper = scale_characteristic(c.damper, damper_scale);
  return QuarterCar(std::move(p));
}

inline HalfCar make_half_car(const RunConfig& c, double spring_scale, double damper_scale) {
  auto p = HalfCarParams::mirrored(c.vehicle.sprung_mass, c.vehicle.unsprung_mass,
                                   c.vehicle.roll_inertia, c.vehicle.axle_roll_inertia,
                                   c.vehicle.track_width, scale_characteristic(c.spring, spring_scale),
                                   scale_characteristic(c.damper, damper_scale),
                                   c.vehicle.tire_stiffness);
  p.deflection_limits = c.vehicle.deflection_limits;
  return HalfCar(std::move(p));
}

/// Road of the run, covering the simulation.
inline RoadProfile build_road(const RunConfig& c) {
  const auto& r = c.road;
  const double duration = r.duration.value_or(c.simulation.duration);
  const double dt = r.dt.value_or(c.simulation.dt);
  RoadProfile road;
  if (r.kind == "file") {
    road = read_road(detail::resolve(c.base_dir, r.file));
    if (r.tracks != TrackLayout::single && !road.dual()) road.right = road.left;
    if (r.tracks == TrackLayout::single) road.right.clear();
    return road;
  }
  RoadSpec spec;
  if (r.kind == "chirp") {
    spec = ChirpRoadSpec{r.f0, r.f1, r.amplitude, duration, dt};
  } else {
    RandomRoadSpec s;
    s.seed = r.seed;
    s.roughness = r.roughness * r.roughness_multiplier;
    s.speed = r.speed;
    s.duration = duration;
    s.dt = dt;
    spec = s;
  }
  switch (r.tracks) {
    case TrackLayout::single: return generate_road(spec);
    case TrackLayout::identical: return dual_track(spec, IdenticalTracks{});
    case TrackLayout::independent: return dual_track(spec, IndependentTracks{r.seed, r.right_seed});
  }
  return road;
}

/// One-line road descriptor; runs are comparable only when these agree.
inline std::string describe_road(const RunConfig& c) {
  const auto& r = c.road;
  std::string s = r.kind + " tracks=" + to_string(r.tracks);
  if (r.kind == "random") {
    s += " seed=" + std::to_string(r.seed);
    if (r.tracks == TrackLayout::independent) s += " right_seed=" + std::to_string(r.right_seed);
    s += " roughness=" + io::format_number(r.roughness * r.roughness_multiplier) +
         " speed=" + io::format_number(r.speed);
  } else if (r.kind == "chirp") {
    s += " f0=" + io::format_number(r.f0) + " f1=" + io::format_number(r.f1) +
         " amplitude=" + io::format_number(r.amplitude);
  } else {
    s += " file=" + r.file.generic_string();
  }
  s += " duration=" + io::format_number(r.duration.value_or(c.simulation.duration)) +
       " dt=" + io::format_number(r.dt.value_or(c.simulation.dt));
  return s;
}

/// The half-2 optimum that half-3 measures its losses against.
struct Baseline {
  std::filesystem::path source;
  std::array<double, 2> design{1.0, 1.0};
  double comfort = 0.0;    // of that design on this run's road
  double handling = 0.0;
  double roll = 0.0;
};

inline std::array<double, 2> read_optimum_design(const std::filesystem::path& path, CaseId expected) {
  const json doc = detail::read_json_file(path);
  try {
    if (doc.at("scenario").get<std::string>() != to_string(expected)) {
      throw ConfigError(path.string() + ": baseline must come from a " + to_string(expected) + " run");
    }
    const auto& d = doc.at("design");
    return {d.at("spring_scale").get<double>(), d.at("damper_scale").get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": not an optimum file (" + e.what() + ")");
  }
}

// ---------------------------------------------------------------------------
// Scenario: everything fixed for one run, evaluable at any design.

class Scenario {
 public:
  explicit Scenario(RunConfig cfg) : cfg_(std::move(cfg)) {
    road_ = build_road(cfg_);
    spec_.id = cfg_.scenario;
    spec_.weights = cfg_.objective.weights;
    spec_.weighting = WeightingCurve::by_name(cfg_.objective.weighting);

    if (cfg_.scenario == CaseId::quarter1) {
      QuarterCarParams ref;
      ref.sprung_mass = cfg_.vehicle.sprung_mass;
      ref.unsprung_mass = cfg_.vehicle.unsprung_mass;
      ref.tire_stiffness = cfg_.vehicle.tire_stiffness;
      ref.tire_damping = cfg_.vehicle.tire_damping;
      ref.spring = ScaledCharacteristic(LinearLaw(cfg_.reference.stiffness));
      ref.damper = ScaledCharacteristic(LinearLaw(cfg_.reference.damping));
      spec_.baseline.desired_unsprung_accel = simulate(QuarterCar(ref), road_, cfg_.simulation).a_u;
    }
    if (cfg_.scenario == CaseId::half3) {
      if (!cfg_.baseline) {
        throw ConfigError("half-3 requires a baseline: set \"baseline\" to a half-2 optimum.json");
      }
      Baseline b;
      b.source = *cfg_.baseline;
      b.design = read_optimum_design(*cfg_.baseline, CaseId::half2);
      ObjectiveSpec plain;
      plain.id = CaseId::half2;
      plain.weighting = spec_.weighting;
      const auto m = compute_metrics(simulate_design(b.design), plain);
      b.comfort = m.comfort;
      b.handling = m.tire_range;
      b.roll = m.roll_rms;
      spec_.baseline.comfort = b.comfort;
      spec_.baseline.handling = b.handling;
      baseline_ = b;
    }

    initial_ = {1.0, 1.0};
    if (baseline_) initial_ = baseline_->design;
    if (cfg_.optimizer.initial) initial_ = *cfg_.optimizer.initial;
    for (std::size_t i = 0; i < 2; ++i) {
      initial_[i] = std::clamp(initial_[i], cfg_.optimizer.lower[i], cfg_.optimizer.upper[i]);
    }

    if (cfg_.objective.normalization) {
      spec_.normalization = *cfg_.objective.normalization;
    } else {
      // Values at the initial design; losses use the baseline magnitudes since
      // they can be zero or negative there.
      const auto start = evaluate(initial_).raw;
      for (std::size_t i = 0; i < 3; ++i) {
        spec_.normalization[i] = start[i] > 0.0 ? start[i] : 1.0;
      }
      if (baseline_) {
        spec_.normalization[0] = baseline_->comfort;
        spec_.normalization[1] = baseline_->handling;
      }
    }
  }

  const RunConfig& config() const noexcept { return cfg_; }
  const RoadProfile& road() const noexcept { return road_; }
  const ObjectiveSpec& spec() const noexcept { return spec_; }
  const std::optional<Baseline>& baseline() const noexcept { return baseline_; }
  std::array<double, 2> initial() const noexcept { return initial_; }

  DesignVector design_vector(std::array<double, 2> start) const {
    DesignVector d;
    d.names = {"spring_scale", "damper_scale"};
    d.values = {start[0], start[1]};
    d.lower = {cfg_.optimizer.lower[0], cfg_.optimizer.lower[1]};
    d.upper = {cfg_.optimizer.upper[0], cfg_.optimizer.upper[1]};
    d.validate(true);
    return d;
  }

  Trajectory simulate_design(std::span<const double> x) const {
    if (is_half_car(cfg_.scenario)) return simulate(make_half_car(cfg_, x[0], x[1]), road_, cfg_.simulation);
    return simulate(make_quarter_car(cfg_, x[0], x[1]), road_, cfg_.simulation);
  }

  /// Throws on divergence or a spring that cannot carry the load.
  ObjectiveValue evaluate(std::span<const double> x) const {
    return evaluate_objective(spec_, simulate_design(x));
  }

  /// Optimizer and grid callback: numeric failures become NaN.
  Evaluation operator()(std::span<const double> x) const {
    try {
      const auto v = evaluate(x);
      return {v.total, {v.raw[0], v.raw[1], v.raw[2]}};
    } catch (const DivergenceError&) {
    } catch (const EquilibriumError&) {
    }
    return {std::numeric_limits<double>::quiet_NaN(), {}};
  }

  BodeResult bode(std::span<const double> x, BodeOutput out) const {
    if (is_half_car(cfg_.scenario)) return numeric_bode(make_half_car(cfg_, x[0], x[1]), cfg_.bode.options, out);
    return numeric_bode(make_quarter_car(cfg_, x[0], x[1]), cfg_.bode.options, out);
  }

  GridSurface grid() const {
    return grid_surface([this](std::span<const double> x) { return (*this)(x).value; },
                        {cfg_.grid.spring, cfg_.grid.damper});
  }

 private:
  RunConfig cfg_;
  RoadProfile road_;
  ObjectiveSpec spec_;
  std::optional<Baseline> baseline_;
  std::array<double, 2> initial_{1.0, 1.0};
};

// ---------------------------------------------------------------------------
// Reporting helpers

/// Signed percent change from a to b, e.g. "+9.95%". Equal values give "0.00%".
inline std::string percent_change(double a, double b) {
  if (a == b) return "0.00%";
  if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.2f%%", 100.0 * (b - a) / std::abs(a));
  return buf;
}

inline std::string join_numbers(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += io::format_number(v[i]);
  }
  return s;
}

/// Named metrics carried into reports and comparisons. Roll only for the half
/// car, the wheel-acceleration penalty only for quarter-1.
inline std::vector<std::pair<std::string, double>> named_metrics(CaseId id, const MetricSet& m) {
  std::vector<std::pair<std::string, double>> out{{"comfort", m.comfort}, {"handling", m.tire_range}};
  if (is_half_car(id)) out.emplace_back("roll", m.roll_rms);
  if (id == CaseId::quarter1) out.emplace_back("tire_penalty", m.tire_penalty);
  if (id == CaseId::half3) {
    out.emplace_back("comfort_loss", m.comfort_loss);
    out.emplace_back("handling_loss", m.handling_loss);
  }
  return out;
}

inline void write_curve(const std::filesystem::path& path, const ScaledCharacteristic& c, bool spring) {
  double lo = -1.0, hi = 1.0;
  if (spring) {
    lo = -0.15;
    hi = 0.15;
    if (const auto* t = std::get_if<SpringTable>(&c.base())) {
      lo = t->deflection().front();
      hi = t->deflection().back();
    }
  }
  constexpr int kPoints = 81;
  io::Table t;
  t.attributes.emplace_back("scale", io::format_number(c.scale()));
  t.header = {spring ? "deflection" : "velocity", "force"};
  t.columns.resize(2);
  for (int i = 0; i < kPoints; ++i) {
    const double u = lo + (hi - lo) * i / (kPoints - 1);
    t.columns[0].push_back(u);
    t.columns[1].push_back(c.force(u));
  }
  io::write_table(path, t);
}

inline void write_history(const std::filesystem::path& path, const RunHistory& h,
                          const std::array<std::string, 3>& components,
                          const std::array<double, 3>& normalization) {
  io::Table t;
  t.header = {"iteration", "spring_scale", "damper_scale", "total"};
  for (const auto& c : components) t.header.push_back(c);
  for (const auto& c : components) t.header.push_back(c + "_normalized");
  t.header.insert(t.header.end(), {"step_norm", "gradient_norm", "evaluations"});
  t.columns.resize(t.header.size());
  for (const auto& r : h.records) {
    std::size_t k = 0;
    t.columns[k++].push_back(static_cast<double>(r.iteration));
    t.columns[k++].push_back(r.x[0]);
    t.columns[k++].push_back(r.x[1]);
    t.columns[k++].push_back(r.value);
    for (std::size_t i = 0; i < 3; ++i) t.columns[k++].push_back(r.components.at(i));
    for (std::size_t i = 0; i < 3; ++i) t.columns[k++].push_back(r.components.at(i) / normalization[i]);
    t.columns[k++].push_back(r.step_norm);
    t.columns[k++].push_back(r.gradient_norm);
    t.columns[k++].push_back(static_cast<double>(r.evaluations));
  }
  io::write_table(path, t, ',');
}

inline json library_versions() {
  return {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"fftw", std::string(fftw_version)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", std::string(__VERSION__)}};
}

#ifndef SUSPOPT_VERSION
#define SUSPOPT_VERSION "dev"
#endif

/// Manifest: config echo, versions, seeds and the list of files written. The
/// output directory itself is left out so two runs into different places match.
inline void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& c,
                           std::vector<std::string> files) {
  json m;
  m["tool"] = "suspopt";
  m["version"] = SUSPOPT_VERSION;
  m["command"] = command;
  m["scenario"] = to_string(c.scenario);
  json cfg = to_json(c);
  cfg.erase("output");
  m["config"] = cfg;
  json seeds = json::object();
  if (c.road.kind == "random") {
    seeds["road"] = c.road.seed;
    if (c.road.tracks == TrackLayout::independent) seeds["right_track"] = c.road.right_seed;
  }
  m["seeds"] = seeds;
  m["libraries"] = library_versions();
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  m["files"] = files;
  io::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
  std::ostream* log = nullptr;  // progress lines; null for quiet
};

struct RunSummary {
  std::filesystem::path directory;
  ObjectiveValue initial;
  ObjectiveValue optimized;
  std::array<double, 2> initial_design{};
  std::array<double, 2> optimized_design{};
  RunHistory history;
  std::optional<Baseline> baseline;
  std::optional<GridSurface> grid;
};

inline RunSummary run_scenario(const RunConfig& cfg, const RunOptions& opts = {}) {
  auto say = [&](const std::string& s) {
    if (opts.log) *opts.log << s << '\n';
  };
  const std::filesystem::path dir = cfg.output;
  say("scenario " + to_string(cfg.scenario) + ", road " + describe_road(cfg));
  // Build first so a rejected config leaves no output directory behind.
  const Scenario sc(cfg);
  ensure_directory(dir);
  RunSummary out;
  out.directory = dir;
  out.baseline = sc.baseline();
  out.initial_design = sc.initial();
  const Trajectory initial_traj = sc.simulate_design(out.initial_design);
  out.initial = evaluate_objective(sc.spec(), initial_traj);
  say("initial objective " + io::format_number(out.initial.total));

  const auto result = minimize(sc, sc.design_vector(out.initial_design), cfg.optimizer.options);
  out.history = result.history;
  out.optimized_design = {result.best.values[0], result.best.values[1]};
  const Trajectory final_traj = sc.simulate_design(out.optimized_design);
  out.optimized = evaluate_objective(sc.spec(), final_traj);
  say("optimized objective " + io::format_number(out.optimized.total) + " at spring_scale " +
      io::format_number(out.optimized_design[0]) + ", damper_scale " +
      io::format_number(out.optimized_design[1]) + " (" + to_string(result.history.reason) + ", " +
      std::to_string(result.history.evaluations) + " evaluations)");

  std::vector<std::string> files;
  auto emit = [&](const std::string& name) {
    files.push_back(name);
    return dir / name;
  };

  const auto names = component_names(cfg.scenario);
  write_history(emit("history.csv"), result.history, names, sc.spec().normalization);
  write_trajectory_csv(emit("trajectory_initial.csv"), initial_traj);
  write_trajectory_csv(emit("trajectory_optimized.csv"), final_traj);
  write_curve(emit("curve_spring_initial.txt"), scale_characteristic(cfg.spring, out.initial_design[0]), true);
  write_curve(emit("curve_spring_optimized.txt"), scale_characteristic(cfg.spring, out.optimized_design[0]), true);
  write_curve(emit("curve_damper_initial.txt"), scale_characteristic(cfg.damper, out.initial_design[1]), false);
  write_curve(emit("curve_damper_optimized.txt"), scale_characteristic(cfg.damper, out.optimized_design[1]), false);

  // metrics.txt: "key = value" lines, numbers in shortest round-trip form.
  std::ostringstream m;
  m << "scenario = " << to_string(cfg.scenario) << '\n';
  m << "road = " << describe_road(cfg) << '\n';
  m << "termination = " << to_string(result.history.reason) << '\n';
  m << "iterations = " << (result.history.records.empty() ? 0 : result.history.records.size() - 1) << '\n';
  m << "evaluations = " << result.history.evaluations << '\n';
  m << "design.names = spring_scale damper_scale\n";
  m << "design.initial = " << join_numbers(out.initial_design) << '\n';
  m << "design.optimized = " << join_numbers(out.optimized_design) << '\n';
  m << "weights = " << join_numbers(sc.spec().weights) << '\n';
  m << "normalization = " << join_numbers(sc.spec().normalization) << '\n';
  m << "objective.initial = " << io::format_number(out.initial.total) << '\n';
  m << "objective.optimized = " << io::format_number(out.optimized.total) << '\n';
  m << "objective.change = " << percent_change(out.initial.total, out.optimized.total) << '\n';
  const std::size_t used = is_half_car(cfg.scenario) ? 3 : 2;
  for (std::size_t i = 0; i < used; ++i) {
    m << "component." << names[i] << ".raw.initial = " << io::format_number(out.initial.raw[i]) << '\n';
    m << "component." << names[i] << ".raw.optimized = " << io::format_number(out.optimized.raw[i]) << '\n';
    m << "component." << names[i] << ".normalized.initial = " << io::format_number(out.initial.normalized[i]) << '\n';
    m << "component." << names[i] << ".normalized.optimized = " << io::format_number(out.optimized.normalized[i]) << '\n';
    m << "component." << names[i] << ".change = " << percent_change(out.initial.raw[i], out.optimized.raw[i]) << '\n';
  }
  const auto before = named_metrics(cfg.scenario, out.initial.metrics);
  const auto after = named_metrics(cfg.scenario, out.optimized.metrics);
  for (std::size_t i = 0; i < before.size(); ++i) {
    m << before[i].first << ".initial = " << io::format_number(before[i].second) << '\n';
    m << before[i].first << ".optimized = " << io::format_number(after[i].second) << '\n';
    m << before[i].first << ".change = " << percent_change(before[i].second, after[i].second) << '\n';
  }
  if (out.baseline) {
    const auto& b = *out.baseline;
    m << "baseline.design = " << join_numbers(b.design) << '\n';
    m << "baseline.comfort = " << io::format_number(b.comfort) << '\n';
    m << "baseline.handling = " << io::format_number(b.handling) << '\n';
    m << "baseline.roll = " << io::format_number(b.roll) << '\n';
    m << "versus_baseline = comfort " << percent_change(b.comfort, out.optimized.metrics.comfort)
      << ", handling " << percent_change(b.handling, out.optimized.metrics.tire_range) << ", roll "
      << percent_change(b.roll, out.optimized.metrics.roll_rms) << '\n';
  }
  m << "liftoff.initial = " << (initial_traj.liftoff ? "yes" : "no") << '\n';
  m << "liftoff.optimized = " << (final_traj.liftoff ? "yes" : "no") << '\n';

  json optimum;
  optimum["scenario"] = to_string(cfg.scenario);
  optimum["design"] = {{"spring_scale", out.optimized_design[0]}, {"damper_scale", out.optimized_design[1]}};
  optimum["objective"] = out.optimized.total;
  json metrics = json::object();
  for (const auto& [k, v] : after) metrics[k] = v;
  optimum["metrics"] = metrics;
  optimum["termination"] = to_string(result.history.reason);

  if (cfg.bode.enabled) {
    for (auto output : cfg.bode.outputs) {
      const auto a = sc.bode(out.initial_design, output);
      const auto b = sc.bode(out.optimized_design, output);
      write_bode(emit("bode_" + to_string(output) + "_initial.txt"), a);
      write_bode(emit("bode_" + to_string(output) + "_optimized.txt"), b);
    }
    say("bode data written");
  }
  if (cfg.grid.enabled) {
    out.grid = sc.grid();
    write_grid(emit("grid.txt"), *out.grid, "spring_scale", "damper_scale");
    m << "grid.argmin = " << io::format_number(out.grid->x[out.grid->argmin_i]) << ' '
      << io::format_number(out.grid->y[out.grid->argmin_j]) << '\n';
    m << "grid.minimum = " << io::format_number(out.grid->minimum) << '\n';
    say("grid minimum " + io::format_number(out.grid->minimum));
  }
  io::write_text(emit("metrics.txt"), m.str());
  io::write_text(emit("optimum.json"), optimum.dump(2) + "\n");
  write_manifest(dir, "run", cfg, files);
  say("results in " + dir.string());
  return out;
}

// ---------------------------------------------------------------------------
// bode, grid

/// Bode data of the initial design only.
inline std::vector<BodeResult> run_bode(const RunConfig& cfg, const RunOptions& opts = {}) {
  const Scenario sc(cfg);
  ensure_directory(cfg.output);
  std::vector<BodeResult> results;
  std::vector<std::string> files;
  for (auto output : cfg.bode.outputs) {
    results.push_back(sc.bode(sc.initial(), output));
    const std::string name = "bode_" + to_string(output) + "_initial.txt";
    write_bode(cfg.output / name, results.back());
    files.push_back(name);
    if (opts.log) *opts.log << results.back().label << " -> " << (cfg.output / name).string() << '\n';
  }
  write_manifest(cfg.output, "bode", cfg, files);
  return results;
}

inline GridSurface run_grid(const RunConfig& cfg, const RunOptions& opts = {}) {
  const Scenario sc(cfg);
  ensure_directory(cfg.output);
  const auto g = sc.grid();
  write_grid(cfg.output / "grid.txt", g, "spring_scale", "damper_scale");
  write_manifest(cfg.output, "grid", cfg, {"grid.txt"});
  if (opts.log) {
    *opts.log << "grid minimum " << io::format_number(g.minimum) << " at spring_scale "
              << io::format_number(g.x[g.argmin_i]) << ", damper_scale " << io::format_number(g.y[g.argmin_j])
              << '\n';
  }
  return g;
}

// ---------------------------------------------------------------------------
// compare

inline std::map<std::string, std::string> read_metrics(const std::filesystem::path& dir) {
  const auto path = dir / "metrics.txt";
  if (!std::filesystem::is_regular_file(path)) throw ComparisonError("missing metrics file: " + path.string());
  std::istringstream in(io::read_text(path));
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  if (!kv.count("scenario")) throw ComparisonError(path.string() + " is not a metrics report");
  return kv;
}

struct MetricChange {
  std::string name;
  double a = 0.0;
  double b = 0.0;
  std::string change;
};

struct Comparison {
  std::string scenario;
  std::vector<MetricChange> metrics;
  std::string text;
};

/// Optimized metrics of run b against run a.
inline Comparison compare_runs(const std::filesystem::path& a, const std::filesystem::path& b) {
  const auto ma = read_metrics(a);
  const auto mb = read_metrics(b);
  if (ma.at("scenario") != mb.at("scenario")) {
    throw ComparisonError("runs are of different scenarios: " + ma.at("scenario") + " vs " + mb.at("scenario"));
  }
  if (ma.count("road") == 0 || mb.count("road") == 0 || ma.at("road") != mb.at("road")) {
    throw ComparisonError("runs used different roads");
  }
  Comparison c;
  c.scenario = ma.at("scenario");
  for (const char* name : {"comfort", "handling", "roll", "tire_penalty"}) {
    const std::string key = std::string(name) + ".optimized";
    if (!ma.count(key) || !mb.count(key)) continue;
    MetricChange mc;
    mc.name = name;
    try {
      mc.a = io::parse_number(ma.at(key));
      mc.b = io::parse_number(mb.at(key));
    } catch (const IoError& e) {
      throw ComparisonError(std::string("unreadable metric ") + name + ": " + e.what());
    }
    mc.change = percent_change(mc.a, mc.b);
    c.metrics.push_back(mc);
  }
  if (c.metrics.empty()) throw ComparisonError("no comparable metrics");
  std::ostringstream t;
  t << "scenario " << c.scenario << '\n';
  t << "road " << ma.at("road") << '\n';
  t << "metric a b change\n";
  for (const auto& m : c.metrics) {
    t << m.name << ' ' << io::format_number(m.a) << ' ' << io::format_number(m.b) << ' ' << m.change << '\n';
  }
  for (std::size_t i = 0; i < c.metrics.size(); ++i) {
    t << (i ? ", " : "") << c.metrics[i].name << ' ' << c.metrics[i].change;
  }
  t << '\n';
  c.text = t.str();
  return c;
}

// ---------------------------------------------------------------------------
// fit-damper

struct DamperFitReport {
  DamperFit fit;
  double peak_force = 0.0;
  std::size_t samples = 0;
  std::string text;
};

inline DamperFitReport fit_damper_file(const std::filesystem::path& samples_path) {
  const auto t = io::read_table(samples_path, 2);
  std::vector<DamperSample> samples;
  DamperFitReport r;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    samples.push_back({t.columns[0][i], t.columns[1][i]});
    r.peak_force = std::max(r.peak_force, std::abs(t.columns[1][i]));
  }
  r.samples = samples.size();
  r.fit = fit_damper_curve(samples);
  const auto& c = r.fit.curve;
  std::ostringstream s;
  s << "samples = " << r.samples << '\n';
  s << "decay_amplitude = " << io::format_number(c.decay_amplitude) << '\n';
  s << "decay_rate = " << io::format_number(c.decay_rate) << '\n';
  s << "growth_amplitude = " << io::format_number(c.growth_amplitude) << '\n';
  s << "growth_rate = " << io::format_number(c.growth_rate) << '\n';
  s << "residual_rms = " << io::format_number(r.fit.residual_rms) << '\n';
  s << "residual_fraction_of_peak = "
    << io::format_number(r.peak_force > 0.0 ? r.fit.residual_rms / r.peak_force : 0.0) << '\n';
  r.text = s.str();
  return r;
}

}  // namespace suspopt
