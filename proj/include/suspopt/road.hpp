#pragma once

// Deterministic road excitation: linear chirp sweeps, seeded random
// roughness with an n^-2 displacement spectrum, and two-track variants.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "suspopt/errors.hpp"
#include "suspopt/io.hpp"
#include "suspopt/rng.hpp"

namespace suspopt {

struct RoadMeta {
  std::string kind;                          // "chirp", "random", "imported", ...
  std::uint64_t seed = 0;
  std::map<std::string, double> parameters;  // ordered, so output is stable
};

/// Uniformly sampled road elevation, one or two tracks, starting at t = 0.
struct RoadProfile {
  double dt = 0.0;
  std::vector<double> left;
  std::vector<double> right;  // empty for a single track
  RoadMeta meta;

  bool dual() const noexcept { return !right.empty(); }
  std::size_t size() const noexcept { return left.size(); }
  /// Time of the last sample.
  double duration() const noexcept {
    return left.empty() ? 0.0 : dt * static_cast<double>(left.size() - 1);
  }
  const std::vector<double>& track(bool right_track) const noexcept {
    return right_track && dual() ? right : left;
  }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("road sample interval must be positive");
    if (left.empty()) throw DomainError("road profile is empty");
    if (dual() && right.size() != left.size()) throw DomainError("road tracks differ in length");
    for (double z : left) detail::require_finite(z, "road elevation");
    for (double z : right) detail::require_finite(z, "road elevation");
  }
};

namespace detail {

inline std::size_t sample_count(double duration, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("road sample interval must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw DomainError("road duration must be positive");
  return static_cast<std::size_t>(std::llround(duration / dt)) + 1;
}

}  // namespace detail

/// z(t) = amplitude * sin(2 pi (f0 t + (f1 - f0) t^2 / (2 duration)))
inline RoadProfile chirp_profile(double f0, double f1, double amplitude, double duration,
                                 double dt) {
  if (!(f0 > 0.0) || !(f1 > f0) || !std::isfinite(f1)) {
    throw DomainError("chirp needs 0 < f0 < f1");
  }
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw DomainError("chirp amplitude must be positive");
  }
  const std::size_t n = detail::sample_count(duration, dt);
  RoadProfile road;
  road.dt = dt;
  road.left.resize(n);
  const double sweep = (f1 - f0) / (2.0 * duration);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    road.left[i] = amplitude * std::sin(2.0 * std::numbers::pi * (f0 * t + sweep * t * t));
  }
  road.meta = {"chirp", 0, {{"f0", f0}, {"f1", f1}, {"amplitude", amplitude},
                            {"duration", duration}, {"dt", dt}}};
  return road;
}

struct RandomRoadOptions {
  double reference_wavenumber = 0.1;  // n0, cycle/m
  double cutoff_wavenumber = 0.01;    // shaping-filter corner, cycle/m
};

/// Seeded random roughness. `roughness` is the displacement PSD Gd(n0) in
/// m^3/cycle; above the cutoff wavenumber the spectrum falls as n^-2.
///
/// White Gaussian noise drives a first-order (Ornstein-Uhlenbeck) filter in
/// the time domain at vehicle speed `speed`, discretised exactly, then the
/// sample mean is removed.
inline RoadProfile random_profile(std::uint64_t seed, double roughness, double speed,
                                  double duration, double dt,
                                  const RandomRoadOptions& opts = {}) {
  if (!(roughness >= 0.0) || !std::isfinite(roughness)) {
    throw DomainError("roughness must be non-negative");
  }
  if (!(speed > 0.0) || !std::isfinite(speed)) throw DomainError("speed must be positive");
  if (!(opts.reference_wavenumber > 0.0) || !(opts.cutoff_wavenumber > 0.0)) {
    throw DomainError("wavenumbers must be positive");
  }
  const std::size_t n = detail::sample_count(duration, dt);
  RoadProfile road;
  road.dt = dt;
  road.left.assign(n, 0.0);
  road.meta = {"random", seed, {{"roughness", roughness}, {"speed", speed},
                                {"duration", duration}, {"dt", dt},
                                {"n0", opts.reference_wavenumber},
                                {"nc", opts.cutoff_wavenumber}}};
  if (roughness == 0.0) return road;

  const double n0 = opts.reference_wavenumber;
  const double decay = 2.0 * std::numbers::pi * opts.cutoff_wavenumber * speed;
  // One-sided temporal PSD above the corner: roughness * n0^2 * speed / f^2.
  const double intensity = 2.0 * std::numbers::pi * std::numbers::pi * roughness * n0 * n0 * speed;
  const double variance = intensity / (2.0 * decay);
  const double phi = std::exp(-decay * dt);
  const double innovation = std::sqrt(variance * (1.0 - phi * phi));

  Xoshiro256 rng(seed);
  double z = std::sqrt(variance) * rng.gaussian();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    road.left[i] = z;
    mean += z;
    z = phi * z + innovation * rng.gaussian();
  }
  mean /= static_cast<double>(n);
  for (double& v : road.left) v -= mean;
  return road;
}

struct ChirpRoadSpec {
  double f0 = 0.1;
  double f1 = 20.0;
  double amplitude = 0.01;
  double duration = 60.0;
  double dt = 1e-3;
};

struct RandomRoadSpec {
  std::uint64_t seed = 1;
  double roughness = 16e-6;
  double speed = 20.0;
  double duration = 60.0;
  double dt = 1e-3;
  RandomRoadOptions options{};
};

using RoadSpec = std::variant<ChirpRoadSpec, RandomRoadSpec>;

inline RoadProfile generate_road(const RoadSpec& spec) {
  return std::visit(
      [](const auto& s) -> RoadProfile {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ChirpRoadSpec>) {
          return chirp_profile(s.f0, s.f1, s.amplitude, s.duration, s.dt);
        } else {
          return random_profile(s.seed, s.roughness, s.speed, s.duration, s.dt, s.options);
        }
      },
      spec);
}

struct IdenticalTracks {};
struct IndependentTracks {
  std::uint64_t seed_left = 1;
  std::uint64_t seed_right = 2;
};
using TrackMode = std::variant<IdenticalTracks, IndependentTracks>;

/// Two-track profile. Identical mode copies one generated track; independent
/// mode draws each track from its own seed with the same statistics.
inline RoadProfile dual_track(const RoadSpec& base, const TrackMode& mode) {
  if (std::holds_alternative<IdenticalTracks>(mode)) {
    RoadProfile road = generate_road(base);
    road.right = road.left;
    road.meta.parameters["dual_identical"] = 1.0;
    return road;
  }
  const auto* random = std::get_if<RandomRoadSpec>(&base);
  if (random == nullptr) {
    throw DomainError("independent tracks need a random road generator");
  }
  const auto& seeds = std::get<IndependentTracks>(mode);
  RandomRoadSpec l = *random;
  RandomRoadSpec r = *random;
  l.seed = seeds.seed_left;
  r.seed = seeds.seed_right;
  RoadProfile road = generate_road(l);
  road.right = generate_road(r).left;
  road.meta.parameters["dual_identical"] = 0.0;
  road.meta.parameters["seed_right"] = static_cast<double>(seeds.seed_right);
  return road;
}

/// Central-difference road velocity; one-sided at the ends.
inline std::vector<double> road_velocity(const std::vector<double>& z, double dt) {
  const std::size_t n = z.size();
  std::vector<double> v(n, 0.0);
  if (n < 2) return v;
  v.front() = (z[1] - z[0]) / dt;
  v.back() = (z[n - 1] - z[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) v[i] = (z[i + 1] - z[i - 1]) / (2.0 * dt);
  return v;
}

// ---------------------------------------------------------------------------
// Import / export: columns time, left[, right]

inline void write_road(const std::filesystem::path& path, const RoadProfile& road) {
  io::Table t;
  t.attributes.emplace_back("kind", road.meta.kind);
  t.attributes.emplace_back("seed", std::to_string(road.meta.seed));
  t.attributes.emplace_back("dt", io::format_number(road.dt));
  for (const auto& [k, v] : road.meta.parameters) {
    t.attributes.emplace_back("param." + k, io::format_number(v));
  }
  t.header = road.dual() ? std::vector<std::string>{"t", "left", "right"}
                         : std::vector<std::string>{"t", "elevation"};
  std::vector<double> time(road.size());
  for (std::size_t i = 0; i < time.size(); ++i) time[i] = static_cast<double>(i) * road.dt;
  t.columns.push_back(std::move(time));
  t.columns.push_back(road.left);
  if (road.dual()) t.columns.push_back(road.right);
  io::write_table(path, t);
}

inline RoadProfile read_road(const std::filesystem::path& path) {
  const io::Table t = io::read_table(path, 2);
  if (t.columns.size() > 3) throw IoError(path.string() + ": expected 2 or 3 columns");
  const auto& time = t.columns[0];
  if (time.size() < 2) throw IoError(path.string() + ": need at least two samples");
  RoadProfile road;
  if (const auto* dt = t.attribute("dt")) {
    road.dt = io::parse_number(*dt);
  } else {
    road.dt = (time.back() - time.front()) / static_cast<double>(time.size() - 1);
  }
  for (std::size_t i = 1; i < time.size(); ++i) {
    const double expected = time.front() + static_cast<double>(i) * road.dt;
    if (std::abs(time[i] - expected) > 1e-6 * road.dt + 1e-12 * std::abs(expected)) {
      throw IoError(path.string() + ": road samples are not uniformly spaced");
    }
  }
  road.left = t.columns[1];
  if (t.columns.size() == 3) road.right = t.columns[2];
  road.meta.kind = "imported";
  if (const auto* kind = t.attribute("kind")) road.meta.kind = *kind;
  if (const auto* seed = t.attribute("seed")) road.meta.seed = std::stoull(*seed);
  for (const auto& [k, v] : t.attributes) {
    if (k.rfind("param.", 0) == 0) road.meta.parameters[k.substr(6)] = io::parse_number(v);
  }
  road.validate();
  return road;
}

}  // namespace suspopt
