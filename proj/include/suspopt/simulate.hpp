#pragma once

// Fixed-step RK4 integration of the vehicle models over a road profile.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "suspopt/errors.hpp"
#include "suspopt/io.hpp"
#include "suspopt/road.hpp"
#include "suspopt/vehicle.hpp"

namespace suspopt {

enum class ModelKind { quarter, half };

/// Sampled response of one simulation run. Samples sit at t_k = t_0 + k dt.
/// Roll channels and the right tire are empty for the quarter car.
struct Trajectory {
  ModelKind kind = ModelKind::quarter;
  double dt = 0.0;
  std::vector<double> t;

  std::vector<double> z_s, v_s, z_u, v_u;
  std::vector<double> phi_s, w_s, phi_u, w_u;

  std::vector<double> a_s;      // body vertical acceleration
  std::vector<double> a_u;      // unsprung vertical acceleration
  std::vector<double> alpha_s;  // body roll acceleration
  std::vector<double> alpha_u;  // axle roll acceleration

  std::vector<double> tire_left;   // quarter car: the single tire
  std::vector<double> tire_right;

  std::vector<double> road_left;
  std::vector<double> road_right;

  bool liftoff = false;                // total tire load went negative
  std::optional<double> trimmed_from;  // set by trim_transient

  std::size_t size() const noexcept { return t.size(); }
};

struct SimulationSettings {
  double dt = 1e-3;        // s
  double duration = 60.0;  // s
  double t_skip = 5.0;     // s
};

namespace detail {

inline std::array<double, 4> as_array(const QuarterState& s) { return {s.z_s, s.v_s, s.z_u, s.v_u}; }
inline std::array<double, 8> as_array(const HalfState& s) {
  return {s.z_s, s.v_s, s.z_u, s.v_u, s.phi_s, s.w_s, s.phi_u, s.w_u};
}
inline QuarterState from_array(const std::array<double, 4>& a, const QuarterState&) {
  return {a[0], a[1], a[2], a[3]};
}
inline HalfState from_array(const std::array<double, 8>& a, const HalfState&) {
  return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
}

template <class S>
S add_scaled(const S& x, double h, const S& d) {
  auto a = as_array(x);
  const auto b = as_array(d);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += h * b[i];
  return from_array(a, x);
}

template <class S>
bool all_finite(const S& s) {
  for (double v : as_array(s)) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Linear interpolation of road elevation and finite-difference velocity.
class RoadSampler {
 public:
  RoadSampler(const std::vector<double>& elevation, double dt)
      : z_(elevation), v_(road_velocity(elevation, dt)), dt_(dt) {}

  RoadInput at(double t) const noexcept {
    const double pos = t / dt_;
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= z_.size()) {
      return {z_.back(), v_.back()};
    }
    const double frac = pos - static_cast<double>(i);
    if (frac == 0.0) return {z_[i], v_[i]};
    return {z_[i] + frac * (z_[i + 1] - z_[i]), v_[i] + frac * (v_[i + 1] - v_[i])};
  }

 private:
  std::vector<double> z_;
  std::vector<double> v_;
  double dt_;
};

inline std::size_t step_count(double duration, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw DomainError("duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  if (n < 2) throw DomainError("duration shorter than two time steps");
  return n;
}

inline void check_coverage(const RoadProfile& road, std::size_t samples, double dt) {
  road.validate();
  const double needed = static_cast<double>(samples - 1) * dt;
  if (road.duration() + 1e-9 * road.dt < needed) {
    throw DomainError("road profile shorter than the simulation");
  }
}

inline void reserve_all(Trajectory& tr, std::size_t n) {
  for (auto* ch : {&tr.t, &tr.z_s, &tr.v_s, &tr.z_u, &tr.v_u, &tr.a_s, &tr.a_u, &tr.tire_left,
                   &tr.road_left}) {
    ch->reserve(n);
  }
  if (tr.kind == ModelKind::half) {
    for (auto* ch : {&tr.phi_s, &tr.w_s, &tr.phi_u, &tr.w_u, &tr.alpha_s, &tr.alpha_u,
                     &tr.tire_right, &tr.road_right}) {
      ch->reserve(n);
    }
  }
}

[[noreturn]] inline void diverged(double t) {
  throw DivergenceError("simulation diverged: non-finite state at t = " + io::format_number(t) + " s",
                        t);
}

}  // namespace detail

/// RK4 integration of the quarter car. Accelerations are taken from the
/// derivative function at every stored sample.
inline Trajectory integrate(const QuarterCar& car, const RoadProfile& road, QuarterState x0,
                            double dt, double duration) {
  const std::size_t n = detail::step_count(duration, dt);
  detail::check_coverage(road, n, dt);
  if (!detail::all_finite(x0)) detail::diverged(0.0);

  const detail::RoadSampler sampler(road.left, road.dt);
  auto f = [&](double t, const QuarterState& x) { return quarter_derivatives(car, x, sampler.at(t)); };

  Trajectory tr;
  tr.kind = ModelKind::quarter;
  tr.dt = dt;
  detail::reserve_all(tr, n);
  const double static_load = car.static_tire_load();
  double min_load = INFINITY;

  QuarterState x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const RoadInput r = sampler.at(t);
    const QuarterState d = quarter_derivatives(car, x, r);
    const double tire = tire_force(car, x, r);
    tr.t.push_back(t);
    tr.z_s.push_back(x.z_s);
    tr.v_s.push_back(x.v_s);
    tr.z_u.push_back(x.z_u);
    tr.v_u.push_back(x.v_u);
    tr.a_s.push_back(d.v_s);
    tr.a_u.push_back(d.v_u);
    tr.tire_left.push_back(tire);
    tr.road_left.push_back(r.elevation);
    min_load = std::min(min_load, static_load + tire);
    if (k + 1 == n) break;

    const QuarterState k1 = d;
    const QuarterState k2 = f(t + 0.5 * dt, detail::add_scaled(x, 0.5 * dt, k1));
    const QuarterState k3 = f(t + 0.5 * dt, detail::add_scaled(x, 0.5 * dt, k2));
    const QuarterState k4 = f(t + dt, detail::add_scaled(x, dt, k3));
    x = {x.z_s + dt / 6.0 * (k1.z_s + 2.0 * k2.z_s + 2.0 * k3.z_s + k4.z_s),
         x.v_s + dt / 6.0 * (k1.v_s + 2.0 * k2.v_s + 2.0 * k3.v_s + k4.v_s),
         x.z_u + dt / 6.0 * (k1.z_u + 2.0 * k2.z_u + 2.0 * k3.z_u + k4.z_u),
         x.v_u + dt / 6.0 * (k1.v_u + 2.0 * k2.v_u + 2.0 * k3.v_u + k4.v_u)};
    if (!detail::all_finite(x)) detail::diverged(static_cast<double>(k + 1) * dt);
  }
  tr.liftoff = min_load < 0.0;
  return tr;
}

/// RK4 integration of the half car over a two-track road (a single-track
/// profile drives both wheels).
inline Trajectory integrate(const HalfCar& car, const RoadProfile& road, HalfState x0, double dt,
                            double duration) {
  const std::size_t n = detail::step_count(duration, dt);
  detail::check_coverage(road, n, dt);
  if (!detail::all_finite(x0)) detail::diverged(0.0);

  const detail::RoadSampler left(road.track(false), road.dt);
  const detail::RoadSampler right(road.track(true), road.dt);
  auto f = [&](double t, const HalfState& x) {
    return half_derivatives(car, x, left.at(t), right.at(t));
  };

  Trajectory tr;
  tr.kind = ModelKind::half;
  tr.dt = dt;
  detail::reserve_all(tr, n);
  const double static_load = car.static_tire_load();
  double min_load = INFINITY;

  HalfState x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const RoadInput rl = left.at(t);
    const RoadInput rr = right.at(t);
    const HalfState d = half_derivatives(car, x, rl, rr);
    const TirePair tire = tire_force(car, x, rl, rr);
    tr.t.push_back(t);
    tr.z_s.push_back(x.z_s);
    tr.v_s.push_back(x.v_s);
    tr.z_u.push_back(x.z_u);
    tr.v_u.push_back(x.v_u);
    tr.phi_s.push_back(x.phi_s);
    tr.w_s.push_back(x.w_s);
    tr.phi_u.push_back(x.phi_u);
    tr.w_u.push_back(x.w_u);
    tr.a_s.push_back(d.v_s);
    tr.a_u.push_back(d.v_u);
    tr.alpha_s.push_back(d.w_s);
    tr.alpha_u.push_back(d.w_u);
    tr.tire_left.push_back(tire.left);
    tr.tire_right.push_back(tire.right);
    tr.road_left.push_back(rl.elevation);
    tr.road_right.push_back(rr.elevation);
    min_load = std::min({min_load, static_load - tire.left, static_load - tire.right});
    if (k + 1 == n) break;

    const HalfState k1 = d;
    const HalfState k2 = f(t + 0.5 * dt, detail::add_scaled(x, 0.5 * dt, k1));
    const HalfState k3 = f(t + 0.5 * dt, detail::add_scaled(x, 0.5 * dt, k2));
    const HalfState k4 = f(t + dt, detail::add_scaled(x, dt, k3));
    auto xa = detail::as_array(x);
    const auto a1 = detail::as_array(k1), a2 = detail::as_array(k2), a3 = detail::as_array(k3),
               a4 = detail::as_array(k4);
    for (std::size_t i = 0; i < xa.size(); ++i) {
      xa[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
    }
    x = detail::from_array(xa, x);
    if (!detail::all_finite(x)) detail::diverged(static_cast<double>(k + 1) * dt);
  }
  tr.liftoff = min_load < 0.0;
  return tr;
}

/// Drops the samples before t_skip (measured from the first sample).
inline Trajectory trim_transient(const Trajectory& traj, double t_skip) {
  if (traj.size() == 0) throw DomainError("cannot trim an empty trajectory");
  const double span = static_cast<double>(traj.size()) * traj.dt;
  if (!(t_skip >= 0.0) || !(t_skip < span)) {
    throw DomainError("transient trim must satisfy 0 <= t_skip < duration");
  }
  auto first = static_cast<std::size_t>(std::ceil(t_skip / traj.dt - 1e-9));
  first = std::min(first, traj.size() - 1);

  Trajectory out;
  out.kind = traj.kind;
  out.dt = traj.dt;
  out.liftoff = traj.liftoff;
  out.trimmed_from = traj.t[first];
  auto slice = [first](const std::vector<double>& v) {
    if (v.empty()) return std::vector<double>{};
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first), v.end());
  };
  out.t = slice(traj.t);
  out.z_s = slice(traj.z_s);
  out.v_s = slice(traj.v_s);
  out.z_u = slice(traj.z_u);
  out.v_u = slice(traj.v_u);
  out.phi_s = slice(traj.phi_s);
  out.w_s = slice(traj.w_s);
  out.phi_u = slice(traj.phi_u);
  out.w_u = slice(traj.w_u);
  out.a_s = slice(traj.a_s);
  out.a_u = slice(traj.a_u);
  out.alpha_s = slice(traj.alpha_s);
  out.alpha_u = slice(traj.alpha_u);
  out.tire_left = slice(traj.tire_left);
  out.tire_right = slice(traj.tire_right);
  out.road_left = slice(traj.road_left);
  out.road_right = slice(traj.road_right);
  return out;
}

/// Integrate from equilibrium and trim the start-up transient.
template <class Car>
Trajectory simulate(const Car& car, const RoadProfile& road, const SimulationSettings& s) {
  return trim_transient(integrate(car, road, typename Car::State{}, s.dt, s.duration), s.t_skip);
}

/// CSV with a header row: t, state components, accelerations, tire forces, road.
inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr) {
  io::Table table;
  auto add = [&](const char* name, const std::vector<double>& v) {
    table.header.emplace_back(name);
    table.columns.push_back(v);
  };
  add("t", tr.t);
  add("z_s", tr.z_s);
  add("v_s", tr.v_s);
  add("z_u", tr.z_u);
  add("v_u", tr.v_u);
  if (tr.kind == ModelKind::half) {
    add("phi_s", tr.phi_s);
    add("w_s", tr.w_s);
    add("phi_u", tr.phi_u);
    add("w_u", tr.w_u);
  }
  add("a_s", tr.a_s);
  add("a_u", tr.a_u);
  if (tr.kind == ModelKind::half) {
    add("alpha_s", tr.alpha_s);
    add("alpha_u", tr.alpha_u);
    add("tire_left", tr.tire_left);
    add("tire_right", tr.tire_right);
    add("road_left", tr.road_left);
    add("road_right", tr.road_right);
  } else {
    add("tire", tr.tire_left);
    add("road", tr.road_left);
  }
  io::write_table(path, table, ',');
}

}  // namespace suspopt
