#pragma once

// Quarter-car (2 DOF) and half-car rear-axle (4 DOF) suspension models.
//
// Coordinates are measured upward from static equilibrium, so gravity does
// not appear in the equations of motion. Nonlinear springs are evaluated at
// the operating deflection plus the dynamic compression, minus the static
// force, which keeps the local stiffness of the true operating point.

#include <cmath>
#include <utility>

#include "suspopt/characteristics.hpp"
#include "suspopt/errors.hpp"

namespace suspopt {

inline constexpr double kGravity = 9.81;  // m/s^2

struct RoadInput {
  double elevation = 0.0;  // m
  double velocity = 0.0;   // m/s
};

// ---------------------------------------------------------------------------
// Static equilibrium

struct DeflectionLimits {
  double lower = -1.0;  // m
  double upper = 1.0;   // m
};

/// Compression x* at which the spring carries `load`.
inline double static_equilibrium(const ScaledCharacteristic& spring, double load,
                                 DeflectionLimits limits = {}) {
  detail::require_finite(load, "supported weight");
  if (!spring.is_spring_law()) throw DomainError("characteristic is not a spring law");

  const double target = load / spring.scale();
  double x = 0.0;
  if (const auto* lin = std::get_if<LinearLaw>(&spring.base())) {
    x = load / (spring.scale() * lin->coefficient);
  } else {
    const auto& table = std::get<SpringTable>(spring.base());
    const auto& xs = table.deflection();
    const auto& fs = table.force();
    const std::size_t n = xs.size();
    auto extrapolate = [&](std::size_t seg) {
      const double slope = (fs[seg + 1] - fs[seg]) / (xs[seg + 1] - xs[seg]);
      if (!(slope > 0.0)) {
        throw EquilibriumError("spring law cannot reach the supported weight");
      }
      const std::size_t anchor = seg == 0 ? 0 : n - 1;
      return xs[anchor] + (target - fs[anchor]) / slope;
    };
    if (target < fs.front()) {
      x = extrapolate(0);
    } else if (target > fs.back()) {
      x = extrapolate(n - 2);
    } else {
      std::size_t i = 0;
      while (i + 1 < n && fs[i + 1] < target) ++i;
      if (i + 1 >= n || fs[i] == target) {
        x = xs[std::min(i, n - 1)];
      } else {
        x = xs[i] + (target - fs[i]) * (xs[i + 1] - xs[i]) / (fs[i + 1] - fs[i]);
      }
    }
  }
  if (!std::isfinite(x) || x < limits.lower || x > limits.upper) {
    throw EquilibriumError("static deflection outside the configured deflection limits");
  }
  return x;
}

namespace detail {

// One spring/damper strut about its static operating point.
class Strut {
 public:
  Strut(ScaledCharacteristic spring, ScaledCharacteristic damper, double static_load,
        DeflectionLimits limits)
      : spring_(std::move(spring)), damper_(std::move(damper)) {
    if (!spring_.is_spring_law()) throw DomainError("strut spring is not a spring law");
    if (!damper_.is_damper_law()) throw DomainError("strut damper is not a damper law");
    linear_spring_ = spring_.is_linear();
    if (!linear_spring_) {
      operating_deflection_ = static_equilibrium(spring_, static_load, limits);
      static_force_ = spring_.force(operating_deflection_);
    } else {
      operating_deflection_ = static_equilibrium(spring_, static_load, {-1e300, 1e300});
      static_force_ = static_load;
    }
  }

  /// Force pushing the sprung body down (the bodies together) for extension
  /// `extension` and extension rate `extension_rate`.
  double force(double extension, double extension_rate) const noexcept {
    double spring_term;
    if (linear_spring_) {
      spring_term = spring_.scale() * std::get<LinearLaw>(spring_.base())(extension);
    } else {
      spring_term = static_force_ - spring_.force(operating_deflection_ - extension);
    }
    return damper_.force(extension_rate) + spring_term;
  }

  const ScaledCharacteristic& spring() const noexcept { return spring_; }
  const ScaledCharacteristic& damper() const noexcept { return damper_; }
  double operating_deflection() const noexcept { return operating_deflection_; }

 private:
  ScaledCharacteristic spring_;
  ScaledCharacteristic damper_;
  bool linear_spring_ = true;
  double operating_deflection_ = 0.0;
  double static_force_ = 0.0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Quarter car

struct QuarterCarParams {
  double sprung_mass = 450.0;     // kg
  double unsprung_mass = 45.0;    // kg
  ScaledCharacteristic spring{LinearLaw(22000.0)};   // N/m
  ScaledCharacteristic damper{LinearLaw(1800.0)};    // N s/m
  double tire_stiffness = 200000.0;  // N/m
  double tire_damping = 150.0;       // N s/m
  DeflectionLimits deflection_limits{};
};

struct QuarterState {
  double z_s = 0.0;  // sprung displacement
  double v_s = 0.0;
  double z_u = 0.0;  // unsprung displacement
  double v_u = 0.0;

  static constexpr std::size_t size = 4;
  bool operator==(const QuarterState&) const = default;
};

/// Parameter set with its static operating point resolved.
class QuarterCar {
 public:
  using State = QuarterState;

  explicit QuarterCar(QuarterCarParams p)
      : params_(std::move(p)),
        strut_((validate(params_), params_.spring), params_.damper,
               params_.sprung_mass * kGravity, params_.deflection_limits) {}

  const QuarterCarParams& params() const noexcept { return params_; }
  const detail::Strut& strut() const noexcept { return strut_; }
  double operating_deflection() const noexcept { return strut_.operating_deflection(); }

  /// Static tire load, used to flag wheel lift-off.
  double static_tire_load() const noexcept {
    return (params_.sprung_mass + params_.unsprung_mass) * kGravity;
  }

 private:
  static void validate(const QuarterCarParams& p) {
    auto positive = [](double v, const char* name) {
      if (!std::isfinite(v) || !(v > 0.0)) throw DomainError(std::string(name) + " must be positive");
    };
    positive(p.sprung_mass, "sprung mass");
    positive(p.unsprung_mass, "unsprung mass");
    positive(p.tire_stiffness, "tire stiffness");
    if (!std::isfinite(p.tire_damping) || p.tire_damping < 0.0) {
      throw DomainError("tire damping must be non-negative");
    }
  }

  QuarterCarParams params_;
  detail::Strut strut_;
};

/// Dynamic tire force on the wheel, positive upward (tire compressed).
inline double tire_force(const QuarterCar& car, const QuarterState& s, RoadInput road) noexcept {
  const auto& p = car.params();
  return p.tire_stiffness * (road.elevation - s.z_u) + p.tire_damping * (road.velocity - s.v_u);
}

inline QuarterState quarter_derivatives(const QuarterCar& car, const QuarterState& s,
                                        RoadInput road) {
  const auto& p = car.params();
  const double strut = car.strut().force(s.z_s - s.z_u, s.v_s - s.v_u);
  const double tire = tire_force(car, s, road);
  return {s.v_s, -strut / p.sprung_mass, s.v_u, (strut + tire) / p.unsprung_mass};
}

// ---------------------------------------------------------------------------
// Half car (rear solid axle): bounce and roll of body and axle

struct HalfCarParams {
  double sprung_mass = 900.0;        // kg
  double unsprung_mass = 90.0;       // kg
  double roll_inertia = 250.0;       // body, kg m^2
  double axle_roll_inertia = 40.0;   // kg m^2
  double track_width = 1.6;          // m
  ScaledCharacteristic left_spring{LinearLaw(22000.0)};
  ScaledCharacteristic right_spring{LinearLaw(22000.0)};
  ScaledCharacteristic left_damper{LinearLaw(1800.0)};
  ScaledCharacteristic right_damper{LinearLaw(1800.0)};
  double left_tire_stiffness = 200000.0;
  double right_tire_stiffness = 200000.0;
  DeflectionLimits deflection_limits{};

  /// Identical left and right characteristics.
  static HalfCarParams mirrored(double sprung_mass, double unsprung_mass, double roll_inertia,
                                double axle_roll_inertia, double track_width,
                                const ScaledCharacteristic& spring,
                                const ScaledCharacteristic& damper, double tire_stiffness) {
    HalfCarParams p;
    p.sprung_mass = sprung_mass;
    p.unsprung_mass = unsprung_mass;
    p.roll_inertia = roll_inertia;
    p.axle_roll_inertia = axle_roll_inertia;
    p.track_width = track_width;
    p.left_spring = p.right_spring = spring;
    p.left_damper = p.right_damper = damper;
    p.left_tire_stiffness = p.right_tire_stiffness = tire_stiffness;
    return p;
  }
};

struct HalfState {
  double z_s = 0.0;
  double v_s = 0.0;
  double z_u = 0.0;
  double v_u = 0.0;
  double phi_s = 0.0;  // body roll angle, rad (positive lifts the left side)
  double w_s = 0.0;
  double phi_u = 0.0;  // axle roll angle
  double w_u = 0.0;

  static constexpr std::size_t size = 8;
  bool operator==(const HalfState&) const = default;

  /// Left/right mirror image.
  HalfState mirrored() const noexcept {
    return {z_s, v_s, z_u, v_u, -phi_s, -w_s, -phi_u, -w_u};
  }
};

class HalfCar {
 public:
  using State = HalfState;

  explicit HalfCar(HalfCarParams p)
      : params_(std::move(p)),
        left_((validate(params_), params_.left_spring), params_.left_damper,
              0.5 * params_.sprung_mass * kGravity, params_.deflection_limits),
        right_(params_.right_spring, params_.right_damper,
               0.5 * params_.sprung_mass * kGravity, params_.deflection_limits) {}

  const HalfCarParams& params() const noexcept { return params_; }
  const detail::Strut& left_strut() const noexcept { return left_; }
  const detail::Strut& right_strut() const noexcept { return right_; }

  double static_tire_load() const noexcept {
    return 0.5 * (params_.sprung_mass + params_.unsprung_mass) * kGravity;
  }

 private:
  static void validate(const HalfCarParams& p) {
    auto positive = [](double v, const char* name) {
      if (!std::isfinite(v) || !(v > 0.0)) throw DomainError(std::string(name) + " must be positive");
    };
    positive(p.sprung_mass, "sprung mass");
    positive(p.unsprung_mass, "unsprung mass");
    positive(p.roll_inertia, "roll inertia");
    positive(p.axle_roll_inertia, "axle roll inertia");
    positive(p.track_width, "track width");
    positive(p.left_tire_stiffness, "left tire stiffness");
    positive(p.right_tire_stiffness, "right tire stiffness");
  }

  HalfCarParams params_;
  detail::Strut left_;
  detail::Strut right_;
};

struct TirePair {
  double left = 0.0;
  double right = 0.0;
};

/// Tire spring forces, positive when the tire is extended beyond its static
/// compression (the sign of the axle-side tire force in the equations of motion).
inline TirePair tire_force(const HalfCar& car, const HalfState& s, RoadInput left,
                           RoadInput right) noexcept {
  const auto& p = car.params();
  const double arm = 0.5 * p.track_width * s.phi_u;
  return {p.left_tire_stiffness * (s.z_u + arm - left.elevation),
          p.right_tire_stiffness * (s.z_u - arm - right.elevation)};
}

inline HalfState half_derivatives(const HalfCar& car, const HalfState& s, RoadInput left,
                                  RoadInput right) {
  const auto& p = car.params();
  const double half = 0.5 * p.track_width;

  const double body_arm = half * s.phi_s;
  const double axle_arm = half * s.phi_u;
  const double body_arm_rate = half * s.w_s;
  const double axle_arm_rate = half * s.w_u;

  const double ext_left = (s.z_s + body_arm) - (s.z_u + axle_arm);
  const double ext_right = (s.z_s - body_arm) - (s.z_u - axle_arm);
  const double rate_left = (s.v_s + body_arm_rate) - (s.v_u + axle_arm_rate);
  const double rate_right = (s.v_s - body_arm_rate) - (s.v_u - axle_arm_rate);

  const double fs_left = car.left_strut().force(ext_left, rate_left);
  const double fs_right = car.right_strut().force(ext_right, rate_right);
  const auto tire = tire_force(car, s, left, right);

  HalfState d;
  d.z_s = s.v_s;
  d.v_s = -(fs_left + fs_right) / p.sprung_mass;
  d.z_u = s.v_u;
  d.v_u = ((fs_left + fs_right) - (tire.left + tire.right)) / p.unsprung_mass;
  d.phi_s = s.w_s;
  d.w_s = -((fs_left - fs_right) * half) / p.roll_inertia;
  d.phi_u = s.w_u;
  d.w_u = (((fs_left - tire.left) - (fs_right - tire.right)) * half) / p.axle_roll_inertia;
  return d;
}

}  // namespace suspopt
