#pragma once

// Ride and handling metrics and the weighted objectives of the six cases.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suspopt/errors.hpp"
#include "suspopt/simulate.hpp"
#include "suspopt/weighting.hpp"

namespace suspopt {

/// Root mean square of a record.
inline double rms(std::span<const double> x) {
  if (x.empty()) throw DomainError("RMS of an empty record");
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

/// max - min of a tire force history.
inline double tire_force_range(std::span<const double> force) {
  if (force.empty()) throw DomainError("tire force range of an empty record");
  const auto [lo, hi] = std::minmax_element(force.begin(), force.end());
  return *hi - *lo;
}

/// RMS deviation of the unsprung acceleration from a desired history.
inline double tire_accel_penalty(std::span<const double> current, std::span<const double> desired) {
  if (current.size() != desired.size()) {
    throw DomainError("tire acceleration histories differ in length");
  }
  if (current.empty()) throw DomainError("empty tire acceleration history");
  double s = 0.0;
  for (std::size_t i = 0; i < current.size(); ++i) {
    const double d = current[i] - desired[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(current.size()));
}

/// Excess of the comfort metric over 110 % of its baseline (negative = within allowance).
inline double comfort_loss(double comfort, double baseline) {
  if (!(baseline > 0.0) || !std::isfinite(baseline)) throw DomainError("comfort baseline must be positive");
  return comfort - 1.1 * baseline;
}

/// Excess of the tire force range over 110 % of its baseline.
inline double handling_loss(double range, double baseline) {
  if (!(baseline > 0.0) || !std::isfinite(baseline)) throw DomainError("handling baseline must be positive");
  return range - 1.1 * baseline;
}

enum class CaseId { quarter1, quarter2, quarter3, half1, half2, half3 };

inline constexpr std::array<CaseId, 6> kAllCases = {CaseId::quarter1, CaseId::quarter2,
                                                    CaseId::quarter3, CaseId::half1,
                                                    CaseId::half2,    CaseId::half3};

inline std::string to_string(CaseId id) {
  switch (id) {
    case CaseId::quarter1: return "quarter-1";
    case CaseId::quarter2: return "quarter-2";
    case CaseId::quarter3: return "quarter-3";
    case CaseId::half1: return "half-1";
    case CaseId::half2: return "half-2";
    case CaseId::half3: return "half-3";
  }
  return "?";
}

inline CaseId parse_case(const std::string& s) {
  for (CaseId id : kAllCases) {
    if (to_string(id) == s) return id;
  }
  throw ConfigError("unknown scenario '" + s + "'");
}

inline bool is_half_car(CaseId id) {
  return id == CaseId::half1 || id == CaseId::half2 || id == CaseId::half3;
}

/// Names of the three objective components of a case, in weight order.
inline std::array<std::string, 3> component_names(CaseId id) {
  switch (id) {
    case CaseId::quarter1: return {"comfort", "tire_penalty", "unused"};
    case CaseId::quarter2:
    case CaseId::quarter3: return {"comfort", "tire_force_range", "unused"};
    case CaseId::half1:
    case CaseId::half2: return {"comfort", "tire_force_range", "roll"};
    case CaseId::half3: return {"comfort_loss", "handling_loss", "roll"};
  }
  return {"unused", "unused", "unused"};
}

struct ObjectiveBaseline {
  std::vector<double> desired_unsprung_accel;  // quarter-1, aligned with the trimmed record
  std::optional<double> comfort;               // weighted body RMS of the reference design
  std::optional<double> handling;              // tire force range of the reference design
};

struct ObjectiveSpec {
  CaseId id = CaseId::quarter2;
  std::array<double, 3> weights{0.5, 0.5, 0.0};
  /// Each raw component is divided by its normalization before weighting.
  std::array<double, 3> normalization{1.0, 1.0, 1.0};
  ObjectiveBaseline baseline;
  WeightingCurve weighting = WeightingCurve::iso2631_wk();

  void validate() const {
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("objective weights must be >= 0");
    }
    for (double n : normalization) {
      if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("normalizations must be positive");
    }
    if (id == CaseId::half1 && weights[2] != 0.0) {
      throw ConfigError("half-1 uses no roll term: w3 must be 0");
    }
    if (id == CaseId::half3 && (!baseline.comfort || !baseline.handling)) {
      throw ConfigError("half-3 requires a baseline (comfort and handling of the half-2 optimum)");
    }
    if (id == CaseId::quarter1 && baseline.desired_unsprung_accel.empty()) {
      throw ConfigError("quarter-1 requires a desired tire acceleration history");
    }
  }
};

struct MetricSet {
  double comfort = 0.0;        // weighted body acceleration RMS, m/s^2
  double tire_range = 0.0;     // N (summed over wheels for the half car)
  double roll_rms = 0.0;       // rad
  double tire_penalty = 0.0;   // m/s^2
  double comfort_loss = 0.0;   // m/s^2, may be negative
  double handling_loss = 0.0;  // N, may be negative
};

struct ObjectiveValue {
  double total = 0.0;
  MetricSet metrics;
  std::array<double, 3> raw{};         // components before normalization
  std::array<double, 3> normalized{};  // raw / normalization
};

/// Metrics shared by all cases; the loss terms need the baseline.
inline MetricSet compute_metrics(const Trajectory& traj, const ObjectiveSpec& spec) {
  MetricSet m;
  m.comfort = weighted_rms(traj.a_s, traj.dt, spec.weighting);
  m.tire_range = tire_force_range(traj.tire_left);
  if (traj.kind == ModelKind::half) {
    m.tire_range += tire_force_range(traj.tire_right);
    m.roll_rms = rms(traj.phi_s);
  }
  if (!spec.baseline.desired_unsprung_accel.empty()) {
    m.tire_penalty = tire_accel_penalty(traj.a_u, spec.baseline.desired_unsprung_accel);
  }
  if (spec.baseline.comfort) m.comfort_loss = comfort_loss(m.comfort, *spec.baseline.comfort);
  if (spec.baseline.handling) m.handling_loss = handling_loss(m.tire_range, *spec.baseline.handling);
  return m;
}

inline std::array<double, 3> raw_components(CaseId id, const MetricSet& m) {
  switch (id) {
    case CaseId::quarter1: return {m.comfort, m.tire_penalty, 0.0};
    case CaseId::quarter2:
    case CaseId::quarter3: return {m.comfort, m.tire_range, 0.0};
    case CaseId::half1:
    case CaseId::half2: return {m.comfort, m.tire_range, m.roll_rms};
    case CaseId::half3: return {m.comfort_loss, m.handling_loss, m.roll_rms};
  }
  return {};
}

/// Weighted objective of a case on a trimmed trajectory.
inline ObjectiveValue evaluate_objective(const ObjectiveSpec& spec, const Trajectory& traj) {
  spec.validate();
  if (!traj.trimmed_from) {
    throw DomainError("objectives are evaluated on trimmed trajectories only");
  }
  if (is_half_car(spec.id) != (traj.kind == ModelKind::half)) {
    throw DomainError("trajectory model does not match the objective case");
  }
  ObjectiveValue out;
  out.metrics = compute_metrics(traj, spec);
  out.raw = raw_components(spec.id, out.metrics);
  for (std::size_t i = 0; i < 3; ++i) {
    out.normalized[i] = out.raw[i] / spec.normalization[i];
    out.total += spec.weights[i] * out.normalized[i];
  }
  return out;
}

}  // namespace suspopt
