#pragma once

// Spring (force vs deflection) and damper (force vs velocity) laws.
//
// Sign conventions, shared by every model:
//   * spring deflection is positive in compression; a positive spring force
//     pushes the sprung and unsprung bodies apart;
//   * damper velocity is positive in extension (rebound); a positive damper
//     force resists extension.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "suspopt/errors.hpp"

namespace suspopt {

/// Linear stiffness (N/m) or damping rate (N s/m).
struct LinearLaw {
  double coefficient = 0.0;

  explicit LinearLaw(double c) : coefficient(c) {
    if (!std::isfinite(c) || !(c > 0.0)) {
      throw DomainError("linear coefficient must be positive and finite");
    }
  }

  double operator()(double u) const noexcept { return coefficient * u; }
};

/// F(v) = decay_amplitude * exp(-decay_rate * v) + growth_amplitude * exp(growth_rate * v)
///
/// With both amplitudes of opposite sign and equal magnitude the curve passes
/// through the origin, which is the usual shape of a passive damper.
struct DamperCurve {
  double decay_amplitude = 0.0;   // N
  double decay_rate = 0.0;        // s/m
  double growth_amplitude = 0.0;  // N
  double growth_rate = 0.0;       // s/m

  double operator()(double v) const noexcept {
    return decay_amplitude * std::exp(-decay_rate * v) +
           growth_amplitude * std::exp(growth_rate * v);
  }

  /// dF/dv
  double slope(double v) const noexcept {
    return -decay_rate * decay_amplitude * std::exp(-decay_rate * v) +
           growth_rate * growth_amplitude * std::exp(growth_rate * v);
  }

  bool operator==(const DamperCurve&) const = default;
};

/// Piecewise-linear force/deflection table. Outside the sampled range the
/// nearest end segment is extended.
class SpringTable {
 public:
  SpringTable(std::vector<double> deflection, std::vector<double> force)
      : deflection_(std::move(deflection)), force_(std::move(force)) {
    if (deflection_.size() != force_.size()) {
      throw DomainError("spring table columns differ in length");
    }
    if (deflection_.size() < 2) {
      throw DomainError("spring table needs at least two samples");
    }
    for (std::size_t i = 0; i < deflection_.size(); ++i) {
      if (!std::isfinite(deflection_[i]) || !std::isfinite(force_[i])) {
        throw InputError("spring table entries must be finite");
      }
      if (i > 0 && !(deflection_[i] > deflection_[i - 1])) {
        throw DomainError("spring table deflections must be strictly increasing");
      }
      if (i > 0 && force_[i] < force_[i - 1]) {
        throw DomainError("spring table forces must be non-decreasing");
      }
    }
  }

  const std::vector<double>& deflection() const noexcept { return deflection_; }
  const std::vector<double>& force() const noexcept { return force_; }

  double operator()(double x) const noexcept {
    const std::size_t seg = segment(x);
    const double x0 = deflection_[seg];
    const double x1 = deflection_[seg + 1];
    const double f0 = force_[seg];
    const double f1 = force_[seg + 1];
    if (x == x0) return f0;
    if (x == x1) return f1;
    return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
  }

  /// Index of the segment used for x, clamped to the end segments.
  std::size_t segment(double x) const noexcept {
    const auto it = std::upper_bound(deflection_.begin(), deflection_.end(), x);
    const auto idx = static_cast<std::size_t>(std::distance(deflection_.begin(), it));
    if (idx == 0) return 0;
    return std::min(idx - 1, deflection_.size() - 2);
  }

  bool operator==(const SpringTable&) const = default;

 private:
  std::vector<double> deflection_;
  std::vector<double> force_;
};

using CharacteristicLaw = std::variant<LinearLaw, DamperCurve, SpringTable>;

/// A base law multiplied by a positive scaling coefficient.
class ScaledCharacteristic {
 public:
  explicit ScaledCharacteristic(CharacteristicLaw base, double scale = 1.0)
      : base_(std::move(base)), scale_(scale) {
    if (!std::isfinite(scale) || !(scale > 0.0)) {
      throw DomainError("scaling coefficient must be positive and finite");
    }
  }

  const CharacteristicLaw& base() const noexcept { return base_; }
  double scale() const noexcept { return scale_; }

  bool is_linear() const noexcept { return std::holds_alternative<LinearLaw>(base_); }
  bool is_spring_law() const noexcept { return !std::holds_alternative<DamperCurve>(base_); }
  bool is_damper_law() const noexcept { return !std::holds_alternative<SpringTable>(base_); }

  /// Unscaled base force.
  double base_force(double u) const noexcept {
    return std::visit([u](const auto& law) { return law(u); }, base_);
  }

  double force(double u) const noexcept { return scale_ * base_force(u); }

 private:
  CharacteristicLaw base_;
  double scale_;
};

/// Multiplies every force of the characteristic by c.
inline ScaledCharacteristic scale_characteristic(const ScaledCharacteristic& h, double c) {
  if (!std::isfinite(c) || !(c > 0.0)) {
    throw DomainError("scaling coefficient must be positive and finite");
  }
  return ScaledCharacteristic(h.base(), h.scale() * c);
}

inline ScaledCharacteristic scale_characteristic(const CharacteristicLaw& base, double c) {
  return scale_characteristic(ScaledCharacteristic(base), c);
}

/// Damper force at extension velocity v.
inline double damper_force(const ScaledCharacteristic& curve, double v) {
  detail::require_finite(v, "damper velocity");
  if (!curve.is_damper_law()) throw DomainError("characteristic is not a damper law");
  return curve.force(v);
}

/// Spring force at compression deflection x.
inline double spring_force(const ScaledCharacteristic& curve, double x) {
  detail::require_finite(x, "spring deflection");
  if (!curve.is_spring_law()) throw DomainError("characteristic is not a spring law");
  return curve.force(x);
}

/// Local slope dF/du of a characteristic (left derivative at table nodes).
inline double characteristic_slope(const ScaledCharacteristic& curve, double u) {
  const double s = std::visit(
      [u](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, LinearLaw>) {
          return law.coefficient;
        } else if constexpr (std::is_same_v<T, DamperCurve>) {
          return law.slope(u);
        } else {
          const std::size_t seg = law.segment(u);
          const auto& x = law.deflection();
          const auto& f = law.force();
          return (f[seg + 1] - f[seg]) / (x[seg + 1] - x[seg]);
        }
      },
      curve.base());
  return curve.scale() * s;
}

/// Rewrites a damper curve with unit peak |force| on [v_lo, v_hi]; the peak
/// magnitude moves into the scale.
inline ScaledCharacteristic normalized(const DamperCurve& c, double v_lo, double v_hi) {
  if (!(v_hi > v_lo)) throw DomainError("normalization range is empty");
  double peak = 0.0;
  constexpr int kSamples = 2001;
  for (int i = 0; i < kSamples; ++i) {
    const double v = v_lo + (v_hi - v_lo) * i / (kSamples - 1);
    peak = std::max(peak, std::abs(c(v)));
  }
  if (!(peak > 0.0)) throw DomainError("cannot normalize an all-zero curve");
  return ScaledCharacteristic(DamperCurve{c.decay_amplitude / peak, c.decay_rate,
                                          c.growth_amplitude / peak, c.growth_rate},
                              peak);
}

inline ScaledCharacteristic normalized(const SpringTable& t) {
  double peak = 0.0;
  for (double f : t.force()) peak = std::max(peak, std::abs(f));
  if (!(peak > 0.0)) throw DomainError("cannot normalize an all-zero table");
  std::vector<double> f = t.force();
  for (double& v : f) v /= peak;
  return ScaledCharacteristic(SpringTable(t.deflection(), std::move(f)), peak);
}

// ---------------------------------------------------------------------------
// Fitting the exponential damper curve to measured samples.

struct DamperSample {
  double velocity = 0.0;  // m/s
  double force = 0.0;     // N
};

struct DamperFit {
  DamperCurve curve;
  double residual_rms = 0.0;  // N
  int iterations = 0;
};

class InsufficientDataError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Raised when no start converges; carries the best iterate seen.
class FitError : public Error {
 public:
  FitError(const std::string& what, DamperFit best) : Error(what), best_(best) {}
  const DamperFit& best() const noexcept { return best_; }

 private:
  DamperFit best_;
};

struct DamperFitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-14;  // on cost decrease and step size
};

namespace detail {

using Vec4 = Eigen::Vector4d;

struct FitProblem {
  std::vector<double> v;  // scaled to max |v| = 1
  std::vector<double> f;  // scaled to max |f| = 1

  double cost(const Vec4& p) const {
    double c = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double r = p[0] * std::exp(-p[1] * v[i]) + p[2] * std::exp(p[3] * v[i]) - f[i];
      c += r * r;
    }
    return 0.5 * c;
  }
};

struct LmResult {
  Vec4 params;
  double cost;
  int iterations;
  bool converged;
};

inline LmResult levenberg_marquardt(const FitProblem& prob, Vec4 p, const DamperFitOptions& opts) {
  const std::size_t n = prob.v.size();
  double cost = prob.cost(p);
  double lambda = 1e-3;
  Eigen::MatrixXd jac(n, 4);
  Eigen::VectorXd res(n);
  int it = 0;
  bool converged = false;

  for (; it < opts.max_iterations; ++it) {
    if (!std::isfinite(cost)) break;
    for (std::size_t i = 0; i < n; ++i) {
      const double ed = std::exp(-p[1] * prob.v[i]);
      const double eg = std::exp(p[3] * prob.v[i]);
      res[static_cast<Eigen::Index>(i)] = p[0] * ed + p[2] * eg - prob.f[i];
      jac(static_cast<Eigen::Index>(i), 0) = ed;
      jac(static_cast<Eigen::Index>(i), 1) = -p[0] * prob.v[i] * ed;
      jac(static_cast<Eigen::Index>(i), 2) = eg;
      jac(static_cast<Eigen::Index>(i), 3) = p[2] * prob.v[i] * eg;
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Vec4 grad = jac.transpose() * res;
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-15 || cost <= 1e-32) {
      converged = true;
      break;
    }

    bool improved = false;
    while (lambda < 1e16) {
      Eigen::Matrix4d a = jtj;
      for (int d = 0; d < 4; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      const Vec4 step = a.ldlt().solve(-grad);
      const Vec4 trial = p + step;
      const double trial_cost = prob.cost(trial);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double decrease = cost - trial_cost;
        const double step_norm = step.norm();
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (decrease <= opts.relative_tolerance * cost ||
            step_norm <= opts.relative_tolerance * (p.norm() + opts.relative_tolerance)) {
          converged = true;
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) {
      // No descent possible at any damping: a stationary point to working precision.
      converged = true;
      break;
    }
    if (converged) break;
  }
  return {p, cost, it, converged};
}

// Least-squares amplitudes for fixed rates; returns false if the two basis
// functions are numerically collinear on the data.
inline bool amplitudes_for_rates(const FitProblem& prob, double kd, double kg, Vec4& out) {
  double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
  for (std::size_t i = 0; i < prob.v.size(); ++i) {
    const double e1 = std::exp(-kd * prob.v[i]);
    const double e2 = std::exp(kg * prob.v[i]);
    s11 += e1 * e1;
    s12 += e1 * e2;
    s22 += e2 * e2;
    r1 += e1 * prob.f[i];
    r2 += e2 * prob.f[i];
  }
  const double det = s11 * s22 - s12 * s12;
  if (!(std::abs(det) > 1e-10 * s11 * s22)) return false;
  out = Vec4((r1 * s22 - r2 * s12) / det, kd, (r2 * s11 - r1 * s12) / det, kg);
  return true;
}

// Straight-line fit of log|f| on one velocity branch, using the outer half
// of that branch where its exponential dominates.
inline bool log_linear_branch(const FitProblem& prob, bool negative_side, double& amplitude,
                              double& rate) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  int sign_votes = 0;
  for (std::size_t i = 0; i < prob.v.size(); ++i) {
    const double v = prob.v[i];
    if (negative_side ? v > -0.5 : v < 0.5) continue;
    if (prob.f[i] == 0.0) continue;
    const double y = std::log(std::abs(prob.f[i]));
    sx += v;
    sy += y;
    sxx += v * v;
    sxy += v * y;
    sign_votes += prob.f[i] > 0 ? 1 : -1;
    ++count;
  }
  if (count < 2) return false;
  const double denom = count * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) return false;
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;
  amplitude = (sign_votes >= 0 ? 1.0 : -1.0) * std::exp(intercept);
  rate = negative_side ? -slope : slope;
  return std::isfinite(amplitude) && std::isfinite(rate);
}

inline std::vector<Vec4> initial_guesses(const FitProblem& prob) {
  std::vector<Vec4> starts;

  double a = 0, k = 0, b = 0, q = 0;
  if (log_linear_branch(prob, true, a, k) && log_linear_branch(prob, false, b, q)) {
    starts.emplace_back(a, k, b, q);
  }

  // Near-linear data: (c / eps) sinh(eps v) approximates c v.
  double svv = 0, svf = 0;
  for (std::size_t i = 0; i < prob.v.size(); ++i) {
    svv += prob.v[i] * prob.v[i];
    svf += prob.v[i] * prob.f[i];
  }
  if (svv > 0.0) {
    constexpr double eps = 1e-3;
    const double c = svf / svv;
    starts.emplace_back(-c / (2 * eps), eps, c / (2 * eps), eps);
  }

  // Coarse grid over the rates with exact amplitudes; keep the best few.
  constexpr std::array<double, 12> rates = {-8, -4, -2, -1, -0.5, -0.25,
                                            0.25, 0.5, 1, 2, 4, 8};
  std::vector<std::pair<double, Vec4>> ranked;
  for (double kd : rates) {
    for (double kg : rates) {
      Vec4 p;
      if (amplitudes_for_rates(prob, kd, kg, p)) ranked.emplace_back(prob.cost(p), p);
    }
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  for (std::size_t i = 0; i < std::min<std::size_t>(4, ranked.size()); ++i) {
    starts.push_back(ranked[i].second);
  }
  return starts;
}

}  // namespace detail

/// Least-squares fit of the exponential damper curve to (velocity, force)
/// samples with damped Gauss-Newton from several starts.
inline DamperFit fit_damper_curve(std::span<const DamperSample> samples,
                                  const DamperFitOptions& opts = {}) {
  if (samples.size() < 4) {
    throw InsufficientDataError("damper fit needs at least 4 samples");
  }
  std::vector<double> velocities;
  double v_scale = 0.0;
  double f_scale = 0.0;
  for (const auto& s : samples) {
    detail::require_finite(s.velocity, "sample velocity");
    detail::require_finite(s.force, "sample force");
    velocities.push_back(s.velocity);
    v_scale = std::max(v_scale, std::abs(s.velocity));
    f_scale = std::max(f_scale, std::abs(s.force));
  }
  std::sort(velocities.begin(), velocities.end());
  const auto distinct = std::unique(velocities.begin(), velocities.end()) - velocities.begin();
  if (distinct < 4) {
    throw InsufficientDataError("damper fit needs at least 4 distinct velocities");
  }
  if (f_scale == 0.0) {
    return {DamperCurve{0.0, 1.0, 0.0, 1.0}, 0.0, 0};
  }

  detail::FitProblem prob;
  for (const auto& s : samples) {
    prob.v.push_back(s.velocity / v_scale);
    prob.f.push_back(s.force / f_scale);
  }

  detail::LmResult best{detail::Vec4::Zero(), std::numeric_limits<double>::infinity(), 0, false};
  int total_iterations = 0;
  for (const auto& start : detail::initial_guesses(prob)) {
    const auto r = detail::levenberg_marquardt(prob, start, opts);
    total_iterations += r.iterations;
    if (std::isfinite(r.cost) && r.cost < best.cost) best = r;
  }

  DamperFit fit;
  fit.curve = DamperCurve{best.params[0] * f_scale, best.params[1] / v_scale,
                          best.params[2] * f_scale, best.params[3] / v_scale};
  fit.iterations = total_iterations;
  if (std::isfinite(best.cost)) {
    double ss = 0.0;
    for (const auto& s : samples) {
      const double r = fit.curve(s.velocity) - s.force;
      ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(samples.size()));
  } else {
    fit.residual_rms = std::numeric_limits<double>::infinity();
  }

  // A start that ran out of iterations but already reproduces the data to
  // ~1e-10 of the force scale is accepted.
  const bool good_enough = fit.residual_rms <= 1e-10 * f_scale;
  if (!std::isfinite(best.cost) || (!best.converged && !good_enough)) {
    throw FitError("damper curve fit did not converge", fit);
  }
  return fit;
}

}  // namespace suspopt
