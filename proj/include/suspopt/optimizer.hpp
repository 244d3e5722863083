#pragma once

// Box-constrained local minimization: projected quasi-Newton (BFGS inverse
// Hessian) with backtracking line search and central finite-difference
// gradients. Every evaluated point, finite-difference probes included, lies
// inside the box.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "suspopt/errors.hpp"
#include "suspopt/io.hpp"

namespace suspopt {

struct DesignVector {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const noexcept { return values.size(); }

  /// Scaling designs additionally require strictly positive lower bounds.
  void validate(bool positive_bounds = false) const {
    const std::size_t n = values.size();
    if (n == 0) throw DomainError("design vector is empty");
    if (lower.size() != n || upper.size() != n || (!names.empty() && names.size() != n)) {
      throw DomainError("design vector fields differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] <= upper[i])) {
        throw DomainError("design bounds must be finite with lower <= upper");
      }
      if (positive_bounds && !(lower[i] > 0.0)) {
        throw DomainError("scaling bounds must be positive");
      }
      if (!(values[i] >= lower[i] && values[i] <= upper[i])) {
        throw DomainError("design value outside its bounds");
      }
    }
  }
};

/// Objective value plus optional named components carried into the history.
struct Evaluation {
  double value = 0.0;
  std::vector<double> components;
};

struct OptimizerOptions {
  double gradient_tolerance = 1e-6;  // infinity norm of the projected gradient
  double step_tolerance = 1e-8;      // infinity norm of the accepted step, relative
  std::size_t max_evaluations = 400;
  std::size_t max_iterations = 500;
  double fd_relative_step = 1e-4;
  double armijo = 1e-4;
  int max_backtracks = 40;
  bool parallel_gradient = false;
};

enum class Termination {
  gradient_tolerance,
  step_tolerance,
  evaluation_budget,
  iteration_limit,
  line_search_failure,
};

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::gradient_tolerance: return "gradient_tolerance";
    case Termination::step_tolerance: return "step_tolerance";
    case Termination::evaluation_budget: return "evaluation_budget";
    case Termination::iteration_limit: return "iteration_limit";
    case Termination::line_search_failure: return "line_search_failure";
  }
  return "?";
}

struct IterationRecord {
  std::size_t iteration = 0;
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> components;
  double step_norm = 0.0;
  double gradient_norm = 0.0;  // projected gradient, infinity norm
  std::size_t evaluations = 0;  // cumulative
};

struct RunHistory {
  std::vector<IterationRecord> records;  // accepted iterates, first is the start
  Termination reason = Termination::iteration_limit;
  std::size_t evaluations = 0;
};

struct OptimizationResult {
  DesignVector best;
  Evaluation value;
  RunHistory history;
};

namespace detail {

class BudgetExhausted {};

template <class F>
Evaluation call_objective(F& f, std::span<const double> x) {
  using R = std::invoke_result_t<F&, std::span<const double>>;
  if constexpr (std::is_convertible_v<R, double>) {
    return Evaluation{static_cast<double>(f(x)), {}};
  } else {
    return f(x);
  }
}

template <class F>
class CountingObjective {
 public:
  CountingObjective(F& f, std::size_t budget) : f_(f), budget_(budget) {}

  Evaluation operator()(std::span<const double> x) {
    if (count_ >= budget_) throw BudgetExhausted{};
    ++count_;
    return call_objective(f_, x);
  }

  /// Evaluates several points, in parallel if requested; results stay in input order.
  std::vector<Evaluation> batch(const std::vector<std::vector<double>>& points, bool parallel) {
    if (count_ + points.size() > budget_) throw BudgetExhausted{};
    count_ += points.size();
    std::vector<Evaluation> out(points.size());
    if (parallel && points.size() > 1) {
      std::vector<std::future<Evaluation>> futures;
      futures.reserve(points.size());
      for (const auto& p : points) {
        futures.push_back(std::async(std::launch::async, [this, &p] {
          return call_objective(f_, std::span<const double>(p));
        }));
      }
      for (std::size_t i = 0; i < points.size(); ++i) out[i] = futures[i].get();
    } else {
      for (std::size_t i = 0; i < points.size(); ++i) out[i] = call_objective(f_, points[i]);
    }
    return out;
  }

  std::size_t count() const noexcept { return count_; }

 private:
  F& f_;
  std::size_t budget_;
  std::size_t count_ = 0;
};

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline std::vector<double> projected_gradient(const std::vector<double>& x,
                                              const std::vector<double>& g,
                                              const DesignVector& box) {
  std::vector<double> pg(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double moved = std::clamp(x[i] - g[i], box.lower[i], box.upper[i]);
    pg[i] = x[i] - moved;
  }
  return pg;
}

// Central differences with probes clipped into the box; one-sided at bounds.
template <class F>
std::vector<double> fd_gradient(CountingObjective<F>& f, const std::vector<double>& x, double fx,
                                const DesignVector& box, const OptimizerOptions& opts) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> points;
  std::vector<std::pair<int, int>> slots(n, {-1, -1});  // index into points, -1 = use fx
  std::vector<std::pair<double, double>> where(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = opts.fd_relative_step * std::max(std::abs(x[i]), 1.0);
    const double hi = std::min(x[i] + h, box.upper[i]);
    const double lo = std::max(x[i] - h, box.lower[i]);
    where[i] = {lo, hi};
    if (hi != x[i]) {
      auto p = x;
      p[i] = hi;
      slots[i].second = static_cast<int>(points.size());
      points.push_back(std::move(p));
    }
    if (lo != x[i]) {
      auto p = x;
      p[i] = lo;
      slots[i].first = static_cast<int>(points.size());
      points.push_back(std::move(p));
    }
  }
  const auto values = f.batch(points, opts.parallel_gradient);
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double f_lo = slots[i].first < 0 ? fx : values[static_cast<std::size_t>(slots[i].first)].value;
    const double f_hi = slots[i].second < 0 ? fx : values[static_cast<std::size_t>(slots[i].second)].value;
    const double width = where[i].second - where[i].first;
    g[i] = width > 0.0 ? (f_hi - f_lo) / width : 0.0;
    if (!std::isfinite(g[i])) g[i] = 0.0;
  }
  return g;
}

}  // namespace detail

/// Minimizes `objective` over the box of `x0`. The objective takes a
/// std::span<const double> and returns a double or an Evaluation.
template <class F>
OptimizationResult minimize(F&& objective, const DesignVector& x0, const OptimizerOptions& opts = {}) {
  x0.validate();
  const std::size_t n = x0.size();
  detail::CountingObjective<std::remove_reference_t<F>> f(objective, opts.max_evaluations);

  OptimizationResult result;
  result.best = x0;
  RunHistory& hist = result.history;

  std::vector<double> x = x0.values;
  Evaluation fx;
  try {
    fx = f(x);
  } catch (const detail::BudgetExhausted&) {
    throw DomainError("evaluation budget must allow at least one evaluation");
  }
  if (!std::isfinite(fx.value)) throw DomainError("objective is not finite at the initial design");
  result.value = fx;

  std::vector<double> g;
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
  bool scaled = false;

  auto record = [&](std::size_t it, double step_norm, double gnorm) {
    hist.records.push_back({it, x, fx.value, fx.components, step_norm, gnorm, f.count()});
  };

  try {
    g = detail::fd_gradient(f, x, fx.value, x0, opts);
    double gnorm = detail::inf_norm(detail::projected_gradient(x, g, x0));
    record(0, 0.0, gnorm);

    for (std::size_t it = 1;; ++it) {
      if (gnorm <= opts.gradient_tolerance) {
        hist.reason = Termination::gradient_tolerance;
        break;
      }
      if (it > opts.max_iterations) {
        hist.reason = Termination::iteration_limit;
        break;
      }

      // Variables held at a bound by the gradient take no part in the step.
      std::vector<bool> active(n, false);
      for (std::size_t i = 0; i < n; ++i) {
        active[i] = (x[i] <= x0.lower[i] && g[i] > 0.0) || (x[i] >= x0.upper[i] && g[i] < 0.0);
      }
      Eigen::VectorXd ge(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) ge[static_cast<Eigen::Index>(i)] = active[i] ? 0.0 : g[i];
      Eigen::MatrixXd hfree = hinv;
      for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        hfree.row(static_cast<Eigen::Index>(i)).setZero();
        hfree.col(static_cast<Eigen::Index>(i)).setZero();
      }
      Eigen::VectorXd d = -hfree * ge;
      if (!(d.dot(ge) < 0.0)) {
        hinv.setIdentity();
        scaled = false;
        d = -ge;
      }

      // Backtracking along the projected path.
      double alpha = 1.0;
      bool accepted = false;
      std::vector<double> xt(n);
      Evaluation ft;
      for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= 0.5) {
        double decrease = 0.0;
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
          xt[i] = std::clamp(x[i] + alpha * d[static_cast<Eigen::Index>(i)], x0.lower[i], x0.upper[i]);
          decrease += g[i] * (xt[i] - x[i]);
          moved = moved || xt[i] != x[i];
        }
        if (!moved) break;
        ft = f(xt);
        if (std::isfinite(ft.value) && ft.value <= fx.value + opts.armijo * decrease &&
            ft.value <= fx.value) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        hist.reason = Termination::line_search_failure;
        break;
      }

      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = xt[i] - x[i];
      x = xt;
      fx = ft;
      result.best.values = x;
      result.value = fx;

      const double step_norm = detail::inf_norm(s);
      double xscale = 1.0;
      for (double v : x) xscale = std::max(xscale, std::abs(v));

      std::vector<double> g_new;
      try {
        g_new = detail::fd_gradient(f, x, fx.value, x0, opts);
      } catch (const detail::BudgetExhausted&) {
        record(it, step_norm, std::numeric_limits<double>::quiet_NaN());
        throw;
      }
      gnorm = detail::inf_norm(detail::projected_gradient(x, g_new, x0));
      record(it, step_norm, gnorm);

      Eigen::VectorXd se(static_cast<Eigen::Index>(n)), ye(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        se[static_cast<Eigen::Index>(i)] = s[i];
        ye[static_cast<Eigen::Index>(i)] = g_new[i] - g[i];
      }
      g = std::move(g_new);
      const double sy = se.dot(ye);
      if (sy > 1e-12 * se.norm() * ye.norm()) {
        if (!scaled) {
          hinv *= sy / ye.squaredNorm();
          scaled = true;
        }
        const double rho = 1.0 / sy;
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(hinv.rows(), hinv.cols());
        hinv = (eye - rho * se * ye.transpose()) * hinv * (eye - rho * ye * se.transpose()) +
               rho * se * se.transpose();
      }

      if (step_norm <= opts.step_tolerance * xscale) {
        hist.reason = Termination::step_tolerance;
        break;
      }
    }
  } catch (const detail::BudgetExhausted&) {
    hist.reason = Termination::evaluation_budget;
  }
  hist.evaluations = f.count();
  return result;
}

// ---------------------------------------------------------------------------
// Objective surfaces over two design variables

struct GridAxis {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t resolution = 2;
};

struct GridSurface {
  std::vector<double> x;       // first variable
  std::vector<double> y;       // second variable
  std::vector<double> values;  // values[i * y.size() + j], NaN where missing
  std::vector<bool> missing;
  std::size_t argmin_i = 0;
  std::size_t argmin_j = 0;
  double minimum = std::numeric_limits<double>::quiet_NaN();

  double at(std::size_t i, std::size_t j) const { return values[i * y.size() + j]; }
};

/// Dense evaluation over the Cartesian grid; first minimum in row-major order wins.
template <class F>
GridSurface grid_surface(F&& objective, const std::vector<GridAxis>& axes) {
  if (axes.size() != 2) throw DomainError("objective surfaces need exactly two design variables");
  for (const auto& a : axes) {
    if (a.resolution < 2) throw DomainError("grid resolution must be at least 2");
    if (!std::isfinite(a.lower) || !std::isfinite(a.upper) || !(a.upper > a.lower)) {
      throw DomainError("grid range must be finite and non-empty");
    }
  }
  auto linspace = [](const GridAxis& a) {
    std::vector<double> v(a.resolution);
    for (std::size_t i = 0; i < a.resolution; ++i) {
      v[i] = a.lower + (a.upper - a.lower) * static_cast<double>(i) /
                           static_cast<double>(a.resolution - 1);
    }
    v.back() = a.upper;
    return v;
  };
  GridSurface s;
  s.x = linspace(axes[0]);
  s.y = linspace(axes[1]);
  s.values.resize(s.x.size() * s.y.size());
  s.missing.assign(s.values.size(), false);
  bool found = false;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    for (std::size_t j = 0; j < s.y.size(); ++j) {
      const std::vector<double> p{s.x[i], s.y[j]};
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = detail::call_objective(objective, std::span<const double>(p)).value;
      } catch (const Error&) {
        v = std::numeric_limits<double>::quiet_NaN();
      }
      const std::size_t k = i * s.y.size() + j;
      if (!std::isfinite(v)) {
        s.missing[k] = true;
        s.values[k] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      s.values[k] = v;
      if (!found || v < s.minimum) {
        found = true;
        s.minimum = v;
        s.argmin_i = i;
        s.argmin_j = j;
      }
    }
  }
  return s;
}

/// Three columns (x, y, value) for contour plotting; missing cells print as nan.
inline void write_grid(const std::filesystem::path& path, const GridSurface& s,
                       const std::string& x_name = "x", const std::string& y_name = "y") {
  io::Table t;
  t.header = {x_name, y_name, "value"};
  t.columns.resize(3);
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    for (std::size_t j = 0; j < s.y.size(); ++j) {
      t.columns[0].push_back(s.x[i]);
      t.columns[1].push_back(s.y[j]);
      t.columns[2].push_back(s.at(i, j));
    }
  }
  t.attributes.emplace_back("argmin", io::format_number(s.x[s.argmin_i]) + " " +
                                          io::format_number(s.y[s.argmin_j]));
  t.attributes.emplace_back("minimum", io::format_number(s.minimum));
  io::write_table(path, t);
}

}  // namespace suspopt
