#pragma once

// Frequency-response magnitudes estimated from chirp simulations (H1:
// cross-spectrum of output with input over the input auto-spectrum).

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "suspopt/errors.hpp"
#include "suspopt/io.hpp"
#include "suspopt/road.hpp"
#include "suspopt/simulate.hpp"
#include "suspopt/spectral.hpp"

namespace suspopt {

enum class BodeOutput { body_displacement, unsprung_displacement };

inline std::string to_string(BodeOutput o) {
  return o == BodeOutput::body_displacement ? "body_displacement" : "unsprung_displacement";
}

struct BodeOptions {
  ChirpRoadSpec chirp{};
  SimulationSettings sim{};
  double segment_seconds = 8.0;
  double overlap = 0.5;
  std::size_t zero_pad_factor = 1;
};

struct BodeResult {
  std::vector<double> frequency;  // Hz, restricted to [f0, f1]
  std::vector<double> magnitude;  // NaN where missing
  std::vector<bool> missing;
  std::string label;
};

/// H1 magnitude between two records, reported on [f_lo, f_hi].
inline BodeResult estimate_frequency_response(std::span<const double> input,
                                              std::span<const double> output, double dt,
                                              const WelchOptions& welch, double f_lo,
                                              double f_hi) {
  const auto sxx = welch_csd(input, input, dt, welch);
  const auto sxy = welch_csd(input, output, dt, welch);
  double peak_power = 0.0;
  for (const auto& v : sxx.density) peak_power = std::max(peak_power, v.real());

  BodeResult r;
  for (std::size_t k = 0; k < sxx.frequency.size(); ++k) {
    const double f = sxx.frequency[k];
    if (f < f_lo || f > f_hi) continue;
    const double pxx = sxx.density[k].real();
    r.frequency.push_back(f);
    if (!(pxx > 1e-14 * peak_power)) {
      r.magnitude.push_back(std::numeric_limits<double>::quiet_NaN());
      r.missing.push_back(true);
    } else {
      r.magnitude.push_back(std::abs(sxy.density[k]) / pxx);
      r.missing.push_back(false);
    }
  }
  return r;
}

namespace detail {

inline bool model_is_linear(const QuarterCar& car) {
  return car.params().spring.is_linear() && car.params().damper.is_linear();
}

inline bool model_is_linear(const HalfCar& car) {
  const auto& p = car.params();
  return p.left_spring.is_linear() && p.right_spring.is_linear() && p.left_damper.is_linear() &&
         p.right_damper.is_linear();
}

}  // namespace detail

/// Numeric Bode magnitude of body or unsprung displacement against road
/// displacement. The half car is driven with the same chirp on both tracks.
template <class Car>
BodeResult numeric_bode(const Car& car, const BodeOptions& opts, BodeOutput output) {
  const auto& c = opts.chirp;
  RoadProfile road = chirp_profile(c.f0, c.f1, c.amplitude, c.duration, c.dt);
  if constexpr (std::is_same_v<Car, HalfCar>) road.right = road.left;
  const Trajectory traj = simulate(car, road, opts.sim);

  const std::vector<double>& out = output == BodeOutput::body_displacement ? traj.z_s : traj.z_u;
  WelchOptions welch;
  welch.segment_length = static_cast<std::size_t>(std::llround(opts.segment_seconds / traj.dt));
  welch.overlap = opts.overlap;
  welch.nfft = welch.segment_length * std::max<std::size_t>(opts.zero_pad_factor, 1);

  BodeResult r = estimate_frequency_response(traj.road_left, out, traj.dt, welch, c.f0, c.f1);
  if (detail::model_is_linear(car)) {
    r.label = "linear frequency response, " + to_string(output);
  } else {
    r.label = "describing response at chirp amplitude " + io::format_number(c.amplitude) +
              " m, " + to_string(output);
  }
  return r;
}

/// Frequency of the largest magnitude on [f_lo, f_hi], refined by a parabola
/// through the peak bin and its neighbours.
inline double peak_frequency(const BodeResult& r, double f_lo, double f_hi) {
  std::size_t best = r.frequency.size();
  for (std::size_t k = 0; k < r.frequency.size(); ++k) {
    if (r.missing[k] || r.frequency[k] < f_lo || r.frequency[k] > f_hi) continue;
    if (best == r.frequency.size() || r.magnitude[k] > r.magnitude[best]) best = k;
  }
  if (best == r.frequency.size()) throw DomainError("no valid bins in the peak search range");
  if (best == 0 || best + 1 >= r.frequency.size() || r.missing[best - 1] || r.missing[best + 1]) {
    return r.frequency[best];
  }
  const double ym = r.magnitude[best - 1], y0 = r.magnitude[best], yp = r.magnitude[best + 1];
  const double denom = ym - 2.0 * y0 + yp;
  if (!(denom < 0.0)) return r.frequency[best];
  const double offset = 0.5 * (ym - yp) / denom;
  return r.frequency[best] + offset * (r.frequency[best + 1] - r.frequency[best]);
}

inline void write_bode(const std::filesystem::path& path, const BodeResult& r) {
  io::Table t;
  t.attributes.emplace_back("label", r.label);
  t.header = {"frequency", "magnitude"};
  t.columns = {r.frequency, r.magnitude};
  io::write_table(path, t);
}

}  // namespace suspopt
