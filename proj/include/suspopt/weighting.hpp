#pragma once

// Frequency weighting of acceleration records for ride comfort.
//
// The vertical whole-body weighting follows ISO 2631-1:1997, Annex A
// (Table A.2, weighting Wk). Its magnitude is the product of
//   band limiting  Hh(s) Hl(s)  (2nd-order Butterworth, f1 = 0.4 Hz, f2 = 100 Hz)
//   a-v transition Ht(s) = (1 + s/w3) / (1 + s/(Q4 w4) + s^2/w4^2)
//                  f3 = f4 = 12.5 Hz, Q4 = 0.63
//   upward step    Hs(s) = (s^2 + s w5/Q5 + w5^2) / (s^2 + s w6/Q6 + w6^2)
//                  f5 = 2.37 Hz, Q5 = 0.91, f6 = 3.35 Hz, Q6 = 0.91
// evaluated at s = j 2 pi f.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "suspopt/errors.hpp"
#include "suspopt/spectral.hpp"

namespace suspopt {

enum class WeightingKind { identity, wk, table };

struct Iso2631WkParameters {
  double f1 = 0.4;
  double f2 = 100.0;
  double f3 = 12.5;
  double f4 = 12.5;
  double q4 = 0.63;
  double f5 = 2.37;
  double q5 = 0.91;
  double f6 = 3.35;
  double q6 = 0.91;
};

class WeightingCurve {
 public:
  static WeightingCurve identity() { return WeightingCurve(WeightingKind::identity); }

  static WeightingCurve iso2631_wk(Iso2631WkParameters p = {}) {
    WeightingCurve c(WeightingKind::wk);
    c.wk_ = p;
    return c;
  }

  /// Piecewise-linear weight over frequency; the end values hold outside the table.
  static WeightingCurve from_table(std::vector<double> frequency, std::vector<double> weight) {
    if (frequency.size() != weight.size() || frequency.size() < 2) {
      throw DomainError("weighting table needs matching columns with at least two rows");
    }
    for (std::size_t i = 0; i < frequency.size(); ++i) {
      if (!std::isfinite(frequency[i]) || !std::isfinite(weight[i]) || weight[i] < 0.0) {
        throw DomainError("weighting table entries must be finite, weights non-negative");
      }
      if (i > 0 && !(frequency[i] > frequency[i - 1])) {
        throw DomainError("weighting table frequencies must be strictly increasing");
      }
    }
    WeightingCurve c(WeightingKind::table);
    c.freq_ = std::move(frequency);
    c.weight_ = std::move(weight);
    return c;
  }

  /// "identity" or "wk".
  static WeightingCurve by_name(const std::string& name) {
    if (name == "identity") return identity();
    if (name == "wk" || name == "iso2631-wk") return iso2631_wk();
    throw DomainError("unknown weighting curve '" + name + "'");
  }

  WeightingKind kind() const noexcept { return kind_; }

  double operator()(double f) const {
    if (!(f >= 0.0)) throw DomainError("weighting frequency must be non-negative");
    switch (kind_) {
      case WeightingKind::identity:
        return 1.0;
      case WeightingKind::wk:
        return wk_magnitude(f);
      case WeightingKind::table:
        break;
    }
    if (f <= freq_.front()) return weight_.front();
    if (f >= freq_.back()) return weight_.back();
    const auto it = std::upper_bound(freq_.begin(), freq_.end(), f);
    const auto i = static_cast<std::size_t>(it - freq_.begin()) - 1;
    return weight_[i] + (weight_[i + 1] - weight_[i]) * (f - freq_[i]) / (freq_[i + 1] - freq_[i]);
  }

 private:
  explicit WeightingCurve(WeightingKind k) : kind_(k) {}

  double wk_magnitude(double f) const {
    using C = std::complex<double>;
    const double two_pi = 2.0 * std::numbers::pi;
    const C s(0.0, two_pi * f);
    const double w1 = two_pi * wk_.f1, w2 = two_pi * wk_.f2, w3 = two_pi * wk_.f3,
                 w4 = two_pi * wk_.f4, w5 = two_pi * wk_.f5, w6 = two_pi * wk_.f6;
    const double q_band = 1.0 / std::numbers::sqrt2;
    const C hh = s * s / (s * s + s * w1 / q_band + w1 * w1);
    const C hl = w2 * w2 / (s * s + s * w2 / q_band + w2 * w2);
    const C ht = (1.0 + s / w3) / (1.0 + s / (wk_.q4 * w4) + s * s / (w4 * w4));
    const C hs = (s * s + s * w5 / wk_.q5 + w5 * w5) / (s * s + s * w6 / wk_.q6 + w6 * w6);
    return std::abs(hh * hl * ht * hs);
  }

  WeightingKind kind_;
  Iso2631WkParameters wk_{};
  std::vector<double> freq_;
  std::vector<double> weight_;
};

inline double weight_at(const WeightingCurve& curve, double f) { return curve(f); }

/// Frequency-weighted RMS: the mean-removed record is transformed, each
/// Fourier coefficient is multiplied by the weight at its frequency, and the
/// RMS follows from Parseval's identity.
inline double weighted_rms(std::span<const double> signal, double dt, const WeightingCurve& curve) {
  const std::size_t n = signal.size();
  if (n < 16) throw DomainError("weighted RMS needs at least 16 samples");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("sample interval must be positive");

  double mean = 0.0;
  for (double x : signal) mean += x;
  mean /= static_cast<double>(n);
  std::vector<double> centered(signal.begin(), signal.end());
  for (double& x : centered) x -= mean;

  const auto spectrum = rfft(centered);
  const double df = 1.0 / (static_cast<double>(n) * dt);
  double energy = 0.0;
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double w = curve(static_cast<double>(k) * df);
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    energy += (unpaired ? 1.0 : 2.0) * w * w * std::norm(spectrum[k]);
  }
  return std::sqrt(energy) / static_cast<double>(n);
}

/// Welch PSD of an acceleration record (one-sided, (m/s^2)^2/Hz).
inline Spectrum psd(std::span<const double> signal, double dt, const WelchOptions& opts) {
  if (signal.size() < 16) throw DomainError("PSD needs at least 16 samples");
  return welch_psd(signal, dt, opts);
}

/// PSD of the weighted signal: each bin scaled by weight^2.
inline Spectrum weighted_psd(std::span<const double> signal, double dt, const WelchOptions& opts,
                             const WeightingCurve& curve) {
  Spectrum s = psd(signal, dt, opts);
  for (std::size_t k = 0; k < s.density.size(); ++k) {
    const double w = curve(s.frequency[k]);
    s.density[k] *= w * w;
  }
  return s;
}

}  // namespace suspopt
