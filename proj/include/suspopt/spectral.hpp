#pragma once

// Real FFT (FFTW backend) and Welch-averaged spectral densities.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "suspopt/errors.hpp"

namespace suspopt {

namespace detail {

// FFTW's planner is not reentrant; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

}  // namespace detail

/// Forward real-to-complex transform of length n, yielding n/2 + 1 bins.
/// Unnormalized: X[k] = sum_j x[j] exp(-2 pi i j k / n).
inline std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t bins = n / 2 + 1;

  std::unique_ptr<double, detail::FftwFree> in(
      static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, detail::FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));

  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(),
                                FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in.get());
  fftw_execute(plan);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  std::vector<std::complex<double>> result(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    result[k] = {out.get()[k][0], out.get()[k][1]};
  }
  return result;
}

/// Frequencies (Hz) of the rfft bins for a record of n samples at step dt.
inline std::vector<double> rfft_frequencies(std::size_t n, double dt) {
  std::vector<double> f(n / 2 + 1);
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = static_cast<double>(k) / (static_cast<double>(n) * dt);
  }
  return f;
}

struct WelchOptions {
  std::size_t segment_length = 1024;  // samples
  double overlap = 0.5;               // fraction of segment_length
  std::size_t nfft = 0;               // 0: same as segment_length
};

struct Spectrum {
  std::vector<double> frequency;  // Hz
  std::vector<double> density;    // one-sided, unit^2 / Hz
};

struct CrossSpectrum {
  std::vector<double> frequency;
  std::vector<std::complex<double>> density;  // S_xy = conj(X) Y, one-sided
};

namespace detail {

inline std::vector<double> hann_window(std::size_t n) {
  // Periodic form, which tiles exactly at 50 % overlap.
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

// Windowed, mean-removed, zero-padded FFT of every segment.
inline std::vector<std::vector<std::complex<double>>> segment_spectra(
    std::span<const double> x, const WelchOptions& opts,
    const std::vector<double>& window) {
  const std::size_t seg = opts.segment_length;
  const std::size_t nfft = opts.nfft == 0 ? seg : opts.nfft;
  const auto hop = static_cast<std::size_t>(
      std::max(1.0, std::round(static_cast<double>(seg) * (1.0 - opts.overlap))));
  std::vector<std::vector<std::complex<double>>> out;
  std::vector<double> buf(nfft, 0.0);
  for (std::size_t start = 0; start + seg <= x.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < seg; ++i) mean += x[start + i];
    mean /= static_cast<double>(seg);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < seg; ++i) {
      buf[i] = (x[start + i] - mean) * window[i];
    }
    out.push_back(rfft(buf));
  }
  return out;
}

inline void check_welch(std::size_t n, double dt, const WelchOptions& opts) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("sample interval must be positive");
  if (opts.segment_length < 2) throw DomainError("Welch segment must hold at least 2 samples");
  if (opts.segment_length > n) throw DomainError("Welch segment longer than signal");
  if (!(opts.overlap >= 0.0 && opts.overlap < 1.0)) throw DomainError("Welch overlap must lie in [0, 1)");
  if (opts.nfft != 0 && opts.nfft < opts.segment_length) throw DomainError("nfft shorter than segment");
}

}  // namespace detail

/// Welch cross-spectral density of x and y with a Hann window.
/// The auto-spectrum of x is the special case y == x.
inline CrossSpectrum welch_csd(std::span<const double> x, std::span<const double> y,
                               double dt, const WelchOptions& opts) {
  if (x.size() != y.size()) throw DomainError("cross-spectrum inputs differ in length");
  detail::check_welch(x.size(), dt, opts);

  const std::size_t nfft = opts.nfft == 0 ? opts.segment_length : opts.nfft;
  const auto window = detail::hann_window(opts.segment_length);
  double window_power = 0.0;
  for (double w : window) window_power += w * w;

  const auto sx = detail::segment_spectra(x, opts, window);
  const auto sy = detail::segment_spectra(y, opts, window);

  CrossSpectrum result;
  result.frequency = rfft_frequencies(nfft, dt);
  result.density.assign(result.frequency.size(), {0.0, 0.0});
  for (std::size_t s = 0; s < sx.size(); ++s) {
    for (std::size_t k = 0; k < result.density.size(); ++k) {
      result.density[k] += std::conj(sx[s][k]) * sy[s][k];
    }
  }
  const double scale = dt / (window_power * static_cast<double>(sx.size()));
  for (std::size_t k = 0; k < result.density.size(); ++k) {
    const bool edge = k == 0 || (nfft % 2 == 0 && k == nfft / 2);
    result.density[k] *= edge ? scale : 2.0 * scale;
  }
  return result;
}

/// Welch power spectral density with a Hann window, one-sided; the integral
/// over frequency approximates the signal variance.
inline Spectrum welch_psd(std::span<const double> x, double dt, const WelchOptions& opts) {
  const auto csd = welch_csd(x, x, dt, opts);
  Spectrum s;
  s.frequency = csd.frequency;
  s.density.resize(csd.density.size());
  for (std::size_t k = 0; k < s.density.size(); ++k) s.density[k] = csd.density[k].real();
  return s;
}

/// Rectangle-rule integral of a spectrum over all bins.
inline double integrate_spectrum(const Spectrum& s) {
  if (s.frequency.size() < 2) return 0.0;
  const double df = s.frequency[1] - s.frequency[0];
  double sum = 0.0;
  for (double d : s.density) sum += d;
  return sum * df;
}

}  // namespace suspopt
