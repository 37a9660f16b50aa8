// Copyright 2026 The hrtfkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hrtfkit/dsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "hrtfkit/error.hpp"

namespace hrtfkit::dsp {
namespace {

using Complex = std::complex<double>;

// Eigen::FFT caches plans internally, so each thread keeps its own instance.
Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

std::vector<Complex> forward(std::span<const double> x) {
  std::vector<double> in(x.begin(), x.end());
  std::vector<Complex> out;
  fft_engine().fwd(out, in);
  return out;
}

std::vector<Complex> forward(const std::vector<Complex>& x) {
  std::vector<Complex> out;
  fft_engine().fwd(out, x);
  return out;
}

std::vector<Complex> inverse(const std::vector<Complex>& x) {
  std::vector<Complex> out;
  fft_engine().inv(out, x);  // scaled by 1/N
  return out;
}

std::vector<double> to_double(std::span<const float> x) { return {x.begin(), x.end()}; }

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double wrap_polar(double deg) {
  // [-90, 270)
  while (deg < -90.0) deg += 360.0;
  while (deg >= 270.0) deg -= 360.0;
  return deg;
}

}  // namespace

std::vector<double> magnitude_spectrum(std::span<const double> signal) {
  if (signal.empty()) throw ValidationError("magnitude_spectrum: empty signal");
  const auto spec = forward(signal);
  std::vector<double> mag(spec.size());
  std::transform(spec.begin(), spec.end(), mag.begin(), [](const Complex& c) { return std::abs(c); });
  return mag;
}

double magnitude_to_db(double magnitude) {
  return 20.0 * std::log10(std::max(magnitude, kMagnitudeFloor));
}

std::vector<double> hrir_to_log_spectrum(std::span<const double> hrir) {
  if (hrir.size() != kHrirLength) {
    throw ValidationError("hrir_to_log_spectrum: expected " + std::to_string(kHrirLength) +
                          " samples, got " + std::to_string(hrir.size()));
  }
  for (double v : hrir) {
    if (!std::isfinite(v)) throw ValidationError("hrir_to_log_spectrum: non-finite sample");
  }
  auto mag = magnitude_spectrum(hrir);
  for (double& m : mag) m = magnitude_to_db(m);
  return mag;
}

std::vector<double> hrir_to_log_spectrum(std::span<const float> hrir) {
  const auto d = to_double(hrir);
  return hrir_to_log_spectrum(std::span<const double>(d));
}

std::vector<double> db_to_magnitude(std::span<const double> db) {
  std::vector<double> mag(db.size());
  std::transform(db.begin(), db.end(), mag.begin(),
                 [](double v) { return std::pow(10.0, v / 20.0); });
  return mag;
}

std::vector<double> min_phase_hrir(std::span<const double> magnitude) {
  const std::size_t n = magnitude.size();
  if (n < 2 || n % 2 != 0) {
    throw ValidationError("min_phase_hrir: magnitude length must be even and >= 2");
  }
  double peak = 0.0;
  for (double m : magnitude) {
    if (!std::isfinite(m) || m < 0.0) {
      throw ValidationError("min_phase_hrir: magnitudes must be finite and nonnegative");
    }
    peak = std::max(peak, m);
  }
  const double tol = 1e-9 * std::max(peak, kMagnitudeFloor);
  for (std::size_t k = 1; k < n / 2; ++k) {
    if (std::abs(magnitude[k] - magnitude[n - k]) > tol) {
      throw ValidationError("min_phase_hrir: magnitude is not conjugate-symmetric at bin " +
                            std::to_string(k));
    }
  }

  // Real cepstrum of the (symmetrized, floored) log magnitude.
  std::vector<Complex> log_mag(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t mirror = (n - k) % n;
    const double m = k <= n / 2 ? magnitude[k] : magnitude[mirror];
    log_mag[k] = std::log(std::max(m, kMagnitudeFloor));
  }
  const auto cepstrum = inverse(log_mag);

  // Fold onto the causal part: keep c[0] and c[N/2], double 1..N/2-1.
  std::vector<Complex> folded(n, Complex(0.0, 0.0));
  folded[0] = cepstrum[0].real();
  for (std::size_t k = 1; k < n / 2; ++k) folded[k] = 2.0 * cepstrum[k].real();
  folded[n / 2] = cepstrum[n / 2].real();

  auto spectrum = forward(folded);
  for (auto& c : spectrum) c = std::exp(c);
  const auto h = inverse(spectrum);
  std::vector<double> out(n);
  std::transform(h.begin(), h.end(), out.begin(), [](const Complex& c) { return c.real(); });
  return out;
}

std::vector<double> upsample4(std::span<const double> signal) {
  constexpr int kFactor = 4;
  constexpr int kHalfWidth = 16;  // input samples on each side
  constexpr int kTaps = 2 * kHalfWidth;
  // Windowed-sinc taps per fractional phase; tap j weighs sample floor(t) - 15 + j.
  static const auto kernel = [] {
    std::array<std::array<double, kTaps>, kFactor> k{};
    for (int phase = 1; phase < kFactor; ++phase) {
      const double frac = static_cast<double>(phase) / kFactor;
      for (int j = 0; j < kTaps; ++j) {
        const double x = frac + (kHalfWidth - 1 - j);
        const double px = std::numbers::pi * x;
        const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * x / kHalfWidth));
        k[static_cast<std::size_t>(phase)][static_cast<std::size_t>(j)] = std::sin(px) / px * window;
      }
    }
    return k;
  }();
  const auto n = static_cast<int>(signal.size());
  std::vector<double> out(signal.size() * kFactor, 0.0);
  for (int m = 0; m < n * kFactor; ++m) {
    const int base = m / kFactor;
    const int phase = m % kFactor;
    if (phase == 0) {
      out[static_cast<std::size_t>(m)] = signal[static_cast<std::size_t>(base)];
      continue;
    }
    const auto& taps = kernel[static_cast<std::size_t>(phase)];
    const int first = base - kHalfWidth + 1;
    const int lo = std::max(0, first);
    const int hi = std::min(n - 1, base + kHalfWidth);
    double acc = 0.0;
    for (int k = lo; k <= hi; ++k) {
      acc += signal[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(k - first)];
    }
    out[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

namespace {

std::size_t onset_index(std::span<const double> hrir, const char* ear) {
  const auto up = upsample4(hrir);
  double peak = 0.0;
  for (double v : up) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) throw ValidationError(std::string("extract_itd: ") + ear + " ear is silent");
  const double threshold = 0.1 * peak;
  for (std::size_t i = 0; i < up.size(); ++i) {
    if (std::abs(up[i]) > threshold) return i;
  }
  return up.size() - 1;  // unreachable: the peak itself exceeds the threshold
}

}  // namespace

double extract_itd(std::span<const double> left, std::span<const double> right,
                   double sample_rate) {
  if (left.size() != right.size() || left.empty()) {
    throw ValidationError("extract_itd: left and right HRIRs must have equal nonzero length");
  }
  if (!(sample_rate > 0.0)) throw ValidationError("extract_itd: sample rate must be positive");
  const auto onset_left = static_cast<double>(onset_index(left, "left"));
  const auto onset_right = static_cast<double>(onset_index(right, "right"));
  const double itd = (onset_left - onset_right) / (4.0 * sample_rate) * 1000.0;
  if (std::abs(itd) >= 1.5) {
    throw NumericalError("extract_itd: implausible ITD of " + std::to_string(itd) + " ms");
  }
  return itd;
}

double extract_itd(std::span<const float> left, std::span<const float> right,
                   double sample_rate) {
  const auto l = to_double(left);
  const auto r = to_double(right);
  return extract_itd(std::span<const double>(l), std::span<const double>(r), sample_rate);
}

std::size_t itd_delay_samples(double itd_ms, double sample_rate) {
  if (!std::isfinite(itd_ms)) throw ValidationError("apply_itd: ITD must be finite");
  return static_cast<std::size_t>(std::llround(std::abs(itd_ms) * sample_rate / 1000.0));
}

std::vector<double> delay(std::span<const double> signal, std::size_t samples) {
  std::vector<double> out(signal.size(), 0.0);
  for (std::size_t i = samples; i < signal.size(); ++i) out[i] = signal[i - samples];
  return out;
}

BinauralPair apply_itd(std::span<const double> left, std::span<const double> right,
                       double itd_ms, double sample_rate) {
  if (left.size() != right.size()) {
    throw ValidationError("apply_itd: left and right HRIRs must have equal length");
  }
  const std::size_t lag = itd_delay_samples(itd_ms, sample_rate);
  if (lag >= left.size()) {
    throw ValidationError("apply_itd: delay of " + std::to_string(lag) +
                          " samples does not fit in a " + std::to_string(left.size()) +
                          "-sample HRIR");
  }
  BinauralPair out;
  if (itd_ms > 0.0) {  // right ear leads
    out.left = delay(left, lag);
    out.right.assign(right.begin(), right.end());
  } else {
    out.left.assign(left.begin(), left.end());
    out.right = delay(right, lag);
  }
  return out;
}

PolarAngles spherical_to_polar(const SphericalAngles& s) {
  const double az = s.azimuth_deg * kDegToRad;
  const double el = s.elevation_deg * kDegToRad;
  const double x = std::cos(el) * std::cos(az);  // front
  const double y = std::cos(el) * std::sin(az);  // right
  const double z = std::sin(el);                 // up
  const double lateral = std::atan2(y, std::hypot(x, z)) * kRadToDeg;
  if (std::hypot(x, z) < 1e-12) {
    throw NumericalError("spherical_to_polar: direction lies on the interaural axis; "
                         "polar angle is degenerate");
  }
  return {lateral, wrap_polar(std::atan2(z, x) * kRadToDeg)};
}

SphericalAngles polar_to_spherical(const PolarAngles& p) {
  if (!(p.lateral_deg >= -90.0 && p.lateral_deg <= 90.0) ||
      !(p.polar_deg >= -90.0 && p.polar_deg < 270.0)) {
    throw ValidationError("polar_to_spherical: angles outside [-90,90] x [-90,270)");
  }
  if (std::abs(std::abs(p.lateral_deg) - 90.0) < 1e-12) {
    throw NumericalError("polar_to_spherical: interaural-axis input; polar angle is degenerate");
  }
  const double lat = p.lateral_deg * kDegToRad;
  const double pol = p.polar_deg * kDegToRad;
  const double y = std::sin(lat);
  const double x = std::cos(lat) * std::cos(pol);
  const double z = std::cos(lat) * std::sin(pol);
  const double el = std::atan2(z, std::hypot(x, y)) * kRadToDeg;
  if (std::hypot(x, y) < 1e-12) return {0.0, el};
  return {std::atan2(y, x) * kRadToDeg, el};
}

}  // namespace hrtfkit::dsp
