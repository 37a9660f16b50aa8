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

#ifndef HRTFKIT_DSP_HPP_
#define HRTFKIT_DSP_HPP_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace hrtfkit::dsp {

// HRIRs are transformed with a DFT of their own length (200 points for
// CIPIC, 220.5 Hz bin spacing at 44.1 kHz); no zero padding.
constexpr std::size_t kHrirLength = 200;
// Linear magnitudes below this are clamped before taking logarithms (-200 dB).
constexpr double kMagnitudeFloor = 1e-10;
constexpr double kFloorDb = -200.0;

// |DFT(x)| with the DFT size equal to x.size().
std::vector<double> magnitude_spectrum(std::span<const double> signal);

// 20 log10 |DFT(hrir)| of a 200-sample HRIR, floored at -200 dB.
std::vector<double> hrir_to_log_spectrum(std::span<const double> hrir);
std::vector<double> hrir_to_log_spectrum(std::span<const float> hrir);

std::vector<double> db_to_magnitude(std::span<const double> db);
double magnitude_to_db(double magnitude);

// Real-cepstrum minimum-phase reconstruction from a conjugate-symmetric
// magnitude spectrum (bin k equal to bin N-k). Returns an N-sample signal
// whose DFT magnitude equals the (floored) input.
std::vector<double> min_phase_hrir(std::span<const double> magnitude);

// 4x band-limited interpolation with a Hann-windowed sinc kernel.
std::vector<double> upsample4(std::span<const double> signal);

// Interaural time difference in milliseconds from onset detection: each
// ear's onset is the first 4x-upsampled sample above 10% of that ear's peak.
// Positive when the sound reaches the right ear first.
double extract_itd(std::span<const double> left, std::span<const double> right,
                   double sample_rate);
double extract_itd(std::span<const float> left, std::span<const float> right,
                   double sample_rate);

struct BinauralPair {
  std::vector<double> left;
  std::vector<double> right;
};

// Delays the lagging ear by round(|itd| * fs / 1000) whole samples (zero
// prefix, tail truncated); the leading ear is unchanged.
BinauralPair apply_itd(std::span<const double> left, std::span<const double> right,
                       double itd_ms, double sample_rate);
std::size_t itd_delay_samples(double itd_ms, double sample_rate);

// Delays a signal by `samples` with a zero prefix, keeping the length.
std::vector<double> delay(std::span<const double> signal, std::size_t samples);

struct SphericalAngles {
  double azimuth_deg = 0.0;    // (-180, 180], positive to the right
  double elevation_deg = 0.0;  // [-90, 90]
};

struct PolarAngles {
  double lateral_deg = 0.0;  // interaural-polar azimuth, [-90, 90]
  double polar_deg = 0.0;    // interaural-polar elevation, [-90, 270)
};

// sin(lat) = sin(az) cos(el), tan(pol) = tan(el) / cos(az).
// Throws NumericalError when the result lies on the interaural axis
// (|lateral| = 90), where the polar angle is undefined.
PolarAngles spherical_to_polar(const SphericalAngles& s);

// Inverse mapping. Input on the interaural axis is reported as degenerate;
// at the spherical poles the azimuth is returned as 0.
SphericalAngles polar_to_spherical(const PolarAngles& p);

}  // namespace hrtfkit::dsp

#endif  // HRTFKIT_DSP_HPP_
