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

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hrtfkit/dataset.hpp"
#include "hrtfkit/dsp.hpp"
#include "hrtfkit/error.hpp"

namespace hrtfkit {
namespace {

constexpr double kFs = 44100.0;

std::vector<double> impulse(std::size_t at, double amplitude = 1.0) {
  std::vector<double> h(dsp::kHrirLength, 0.0);
  h[at] = amplitude;
  return h;
}

// Damped resonances plus two reflections after a 12-sample onset delay,
// shaped like a raw measurement.
std::vector<double> measured_like(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> h(dsp::kHrirLength, 0.0);
  for (int r = 0; r < 3; ++r) {
    const double freq = 0.05 + 0.4 * u(rng);
    const double decay = 3.0 + 8.0 * u(rng);
    const double amp = 0.3 + u(rng);
    for (std::size_t n = 12; n < h.size(); ++n) {
      const double t = static_cast<double>(n - 12);
      h[n] += amp * std::exp(-t / decay) * std::cos(2.0 * std::numbers::pi * freq * t);
    }
  }
  for (int e = 0; e < 2; ++e) {
    const auto lag = static_cast<std::size_t>(3 + 20 * u(rng));
    const double g = 0.5 * (u(rng) - 0.5);
    for (std::size_t n = h.size(); n-- > lag;) h[n] += g * h[n - lag];
  }
  return h;
}

std::vector<double> shift(const std::vector<double>& x, std::size_t k) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = k; n < x.size(); ++n) y[n] = x[n - k];
  return y;
}

std::vector<double> symmetric_random_magnitude(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> db(-40.0, 20.0);
  const std::size_t n = dsp::kHrirLength;
  std::vector<double> mag(n);
  for (std::size_t k = 0; k <= n / 2; ++k) mag[k] = std::pow(10.0, db(rng) / 20.0);
  for (std::size_t k = n / 2 + 1; k < n; ++k) mag[k] = mag[n - k];
  return mag;
}

TEST(LogSpectrum, UnitImpulseIsFlatZeroDb) {
  const auto db = dsp::hrir_to_log_spectrum(std::span<const double>(impulse(0)));
  ASSERT_EQ(db.size(), 200u);
  for (double v : db) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(LogSpectrum, SilenceHitsTheFloor) {
  const std::vector<double> zeros(200, 0.0);
  for (double v : dsp::hrir_to_log_spectrum(std::span<const double>(zeros))) {
    EXPECT_DOUBLE_EQ(v, -200.0);
  }
}

TEST(LogSpectrum, DoubledImpulseIsSixDb) {
  for (double v : dsp::hrir_to_log_spectrum(std::span<const double>(impulse(0, 2.0)))) {
    EXPECT_NEAR(v, 6.020599913279624, 1e-9);
  }
}

TEST(LogSpectrum, RejectsWrongLength) {
  const std::vector<double> short_hrir(128, 0.0);
  EXPECT_THROW(dsp::hrir_to_log_spectrum(std::span<const double>(short_hrir)), ValidationError);
}

TEST(LogSpectrum, MatchesDirectDft) {
  std::mt19937_64 rng(11);
  const auto h = measured_like(rng);
  const auto db = dsp::hrir_to_log_spectrum(std::span<const double>(h));
  for (std::size_t k : {0u, 1u, 37u, 100u, 163u}) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < h.size(); ++n) {
      acc += h[n] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * n) / 200.0);
    }
    EXPECT_NEAR(db[k], 20.0 * std::log10(std::abs(acc)), 1e-9) << "bin " << k;
  }
}

TEST(LogSpectrum, ConjugateSymmetricBins) {
  std::mt19937_64 rng(12);
  const auto db = dsp::hrir_to_log_spectrum(std::span<const double>(measured_like(rng)));
  for (std::size_t k = 1; k <= 99; ++k) EXPECT_NEAR(db[k], db[200 - k], 1e-9);
}

TEST(MinPhase, FlatMagnitudeGivesUnitImpulse) {
  const std::vector<double> ones(200, 1.0);
  const auto h = dsp::min_phase_hrir(ones);
  EXPECT_NEAR(h[0], 1.0, 1e-12);
  for (std::size_t n = 1; n < h.size(); ++n) EXPECT_NEAR(h[n], 0.0, 1e-12);
}

TEST(MinPhase, RemovesPureDelay) {
  const auto mag = dsp::magnitude_spectrum(impulse(5));
  const auto h = dsp::min_phase_hrir(mag);
  EXPECT_NEAR(h[0], 1.0, 1e-12);
  for (std::size_t n = 1; n < h.size(); ++n) EXPECT_NEAR(h[n], 0.0, 1e-12);
}

TEST(MinPhase, PreservesRandomMagnitudes) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mag = symmetric_random_magnitude(rng);
    const auto out = dsp::magnitude_spectrum(dsp::min_phase_hrir(mag));
    for (std::size_t k = 0; k < mag.size(); ++k) {
      ASSERT_NEAR(20.0 * std::log10(out[k]), 20.0 * std::log10(mag[k]), 1e-4)
          << "trial " << trial << " bin " << k;
    }
  }
}

TEST(MinPhase, PrefixEnergyDominatesTheMeasurement) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = measured_like(rng);
    const auto m = dsp::min_phase_hrir(dsp::magnitude_spectrum(h));
    double eh = 0.0, em = 0.0;
    for (std::size_t n = 0; n < h.size(); ++n) {
      eh += h[n] * h[n];
      em += m[n] * m[n];
      ASSERT_GE(em, eh - 1e-9 * (1.0 + eh)) << "trial " << trial << " prefix " << n;
    }
  }
}

TEST(MinPhase, RejectsAsymmetricMagnitude) {
  std::vector<double> mag(200, 1.0);
  mag[3] = 2.0;
  EXPECT_THROW(dsp::min_phase_hrir(mag), ValidationError);
}

TEST(ExtractItd, IdenticalEarsGiveZero) {
  std::mt19937_64 rng(21);
  const auto h = measured_like(rng);
  EXPECT_DOUBLE_EQ(dsp::extract_itd(std::span<const double>(h), std::span<const double>(h), kFs), 0.0);
}

TEST(ExtractItd, RightDelayedBy44Samples) {
  std::mt19937_64 rng(22);
  const auto h = measured_like(rng);
  const auto r = shift(h, 44);
  EXPECT_NEAR(dsp::extract_itd(std::span<const double>(h), std::span<const double>(r), kFs), -0.9977, 0.01);
}

TEST(ExtractItd, LeftDelayedBy22Samples) {
  std::mt19937_64 rng(23);
  const auto h = measured_like(rng);
  const auto l = shift(h, 22);
  EXPECT_NEAR(dsp::extract_itd(std::span<const double>(l), std::span<const double>(h), kFs), 0.499, 0.01);
}

TEST(ExtractItd, ShiftPropertyForEveryLag) {
  std::mt19937_64 rng(24);
  const auto h = measured_like(rng);
  for (std::size_t k = 1; k <= 60; ++k) {
    const auto r = shift(h, k);
    const double itd = dsp::extract_itd(std::span<const double>(h), std::span<const double>(r), kFs);
    EXPECT_NEAR(itd, -static_cast<double>(k) / kFs * 1000.0, 0.25 / kFs * 1000.0) << "k=" << k;
  }
}

TEST(ExtractItd, SilentEarIsRejected) {
  std::mt19937_64 rng(25);
  const auto h = measured_like(rng);
  const std::vector<double> zeros(200, 0.0);
  EXPECT_THROW(dsp::extract_itd(std::span<const double>(h), std::span<const double>(zeros), kFs),
               ValidationError);
}

TEST(ExtractItd, ImplausibleLagIsRejected) {
  std::mt19937_64 rng(26);
  const auto h = measured_like(rng);
  const auto r = shift(h, 70);  // 1.59 ms
  EXPECT_THROW(dsp::extract_itd(std::span<const double>(h), std::span<const double>(r), kFs),
               NumericalError);
}

TEST(ApplyItd, ZeroLeavesBothEars) {
  std::mt19937_64 rng(31);
  const auto l = measured_like(rng);
  const auto r = measured_like(rng);
  const auto out = dsp::apply_itd(l, r, 0.0, kFs);
  EXPECT_EQ(out.left, l);
  EXPECT_EQ(out.right, r);
}

TEST(ApplyItd, PositiveItdDelaysLeftBy22) {
  const auto h = impulse(0);
  EXPECT_EQ(dsp::itd_delay_samples(0.5, kFs), 22u);
  const auto out = dsp::apply_itd(h, h, 0.5, kFs);
  EXPECT_EQ(out.left, impulse(22));
  EXPECT_EQ(out.right, h);
}

TEST(ApplyItd, SmallNegativeItdDelaysRightByOne) {
  const auto h = impulse(0);
  const auto out = dsp::apply_itd(h, h, -0.0222, kFs);
  EXPECT_EQ(out.left, h);
  EXPECT_EQ(out.right, impulse(1));
}

TEST(ApplyItd, DelayBeyondLengthIsRejected) {
  const auto h = impulse(0);
  EXPECT_THROW(dsp::apply_itd(h, h, 5.0, kFs), ValidationError);
}

TEST(Coordinates, OriginAndEquatorAreFixed) {
  const auto a = dsp::polar_to_spherical({0.0, 0.0});
  EXPECT_NEAR(a.azimuth_deg, 0.0, 1e-12);
  EXPECT_NEAR(a.elevation_deg, 0.0, 1e-12);
  const auto b = dsp::polar_to_spherical({30.0, 0.0});
  EXPECT_NEAR(b.azimuth_deg, 30.0, 1e-12);
  EXPECT_NEAR(b.elevation_deg, 0.0, 1e-12);
}

TEST(Coordinates, HandEvaluatedPair) {
  const auto p = dsp::spherical_to_polar({30.0, 45.0});
  EXPECT_NEAR(p.lateral_deg, 20.705, 5e-4);
  EXPECT_NEAR(p.polar_deg, 49.107, 5e-4);
  const auto s = dsp::polar_to_spherical(p);
  EXPECT_NEAR(s.azimuth_deg, 30.0, 1e-9);
  EXPECT_NEAR(s.elevation_deg, 45.0, 1e-9);
}

TEST(Coordinates, RoundTripOverTheCipicGrid) {
  const DirectionGrid grid = DirectionGrid::cipic();
  for (std::size_t d = 0; d < grid.size(); ++d) {
    const Direction dir = grid.at(d);
    const auto s = dsp::polar_to_spherical({dir.azimuth_deg, dir.elevation_deg});
    const auto p = dsp::spherical_to_polar(s);
    EXPECT_NEAR(p.lateral_deg, dir.azimuth_deg, 1e-9) << d;
    EXPECT_NEAR(p.polar_deg, dir.elevation_deg, 1e-9) << d;
  }
}

TEST(Coordinates, InterauralAxisIsDegenerate) {
  EXPECT_THROW(dsp::spherical_to_polar({90.0, 0.0}), NumericalError);
  EXPECT_THROW(dsp::polar_to_spherical({90.0, 10.0}), NumericalError);
  EXPECT_THROW(dsp::polar_to_spherical({0.0, 270.0}), ValidationError);
}

}  // namespace
}  // namespace hrtfkit
