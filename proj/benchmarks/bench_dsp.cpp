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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "hrtfkit/dsp.hpp"

namespace {

// Decaying noise with a 30-sample onset, roughly the shape of a measured HRIR.
std::vector<double> hrir_like(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> h(200, 0.0);
  for (std::size_t n = 30; n < h.size(); ++n) h[n] = g(rng) * std::exp(-0.05 * static_cast<double>(n - 30));
  return h;
}

void BM_MagnitudeSpectrum(benchmark::State& state) {
  const auto h = hrir_like(1);
  for (auto _ : state) benchmark::DoNotOptimize(hrtfkit::dsp::magnitude_spectrum(h));
}
BENCHMARK(BM_MagnitudeSpectrum);

void BM_MinPhase(benchmark::State& state) {
  const auto mag = hrtfkit::dsp::magnitude_spectrum(hrir_like(2));
  for (auto _ : state) benchmark::DoNotOptimize(hrtfkit::dsp::min_phase_hrir(mag));
}
BENCHMARK(BM_MinPhase);

void BM_Upsample4(benchmark::State& state) {
  const auto h = hrir_like(3);
  for (auto _ : state) benchmark::DoNotOptimize(hrtfkit::dsp::upsample4(h));
}
BENCHMARK(BM_Upsample4);

void BM_ExtractItd(benchmark::State& state) {
  const auto left = hrir_like(4);
  const auto right = hrtfkit::dsp::delay(left, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hrtfkit::dsp::extract_itd(std::span<const double>(left),
                                                       std::span<const double>(right), 44100.0));
  }
}
BENCHMARK(BM_ExtractItd);

}  // namespace
