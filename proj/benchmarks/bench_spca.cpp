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

#include <benchmark/benchmark.h>

#include "hrtfkit/pca_baseline.hpp"
#include "hrtfkit/spca.hpp"

namespace {

Eigen::MatrixXd random_rows(Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 5.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

// Rows are (observation, bin) pairs, columns directions; 625 is one
// hemisphere of the CIPIC grid.
void BM_FitSpca(benchmark::State& state) {
  const auto d = state.range(0);
  const Eigen::MatrixXd x = random_rows(2000, d);
  for (auto _ : state) benchmark::DoNotOptimize(hrtfkit::fit_spca(x, static_cast<std::size_t>(d / 3)));
}
BENCHMARK(BM_FitSpca)->Arg(125)->Arg(250)->Arg(625)->Unit(benchmark::kMillisecond);

void BM_SpcaReconstruct(benchmark::State& state) {
  const Eigen::MatrixXd x = random_rows(400, 625);
  const hrtfkit::SpcaFit fit = hrtfkit::fit_spca(x, 200);
  for (auto _ : state) benchmark::DoNotOptimize(hrtfkit::reconstruct(fit.model, fit.weights));
}
BENCHMARK(BM_SpcaReconstruct)->Unit(benchmark::kMicrosecond);

// One direction of the frequency-domain baseline: 45 subjects x 200 bins.
void BM_FitDirectionPca(benchmark::State& state) {
  const Eigen::MatrixXd x = random_rows(45, 200);
  for (auto _ : state) benchmark::DoNotOptimize(hrtfkit::fit_pca(x, hrtfkit::kDefaultPcCount));
}
BENCHMARK(BM_FitDirectionPca)->Unit(benchmark::kMicrosecond);

}  // namespace
