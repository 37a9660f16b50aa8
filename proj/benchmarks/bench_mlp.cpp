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

#include "hrtfkit/mlp.hpp"

namespace {

hrtfkit::SampleSet samples(Eigen::Index n, Eigen::Index in, Eigen::Index out) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  hrtfkit::SampleSet s;
  s.inputs.resize(n, in);
  s.targets.resize(n, out);
  for (Eigen::Index i = 0; i < s.inputs.size(); ++i) s.inputs.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < s.targets.size(); ++i) s.targets.data()[i] = g(rng);
  return s;
}

// Direction-net shape: 2 inputs, three hidden layers of 64, Q = 200 outputs.
void BM_BackpropDvspc(benchmark::State& state) {
  const auto batch = state.range(0);
  hrtfkit::MlpNetwork net({2, 64, 64, 64, 200}, 1);
  const auto s = samples(batch, 2, 200);
  net.fit_statistics(s);
  const Eigen::MatrixXd x = net.normalize_inputs(s.inputs);
  const Eigen::MatrixXd t = net.scale_targets(s.targets);
  for (auto _ : state) benchmark::DoNotOptimize(hrtfkit::backprop(net, x, t));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_BackpropDvspc)->Arg(16)->Arg(256)->Unit(benchmark::kMicrosecond);

// Weight-net epoch: 50 training observations, 8 -> 32 -> 200.
void BM_TrainWeightNetEpochs(benchmark::State& state) {
  hrtfkit::MlpNetwork net({8, 32, 200}, 1);
  const auto train = samples(50, 8, 200);
  net.fit_statistics(train);
  hrtfkit::TrainConfig cfg;
  cfg.max_epochs = 10;
  for (auto _ : state) benchmark::DoNotOptimize(hrtfkit::train(net, train, {}, cfg));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_TrainWeightNetEpochs)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  hrtfkit::MlpNetwork net({3, 64, 64, 64, 1}, 1);
  const auto s = samples(10, 3, 1);
  net.fit_statistics(s);
  const Eigen::VectorXd x = s.inputs.row(0).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_Forward);

}  // namespace
