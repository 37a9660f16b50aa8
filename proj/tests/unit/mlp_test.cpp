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
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "hrtfkit/error.hpp"
#include "hrtfkit/mlp.hpp"

namespace hrtfkit {
namespace {

SampleSet random_samples(std::mt19937_64& rng, Eigen::Index n, Eigen::Index in, Eigen::Index out) {
  std::normal_distribution<double> g(0.0, 1.0);
  SampleSet s;
  s.inputs.resize(n, in);
  s.targets.resize(n, out);
  for (Eigen::Index i = 0; i < s.inputs.size(); ++i) s.inputs.data()[i] = 3.0 * g(rng) + 1.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < out; ++c) {
      s.targets(r, c) = std::sin(s.inputs(r, 0) * 0.3 + static_cast<double>(c)) + 0.1 * g(rng);
    }
  }
  return s;
}

MlpNetwork fitted(std::vector<std::size_t> sizes, const SampleSet& s, std::uint64_t seed = 7) {
  MlpNetwork net(std::move(sizes), seed);
  net.fit_statistics(s);
  return net;
}

TEST(Mlp, InitializationShapesAndRange) {
  MlpNetwork net({8, 32, 12}, 3);
  EXPECT_EQ(net.layer_count(), 2u);
  EXPECT_EQ(net.parameter_count(), 8u * 32u + 32u + 32u * 12u + 12u);
  const double limit = std::sqrt(6.0 / 40.0);
  EXPECT_LE(net.weights(0).cwiseAbs().maxCoeff(), limit);
  EXPECT_EQ(net.biases(1), Eigen::VectorXd::Zero(12));
  MlpNetwork same({8, 32, 12}, 3);
  EXPECT_EQ(net.weights(0), same.weights(0));
  EXPECT_THROW(MlpNetwork({4}, 1), ValidationError);
  EXPECT_THROW(MlpNetwork({4, 0, 1}, 1), ValidationError);
}

TEST(Mlp, GradientCheckOnRandomNetworks) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> width(1, 6);
  std::uniform_int_distribution<int> depth(0, 3);
  std::normal_distribution<double> g(0.0, 0.8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> sizes{static_cast<std::size_t>(width(rng))};
    const int hidden = depth(rng);
    for (int h = 0; h < hidden; ++h) sizes.push_back(static_cast<std::size_t>(width(rng)));
    sizes.push_back(static_cast<std::size_t>(width(rng)));
    MlpNetwork net(sizes, static_cast<std::uint64_t>(trial));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      for (Eigen::Index i = 0; i < net.biases(l).size(); ++i) net.biases(l)(i) = g(rng);
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(sizes.front()));
    Eigen::VectorXd t(static_cast<Eigen::Index>(sizes.back()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = 0.9 * std::tanh(g(rng));
    EXPECT_LT(gradient_check(net, x, t), 1e-4) << "trial " << trial;
  }
}

TEST(Mlp, BatchGradientIsTheSumOfSampleGradients) {
  std::mt19937_64 rng(2);
  MlpNetwork net({3, 5, 2}, 11);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
  Eigen::MatrixXd t = 0.5 * Eigen::MatrixXd::Random(2, 4);
  const Gradients all = backprop(net, x, t);
  Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(5, 3);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < 4; ++c) {
    const Gradients one = backprop(net, x.col(c), t.col(c));
    w0 += one.weights[0];
    loss += one.loss_sum;
  }
  EXPECT_LT((all.weights[0] - w0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(all.loss_sum, loss, 1e-12);
  EXPECT_THROW(backprop(net, Eigen::MatrixXd::Zero(2, 4), t), ValidationError);
}

TEST(Mlp, ZeroParametersGiveZeroGradientsAtZeroTarget) {
  MlpNetwork net({2, 3, 1}, 5);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    net.weights(l).setZero();
    net.biases(l).setZero();
  }
  const Gradients g = backprop(net, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 1));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    EXPECT_EQ(g.weights[l].cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.biases[l].cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(g.loss_sum, 0.0);
}

TEST(Mlp, StatisticsComeFromTrainingSamples) {
  SampleSet s;
  s.inputs.resize(4, 2);
  s.inputs << 1, 5, 3, 5, 5, 5, 7, 5;
  s.targets.resize(4, 1);
  s.targets << -2, 0, 2, 4;
  MlpNetwork net({2, 3, 1}, 1);
  net.fit_statistics(s);
  EXPECT_DOUBLE_EQ(net.input_mean()(0), 4.0);
  EXPECT_DOUBLE_EQ(net.input_std()(0), std::sqrt(5.0));
  // Constant feature: centered, not rescaled.
  EXPECT_DOUBLE_EQ(net.input_std()(1), 1.0);
  EXPECT_DOUBLE_EQ(net.target_mean()(0), 1.0);
  EXPECT_DOUBLE_EQ(net.target_std()(0), std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(net.target_absmax()(0), 3.0 / std::sqrt(5.0));
  const Eigen::MatrixXd scaled = net.scale_targets(s.targets);
  EXPECT_NEAR(scaled.cwiseAbs().maxCoeff(), 1.0 / 1.2, 1e-12);
  EXPECT_LT((net.unscale_outputs(scaled) - s.targets).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mlp, ForwardStaysInsideTanhRange) {
  std::mt19937_64 rng(3);
  const SampleSet s = random_samples(rng, 50, 4, 3);
  MlpNetwork net = fitted({4, 8, 8, 3}, s);
  net.weights(0) *= 50.0;
  const Eigen::MatrixXd y = net.forward_normalized(net.normalize_inputs(s.inputs) * 100.0);
  EXPECT_LE(y.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST(Mlp, ZeroNetworkReturnsTargetMean) {
  std::mt19937_64 rng(4);
  const SampleSet s = random_samples(rng, 30, 3, 2);
  MlpNetwork net = fitted({3, 4, 2}, s);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    net.weights(l).setZero();
    net.biases(l).setZero();
  }
  const Eigen::VectorXd y = net.forward(Eigen::Vector3d(9.0, -1.0, 2.0));
  EXPECT_NEAR(y(0), net.target_mean()(0), 1e-12);
  EXPECT_NEAR(y(1), net.target_mean()(1), 1e-12);
}

TEST(Mlp, SingleUnitHandComputed) {
  MlpNetwork net({1, 1}, 1);
  net.weights(0)(0, 0) = 0.7;
  net.biases(0)(0) = -0.2;
  net.set_statistics(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 4.0),
                     Eigen::VectorXd::Constant(1, 10.0), Eigen::VectorXd::Constant(1, 3.0),
                     Eigen::VectorXd::Constant(1, 0.5));
  // x = 6 -> (6 - 2) / 4 = 1 -> tanh(0.5) -> 10 + 3 * 0.5 * 1.2 * tanh(0.5)
  const double expected = 10.0 + 1.8 * std::tanh(0.5);
  EXPECT_NEAR(net.forward(Eigen::VectorXd::Constant(1, 6.0))(0), expected, 1e-12);
}

TEST(Train, ConstantTargetIsLearnedThroughBiases) {
  std::mt19937_64 rng(5);
  SampleSet s = random_samples(rng, 60, 8, 12);
  s.targets.setConstant(4.0);
  s.targets.col(1).setConstant(-1.5);
  MlpNetwork net = fitted({8, 32, 12}, s);
  const TrainResult r = train(net, s, {}, {1e-2, 1000, 200, GradientReduction::kSum, 0});
  EXPECT_LT(network_mse(r.net, s), 1e-4);
  const Eigen::VectorXd y = r.net.forward(s.inputs.row(0).transpose());
  EXPECT_NEAR(y(0), 4.0, 1e-2);
  EXPECT_NEAR(y(1), -1.5, 1e-2);
}

TEST(Train, XorIsSeparable) {
  SampleSet s;
  s.inputs.resize(4, 2);
  s.inputs << 0, 0, 0, 1, 1, 0, 1, 1;
  s.targets.resize(4, 1);
  s.targets << 0, 1, 1, 0;
  MlpNetwork net = fitted({2, 4, 1}, s, 2);
  const TrainResult r = train(net, s, {}, {1e-2, 20000, 200, GradientReduction::kSum, 0});
  EXPECT_LT(network_mse(r.net, s), 0.01);
  const Eigen::MatrixXd y = r.net.forward_batch(s.inputs);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(y(i, 0), s.targets(i, 0), 0.25);
}

TEST(Train, LossHistoryDecreasesOverFiftyEpochWindows) {
  std::mt19937_64 rng(6);
  const SampleSet s = random_samples(rng, 60, 8, 4);
  MlpNetwork net = fitted({8, 16, 4}, s);
  const TrainResult r = train(net, s, {}, {1e-3, 600, 200, GradientReduction::kSum, 0});
  ASSERT_EQ(r.train_loss.size(), 601u);
  for (std::size_t i = 0; i + 50 < r.train_loss.size(); ++i) {
    EXPECT_LE(r.train_loss[i + 50], r.train_loss[i]) << "epoch " << i;
  }
  EXPECT_LT(r.train_loss.back(), r.train_loss.front());
}

TEST(Train, EarlyStopReturnsBestValidationSnapshot) {
  std::mt19937_64 rng(7);
  // Tiny training set against an unrelated validation set: overfits quickly.
  const SampleSet s = random_samples(rng, 6, 5, 2);
  SampleSet v = random_samples(rng, 40, 5, 2);
  v.targets = -v.targets;
  MlpNetwork net = fitted({5, 24, 2}, s);
  const TrainConfig cfg{5e-2, 5000, 25, GradientReduction::kSum, 0};
  const TrainResult r = train(net, s, v, cfg);
  ASSERT_FALSE(r.valid_loss.empty());
  const auto best = std::min_element(r.valid_loss.begin(), r.valid_loss.end());
  EXPECT_EQ(static_cast<std::size_t>(best - r.valid_loss.begin()), r.best_epoch);
  EXPECT_EQ(r.net.epochs_trained(), r.best_epoch);
  EXPECT_NEAR(network_mse(r.net, v), *best, 1e-12);
  EXPECT_LT(r.valid_loss.size(), 5001u);
  // Epochs 0..best+patience are scored, then the final state.
  EXPECT_EQ(r.valid_loss.size(), r.best_epoch + cfg.patience + 2);
}

TEST(Train, IsDeterministic) {
  std::mt19937_64 rng(8);
  const SampleSet s = random_samples(rng, 64, 4, 2);
  const SampleSet v = random_samples(rng, 16, 4, 2);
  const TrainConfig cfg{1e-3, 120, 50, GradientReduction::kSum, 16};
  const TrainResult a = train(fitted({4, 8, 2}, s), s, v, cfg);
  const TrainResult b = train(fitted({4, 8, 2}, s), s, v, cfg);
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.net.weights(0), b.net.weights(0));
  EXPECT_EQ(a.best_epoch, b.best_epoch);
}

TEST(Train, MeanReductionScalesTheStep) {
  std::mt19937_64 rng(9);
  const SampleSet s = random_samples(rng, 10, 3, 1);
  const MlpNetwork net = fitted({3, 4, 1}, s);
  const TrainResult sum = train(net, s, {}, {1e-3, 1, 1, GradientReduction::kSum, 0});
  const TrainResult mean = train(net, s, {}, {1e-2, 1, 1, GradientReduction::kMean, 0});
  // With ten samples, lr/10 on the mean equals lr on the sum.
  MlpNetwork stepped_sum = net, stepped_mean = net;
  const Eigen::MatrixXd x = net.normalize_inputs(s.inputs);
  const Eigen::MatrixXd t = net.scale_targets(s.targets);
  const Gradients g = backprop(net, x, t);
  stepped_sum.weights(0) -= 1e-3 * g.weights[0];
  stepped_mean.weights(0) -= 1e-2 / 10.0 * g.weights[0];
  EXPECT_LT((stepped_sum.weights(0) - stepped_mean.weights(0)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(sum.train_loss.back(), mean.train_loss.back(), 1e-12);
}

TEST(Train, RejectsBadConfiguration) {
  std::mt19937_64 rng(10);
  const SampleSet s = random_samples(rng, 10, 3, 1);
  MlpNetwork net({3, 4, 1}, 1);
  EXPECT_THROW(train(net, s, {}, {}), ValidationError);
  net.fit_statistics(s);
  EXPECT_THROW(train(net, s, {}, {0.0, 10, 5, GradientReduction::kSum, 0}), ValidationError);
  EXPECT_THROW(train(net, s, {}, {1e-3, 10, 0, GradientReduction::kSum, 0}), ValidationError);
  EXPECT_THROW(train(net, SampleSet{}, {}, {}), ValidationError);
}

TEST(Train, DivergenceIsReported) {
  std::mt19937_64 rng(11);
  SampleSet s = random_samples(rng, 10, 3, 1);
  MlpNetwork net = fitted({3, 4, 1}, s);
  s.inputs(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    train(net, s, {}, {1e-3, 10, 5, GradientReduction::kSum, 0});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos) << e.what();
  }
}

TEST(Persistence, JsonRoundTripIsExact) {
  std::mt19937_64 rng(12);
  const SampleSet s = random_samples(rng, 20, 8, 12);
  MlpNetwork net = fitted({8, 32, 12}, s, 99);
  net.set_epochs_trained(321);
  const MlpNetwork back = mlp_from_json(mlp_to_json(net));
  EXPECT_EQ(back.layer_sizes(), net.layer_sizes());
  EXPECT_EQ(back.seed(), 99u);
  EXPECT_EQ(back.epochs_trained(), 321u);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    EXPECT_EQ(back.weights(l), net.weights(l));
    EXPECT_EQ(back.biases(l), net.biases(l));
  }
  EXPECT_EQ(back.forward_batch(s.inputs), net.forward_batch(s.inputs));

  const auto path = std::filesystem::temp_directory_path() /
                    ("hrtfkit_mlp_" + std::to_string(std::random_device{}()) + ".json");
  save_mlp(net, path);
  EXPECT_EQ(load_mlp(path).forward_batch(s.inputs), net.forward_batch(s.inputs));
  std::filesystem::remove(path);
}

TEST(Persistence, MalformedJsonIsRejected) {
  EXPECT_THROW(mlp_from_json("{"), ValidationError);
  EXPECT_THROW(mlp_from_json(R"({"format_version": 2})"), ValidationError);
  MlpNetwork net({2, 2}, 1);
  std::string text = mlp_to_json(net);
  text.replace(text.find("\"layer_sizes\":[2,2]"), 19, "\"layer_sizes\":[2,3]");
  EXPECT_THROW(mlp_from_json(text), ValidationError);
}

}  // namespace
}  // namespace hrtfkit
