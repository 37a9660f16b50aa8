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

#ifndef HRTFKIT_MLP_HPP_
#define HRTFKIT_MLP_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hrtfkit {

// Samples are rows, features are columns (raw units).
struct SampleSet {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  bool empty() const { return inputs.rows() == 0; }
};

// Fully connected feedforward network with tanh on every layer, including the
// output. Inputs are standardized with training statistics; targets are
// standardized and then divided by 1.2 x their training absolute maximum so
// that they sit inside the tanh range.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  // Uniform +-sqrt(6 / (fan_in + fan_out)) initialization, zero biases.
  MlpNetwork(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t input_size() const { return layer_sizes_.front(); }
  std::size_t output_size() const { return layer_sizes_.back(); }
  std::size_t layer_count() const { return weights_.size(); }
  std::size_t parameter_count() const;
  std::uint64_t seed() const { return seed_; }
  std::size_t epochs_trained() const { return epochs_trained_; }
  void set_epochs_trained(std::size_t e) { epochs_trained_ = e; }

  // weights(l) is out x in for layer l; biases(l) has `out` entries.
  Eigen::MatrixXd& weights(std::size_t l) { return weights_.at(l); }
  const Eigen::MatrixXd& weights(std::size_t l) const { return weights_.at(l); }
  Eigen::VectorXd& biases(std::size_t l) { return biases_.at(l); }
  const Eigen::VectorXd& biases(std::size_t l) const { return biases_.at(l); }

  // Statistics from the training split only. Zero-variance features are
  // centered but not rescaled.
  void fit_statistics(const SampleSet& training);
  void set_statistics(Eigen::VectorXd input_mean, Eigen::VectorXd input_std,
                      Eigen::VectorXd target_mean, Eigen::VectorXd target_std,
                      Eigen::VectorXd target_absmax);
  bool has_statistics() const { return input_mean_.size() != 0; }
  const Eigen::VectorXd& input_mean() const { return input_mean_; }
  const Eigen::VectorXd& input_std() const { return input_std_; }
  const Eigen::VectorXd& target_mean() const { return target_mean_; }
  const Eigen::VectorXd& target_std() const { return target_std_; }
  const Eigen::VectorXd& target_absmax() const { return target_absmax_; }

  // Raw rows <-> network space (features x samples, column per sample).
  Eigen::MatrixXd normalize_inputs(const Eigen::MatrixXd& raw_rows) const;
  Eigen::MatrixXd scale_targets(const Eigen::MatrixXd& raw_rows) const;
  Eigen::MatrixXd unscale_outputs(const Eigen::MatrixXd& net_cols) const;

  // Network-space forward pass; every output lies in (-1, 1).
  Eigen::MatrixXd forward_normalized(const Eigen::MatrixXd& x_cols) const;

  // Raw input row(s) -> raw output row(s).
  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& input_rows) const;

 private:
  std::vector<std::size_t> layer_sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  Eigen::VectorXd input_mean_, input_std_;
  Eigen::VectorXd target_mean_, target_std_, target_absmax_;
  std::uint64_t seed_ = 0;
  std::size_t epochs_trained_ = 0;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  double loss_sum = 0.0;  // 0.5 * sum of squared errors
};

// Backpropagation for the loss 0.5 * sum over samples and outputs of
// (net(x) - t)^2, in network space (columns are samples).
Gradients backprop(const MlpNetwork& net, const Eigen::MatrixXd& x_cols,
                   const Eigen::MatrixXd& t_cols);

// Max relative discrepancy between backprop and central finite differences
// (step h) over all parameters, for a single network-space sample.
double gradient_check(const MlpNetwork& net, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& t, double h = 1e-5);

enum class GradientReduction {
  kSum,   // step along the summed per-sample gradients
  kMean,  // step along the average gradient
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t max_epochs = 1000;
  std::size_t patience = 200;  // epochs without validation improvement
  GradientReduction reduction = GradientReduction::kSum;
  // 0 = full batch. Otherwise samples are visited in fixed order in batches
  // of this size, one update per batch.
  std::size_t batch_size = 0;
};

struct TrainResult {
  MlpNetwork net;                   // best-validation snapshot
  std::vector<double> train_loss;   // MSE per epoch, network space
  std::vector<double> valid_loss;   // empty when no validation set
  std::size_t best_epoch = 0;       // 1-based epoch of the snapshot (0 = initial)
};

// Full-batch gradient descent on mean-squared error with validation-based
// early stopping. `net` must already carry training statistics. An empty
// validation set disables early stopping.
TrainResult train(MlpNetwork net, const SampleSet& training, const SampleSet& validation,
                  const TrainConfig& cfg);

// Mean squared error in network space.
double network_mse(const MlpNetwork& net, const SampleSet& samples);

std::string mlp_to_json(const MlpNetwork& net);
MlpNetwork mlp_from_json(const std::string& text);
void save_mlp(const MlpNetwork& net, const std::filesystem::path& path);
MlpNetwork load_mlp(const std::filesystem::path& path);

}  // namespace hrtfkit

#endif  // HRTFKIT_MLP_HPP_
