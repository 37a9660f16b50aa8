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

#include "hrtfkit/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/error.hpp"

namespace hrtfkit {
using json = nlohmann::json;

namespace {

constexpr double kTargetHeadroom = 1.2;

Eigen::VectorXd safe_scale(Eigen::VectorXd v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) > 0.0) || !std::isfinite(v(i))) v(i) = 1.0;
  }
  return v;
}

// tanh through the vectorized exponential; Eigen evaluates double tanh one
// scalar at a time. exp(-2|z|) never overflows.
Eigen::MatrixXd tanh_of(const Eigen::MatrixXd& z) {
  const Eigen::ArrayXXd e = (-2.0 * z.array().abs()).exp();
  return ((1.0 - e) / (1.0 + e) * z.array().sign()).matrix();
}

}  // namespace

MlpNetwork::MlpNetwork(std::vector<std::size_t> layer_sizes, std::uint64_t seed)
    : layer_sizes_(std::move(layer_sizes)), seed_(seed) {
  if (layer_sizes_.size() < 2) throw ValidationError("MlpNetwork: need input and output sizes");
  for (auto s : layer_sizes_) {
    if (s == 0) throw ValidationError("MlpNetwork: layer sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(layer_sizes_[l]);
    const auto fan_out = static_cast<Eigen::Index>(layer_sizes_[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = dist(rng);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

void MlpNetwork::fit_statistics(const SampleSet& training) {
  if (training.empty()) throw ValidationError("fit_statistics: empty training set");
  if (static_cast<std::size_t>(training.inputs.cols()) != input_size() ||
      static_cast<std::size_t>(training.targets.cols()) != output_size() ||
      training.targets.rows() != training.inputs.rows()) {
    throw ValidationError("fit_statistics: sample dimensions do not match the network");
  }
  const double n = static_cast<double>(training.inputs.rows());
  input_mean_ = training.inputs.colwise().mean().transpose();
  input_std_ = safe_scale(
      ((training.inputs.rowwise() - input_mean_.transpose()).array().square().colwise().sum() / n)
          .sqrt()
          .transpose());
  target_mean_ = training.targets.colwise().mean().transpose();
  target_std_ = safe_scale(
      ((training.targets.rowwise() - target_mean_.transpose()).array().square().colwise().sum() / n)
          .sqrt()
          .transpose());
  const Eigen::MatrixXd standardized =
      ((training.targets.rowwise() - target_mean_.transpose()).array().rowwise() /
       target_std_.transpose().array())
          .matrix();
  target_absmax_ = safe_scale(standardized.cwiseAbs().colwise().maxCoeff().transpose());
}

void MlpNetwork::set_statistics(Eigen::VectorXd input_mean, Eigen::VectorXd input_std,
                                Eigen::VectorXd target_mean, Eigen::VectorXd target_std,
                                Eigen::VectorXd target_absmax) {
  if (static_cast<std::size_t>(input_mean.size()) != input_size() ||
      input_std.size() != input_mean.size() ||
      static_cast<std::size_t>(target_mean.size()) != output_size() ||
      target_std.size() != target_mean.size() || target_absmax.size() != target_mean.size()) {
    throw ValidationError("set_statistics: dimension mismatch");
  }
  input_mean_ = std::move(input_mean);
  input_std_ = safe_scale(std::move(input_std));
  target_mean_ = std::move(target_mean);
  target_std_ = safe_scale(std::move(target_std));
  target_absmax_ = safe_scale(std::move(target_absmax));
}

Eigen::MatrixXd MlpNetwork::normalize_inputs(const Eigen::MatrixXd& raw_rows) const {
  if (!has_statistics()) throw ValidationError("network has no input statistics");
  if (static_cast<std::size_t>(raw_rows.cols()) != input_size()) {
    throw ValidationError("input length " + std::to_string(raw_rows.cols()) + " != " +
                          std::to_string(input_size()));
  }
  return ((raw_rows.rowwise() - input_mean_.transpose()).array().rowwise() /
          input_std_.transpose().array())
      .matrix()
      .transpose();
}

Eigen::MatrixXd MlpNetwork::scale_targets(const Eigen::MatrixXd& raw_rows) const {
  if (!has_statistics()) throw ValidationError("network has no target statistics");
  if (static_cast<std::size_t>(raw_rows.cols()) != output_size()) {
    throw ValidationError("target length " + std::to_string(raw_rows.cols()) + " != " +
                          std::to_string(output_size()));
  }
  const Eigen::ArrayXd scale = target_std_.array() * target_absmax_.array() * kTargetHeadroom;
  return ((raw_rows.rowwise() - target_mean_.transpose()).array().rowwise() /
          scale.transpose())
      .matrix()
      .transpose();
}

Eigen::MatrixXd MlpNetwork::unscale_outputs(const Eigen::MatrixXd& net_cols) const {
  const Eigen::ArrayXd scale = target_std_.array() * target_absmax_.array() * kTargetHeadroom;
  Eigen::MatrixXd rows = (net_cols.array().colwise() * scale).matrix().transpose();
  rows.rowwise() += target_mean_.transpose();
  return rows;
}

Eigen::MatrixXd MlpNetwork::forward_normalized(const Eigen::MatrixXd& x_cols) const {
  if (static_cast<std::size_t>(x_cols.rows()) != input_size()) {
    throw ValidationError("forward: input length mismatch");
  }
  Eigen::MatrixXd a = x_cols;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    a = tanh_of(z);
  }
  return a;
}

Eigen::VectorXd MlpNetwork::forward(const Eigen::VectorXd& input) const {
  return forward_batch(input.transpose()).row(0).transpose();
}

Eigen::MatrixXd MlpNetwork::forward_batch(const Eigen::MatrixXd& input_rows) const {
  return unscale_outputs(forward_normalized(normalize_inputs(input_rows)));
}

Gradients backprop(const MlpNetwork& net, const Eigen::MatrixXd& x_cols,
                   const Eigen::MatrixXd& t_cols) {
  const std::size_t layers = net.layer_count();
  if (static_cast<std::size_t>(x_cols.rows()) != net.input_size() ||
      static_cast<std::size_t>(t_cols.rows()) != net.output_size() ||
      x_cols.cols() != t_cols.cols()) {
    throw ValidationError("backprop: dimension mismatch");
  }
  std::vector<Eigen::MatrixXd> activations(layers + 1);
  activations[0] = x_cols;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = net.weights(l) * activations[l];
    z.colwise() += net.biases(l);
    activations[l + 1] = tanh_of(z);
  }
  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Eigen::MatrixXd error = activations[layers] - t_cols;
  g.loss_sum = 0.5 * error.squaredNorm();
  Eigen::MatrixXd delta =
      (error.array() * (1.0 - activations[layers].array().square())).matrix();
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l].noalias() = delta * activations[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = net.weights(l).transpose() * delta;
      delta = (back.array() * (1.0 - activations[l].array().square())).matrix();
    }
  }
  return g;
}

double gradient_check(const MlpNetwork& net, const Eigen::VectorXd& x, const Eigen::VectorXd& t,
                      double h) {
  const Eigen::MatrixXd xc = x;
  const Eigen::MatrixXd tc = t;
  const Gradients analytic = backprop(net, xc, tc);
  MlpNetwork probe = net;
  auto loss = [&]() { return 0.5 * (probe.forward_normalized(xc) - tc).squaredNorm(); };
  auto relative = [](double a, double n) {
    const double denom = std::max({std::abs(a), std::abs(n), 1e-6});
    return std::abs(a - n) / denom;
  };
  double worst = 0.0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Eigen::MatrixXd& w = probe.weights(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      w.data()[i] = saved + h;
      const double up = loss();
      w.data()[i] = saved - h;
      const double down = loss();
      w.data()[i] = saved;
      worst = std::max(worst, relative(analytic.weights[l].data()[i], (up - down) / (2.0 * h)));
    }
    Eigen::VectorXd& b = probe.biases(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double saved = b(i);
      b(i) = saved + h;
      const double up = loss();
      b(i) = saved - h;
      const double down = loss();
      b(i) = saved;
      worst = std::max(worst, relative(analytic.biases[l](i), (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

double network_mse(const MlpNetwork& net, const SampleSet& samples) {
  if (samples.empty()) return 0.0;
  const Eigen::MatrixXd y = net.forward_normalized(net.normalize_inputs(samples.inputs));
  const Eigen::MatrixXd t = net.scale_targets(samples.targets);
  return (y - t).squaredNorm() / static_cast<double>(t.size());
}

TrainResult train(MlpNetwork net, const SampleSet& training, const SampleSet& validation,
                  const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("train: learning_rate must be > 0");
  if (cfg.patience < 1) throw ValidationError("train: patience must be >= 1");
  if (!net.has_statistics()) throw ValidationError("train: fit_statistics first");
  if (training.empty()) throw ValidationError("train: empty training set");

  const Eigen::MatrixXd x = net.normalize_inputs(training.inputs);
  const Eigen::MatrixXd t = net.scale_targets(training.targets);
  const bool has_valid = !validation.empty();
  Eigen::MatrixXd vx, vt;
  if (has_valid) {
    vx = net.normalize_inputs(validation.inputs);
    vt = net.scale_targets(validation.targets);
  }
  const auto samples = static_cast<Eigen::Index>(x.cols());
  const Eigen::Index batch =
      cfg.batch_size == 0 ? samples
                          : std::min<Eigen::Index>(samples, static_cast<Eigen::Index>(cfg.batch_size));
  const double denom_t = static_cast<double>(t.size());

  TrainResult result;
  auto valid_mse = [&](const MlpNetwork& n) {
    return (n.forward_normalized(vx) - vt).squaredNorm() / static_cast<double>(vt.size());
  };
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_state = 0;
  MlpNetwork best_net = net;

  auto consider = [&](std::size_t state, double train_mse) {
    if (!std::isfinite(train_mse)) {
      throw NumericalError("training diverged (non-finite loss) at epoch " +
                           std::to_string(state));
    }
    result.train_loss.push_back(train_mse);
    const double score = has_valid ? valid_mse(net) : train_mse;
    if (has_valid) result.valid_loss.push_back(score);
    if (score < best || !has_valid) {
      if (score < best) best = score;
      best_state = state;
      best_net = net;
    }
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (batch != samples) {
      consider(epoch - 1, (net.forward_normalized(x) - t).squaredNorm() / denom_t);
    }
    for (Eigen::Index start = 0; start < samples; start += batch) {
      const Eigen::Index len = std::min(batch, samples - start);
      const Gradients g = batch == samples
                              ? backprop(net, x, t)
                              : backprop(net, x.middleCols(start, len), t.middleCols(start, len));
      if (batch == samples) consider(epoch - 1, 2.0 * g.loss_sum / denom_t);
      const double step = cfg.reduction == GradientReduction::kSum
                              ? cfg.learning_rate
                              : cfg.learning_rate / static_cast<double>(len);
      for (std::size_t l = 0; l < net.layer_count(); ++l) {
        net.weights(l) -= step * g.weights[l];
        net.biases(l) -= step * g.biases[l];
      }
    }
    if (has_valid && epoch - 1 - best_state >= cfg.patience) break;
  }
  // Loss of the final state.
  consider(result.train_loss.size(), (net.forward_normalized(x) - t).squaredNorm() / denom_t);
  best_net.set_epochs_trained(best_state);
  result.net = std::move(best_net);
  result.best_epoch = best_state;
  return result;
}

std::string mlp_to_json(const MlpNetwork& net) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  json j;
  j["format_version"] = 1;
  j["activation"] = "tanh";
  j["layer_sizes"] = net.layer_sizes();
  j["seed"] = net.seed();
  j["epochs_trained"] = net.epochs_trained();
  j["input_stats"] = {{"mean", vec(net.input_mean())}, {"std", vec(net.input_std())}};
  j["target_stats"] = {{"mean", vec(net.target_mean())},
                       {"std", vec(net.target_std())},
                       {"absmax", vec(net.target_absmax())}};
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Eigen::MatrixXd& w = net.weights(l);
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c) row[static_cast<std::size_t>(c)] = w(r, c);
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
    biases.push_back(vec(net.biases(l)));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump();
}

MlpNetwork mlp_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != 1) throw ValidationError("net.json: unknown format_version");
    MlpNetwork net(j.at("layer_sizes").get<std::vector<std::size_t>>(),
                   j.at("seed").get<std::uint64_t>());
    net.set_epochs_trained(j.at("epochs_trained").get<std::size_t>());
    auto vec = [](const json& a) {
      const auto v = a.get<std::vector<double>>();
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    const auto& in = j.at("input_stats");
    const auto& out = j.at("target_stats");
    if (!in.at("mean").empty()) {
      net.set_statistics(vec(in.at("mean")), vec(in.at("std")), vec(out.at("mean")),
                         vec(out.at("std")), vec(out.at("absmax")));
    }
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != net.layer_count() || biases.size() != net.layer_count()) {
      throw ValidationError("net.json: layer count mismatch");
    }
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      Eigen::MatrixXd& w = net.weights(l);
      const auto& rows = weights[l];
      if (rows.size() != static_cast<std::size_t>(w.rows())) throw ValidationError("net.json: weight shape mismatch");
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (row.size() != static_cast<std::size_t>(w.cols())) throw ValidationError("net.json: weight shape mismatch");
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = row[static_cast<std::size_t>(c)];
      }
      const Eigen::VectorXd b = vec(biases[l]);
      if (b.size() != net.biases(l).size()) throw ValidationError("net.json: bias shape mismatch");
      net.biases(l) = b;
    }
    return net;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("net.json: ") + e.what());
  }
}

void save_mlp(const MlpNetwork& net, const std::filesystem::path& path) {
  write_text(path, mlp_to_json(net));
}

MlpNetwork load_mlp(const std::filesystem::path& path) {
  try {
    return mlp_from_json(read_text(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace hrtfkit
