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

#ifndef HRTFKIT_PREDICTORS_HPP_
#define HRTFKIT_PREDICTORS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hrtfkit/dataset.hpp"
#include "hrtfkit/mlp.hpp"
#include "hrtfkit/pca_baseline.hpp"
#include "hrtfkit/spca.hpp"

namespace hrtfkit {

// Number of unique DFT bins of a 200-point real spectrum (0 .. 100).
constexpr std::size_t kUniqueBins = 101;
constexpr int kBundleFormatVersion = 1;

struct NetConfig {
  std::vector<std::size_t> hidden;
  TrainConfig train;
};

struct PredictorConfig {
  std::size_t q = kDefaultSpcCount;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  // Summed-gradient steps diverge once a batch holds thousands of samples, so
  // the direction-driven families step over fixed-order batches.
  NetConfig weights{{32}, {1e-3, 1000, 200, GradientReduction::kSum, 0}};
  NetConfig dvspc{{64, 64, 64}, {1e-3, 10000, 200, GradientReduction::kSum, 16}};
  NetConfig hav{{64, 64, 64}, {1e-3, 1400, 200, GradientReduction::kSum, 16}};
  NetConfig itd{{64, 64, 64}, {1e-3, 11000, 200, GradientReduction::kSum, 256}};
  // Repeat every direction sample once per ear in the DV-SPC and H_av sets.
  bool duplicate_direction_samples = false;
};

// Front and rear SPCA models sharing one global mean spectrum.
struct SpcaPair {
  std::array<SpcaModel, 2> models;

  const SpcaModel& get(Hemisphere h) const { return models[static_cast<int>(h)]; }
  std::size_t q() const { return models[0].q(); }
};

// Fits both hemispheres on every subject and ear of the dataset.
SpcaPair fit_spca_pair(const HrtfDataset& ds, std::size_t q);

// 101 networks (one per unique bin) mapping the eight spectral parameters of
// one ear to the Q SPCA weights of one hemisphere.
struct WeightPredictor {
  Hemisphere hemisphere = Hemisphere::kFront;
  std::vector<MlpNetwork> nets;
};

// Networks mapping (reference DV-SPC, azimuth, elevation) to the DV-SPC.
struct DvspcPredictor {
  std::array<MlpNetwork, 2> nets;
  std::array<Eigen::VectorXd, 2> reference;
};

// Networks mapping (reference H_av, azimuth, elevation) to H_av.
struct HavPredictor {
  std::array<MlpNetwork, 2> nets;
  std::array<double, 2> reference{};
};

// Networks mapping (x1, x2, x3, azimuth, elevation) to the ITD in ms.
struct ItdPredictor {
  std::array<MlpNetwork, 2> nets;
};

// Summary of one training run; errors are on the held-out partitions.
struct TrainingReport {
  std::string family;
  double test_error = 0.0;
  std::size_t train_samples = 0;
  std::size_t valid_samples = 0;
  std::size_t test_samples = 0;
  std::vector<std::size_t> best_epochs;
};

struct SubjectSplit {
  std::vector<Observation> train;  // training observations (subject-major, L then R)
  std::vector<Observation> valid;  // the last floor(n / 6) manifest observations
  std::vector<Observation> test;
};

SubjectSplit make_subject_split(const HrtfDataset& ds);

// Direction split of one hemisphere, as grid indices.
struct DirectionSplit {
  std::vector<std::size_t> train, valid, test;
};

DirectionSplit make_direction_split(const SpcaModel& model);

// SPCA weights (N x Q) of one subject-ear for one hemisphere model, taken in
// the ear-aligned frame.
Eigen::MatrixXd spca_weights(const SubjectRecord& subject, Ear ear, const SpcaModel& model,
                             const DirectionGrid& grid);

// Measured or extracted ITDs (ms) of a subject at every grid direction.
std::vector<double> subject_itds(const SubjectRecord& subject, double sample_rate);

WeightPredictor train_weight_nets(const HrtfDataset& ds, const SpcaModel& model,
                                  const PredictorConfig& cfg, TrainingReport* report = nullptr);
DvspcPredictor train_dvspc_nets(const HrtfDataset& ds, const SpcaPair& spca,
                                const PredictorConfig& cfg, TrainingReport* report = nullptr);
HavPredictor train_hav_nets(const HrtfDataset& ds, const SpcaPair& spca,
                            const PredictorConfig& cfg, TrainingReport* report = nullptr);
ItdPredictor train_itd_nets(const HrtfDataset& ds, const SpcaPair& spca,
                            const PredictorConfig& cfg, TrainingReport* report = nullptr);

// 200 x Q weights: rows 0..100 from the nets, row k > 100 copied from 200 - k.
Eigen::MatrixXd predict_weights(const WeightPredictor& wp, const std::array<double, 8>& anthro);

// Throws ValidationError unless az in [-90, 90] and el in [-90, 270).
void check_direction_range(double azimuth_deg, double elevation_deg);

struct PredictorBundle {
  int format_version = kBundleFormatVersion;
  DirectionGrid grid;
  double sample_rate = 44100.0;
  std::size_t hrir_length = 200;
  std::uint64_t seed = 1;
  std::vector<std::string> training_subjects;
  std::vector<std::string> test_subjects;
  std::string generic_subject_id;

  std::optional<SpcaPair> spca;
  std::optional<std::array<WeightPredictor, 2>> weights;
  std::optional<DvspcPredictor> dvspc;
  std::optional<HavPredictor> hav;
  std::optional<ItdPredictor> itd;
  std::optional<PcaBaseline> baseline;
  // Measured HRIRs of the generic (KEMAR) subject.
  std::optional<HrirMatrix> generic_left;
  std::optional<HrirMatrix> generic_right;

  std::size_t q() const;
  const Eigen::VectorXd& mu() const;
  // Throws ValidationError when members disagree on Q or reference directions.
  void validate() const;
  // Throws ValidationError naming the missing member.
  void require_spca_models() const;
};

// A bundle carrying the dataset metadata and the generic subject's HRIRs.
PredictorBundle make_bundle(const HrtfDataset& ds, std::uint64_t seed);

struct DirectionParams {
  Eigen::VectorXd dv_spc;
  double h_av = 0.0;
  Hemisphere hemisphere = Hemisphere::kFront;
};

DirectionParams predict_direction_params(const PredictorBundle& bundle, double azimuth_deg,
                                         double elevation_deg);
double predict_itd(const PredictorBundle& bundle, const AnthroParams& anthro,
                   double azimuth_deg, double elevation_deg);

// Callable stand-ins for the trained networks, so that error statistics can
// be computed for any predictor, including exact oracles.
struct PredictorFunctions {
  std::function<Eigen::MatrixXd(Hemisphere, const std::array<double, 8>&)> weights;
  std::function<Eigen::VectorXd(Hemisphere, double, double)> dvspc;
  std::function<double(Hemisphere, double, double)> hav;
  std::function<double(const std::array<double, 3>&, double, double)> itd;
};

PredictorFunctions bundle_functions(const PredictorBundle& bundle);

// Mean squared weight error over Q, the 200 bins and the test observations,
// averaged over hemispheres.
double weight_error(const HrtfDataset& ds, const SpcaPair& spca, const PredictorFunctions& fns);
// Mean over test directions of the squared DV-SPC error norm.
double dvspc_error(const DirectionGrid& grid, const SpcaPair& spca,
                   const PredictorFunctions& fns);
// Mean squared H_av error over test directions.
double hav_error(const DirectionGrid& grid, const SpcaPair& spca, const PredictorFunctions& fns);
// Mean absolute ITD error (ms) over test subjects and test directions.
double itd_error(const HrtfDataset& ds, const SpcaPair& spca, const PredictorFunctions& fns);

void save_bundle(const PredictorBundle& bundle, const std::filesystem::path& dir);
PredictorBundle load_bundle(const std::filesystem::path& dir);

}  // namespace hrtfkit

#endif  // HRTFKIT_PREDICTORS_HPP_
