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

#ifndef HRTFKIT_PCA_BASELINE_HPP_
#define HRTFKIT_PCA_BASELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "hrtfkit/dataset.hpp"
#include "hrtfkit/mlp.hpp"
#include "hrtfkit/spectra.hpp"

namespace hrtfkit {

// Frequency-domain PCA fitted independently at each measured direction and
// ear: a spectrum is approximated by sum_q d_q W_q(f) + H_av(f). Used as the
// comparison method; it cannot produce HRTFs away from the measured grid.

constexpr std::size_t kDefaultPcCount = 12;

struct DirectionPcaModel {
  std::size_t direction = 0;
  Ear ear = Ear::kLeft;
  Eigen::MatrixXd basis;        // P x N, orthonormal rows
  Eigen::VectorXd mean;         // N (H_av over subjects)
  Eigen::VectorXd eigenvalues;  // N, nonincreasing (zero beyond the data rank)

  std::size_t p() const { return static_cast<std::size_t>(basis.rows()); }
};

// PCA of the rows of `spectra` (subjects x N). Requires >= 2 rows.
DirectionPcaModel fit_pca(const Eigen::MatrixXd& spectra, std::size_t p);

// PCA across the observations of `spectra` for one direction and ear.
DirectionPcaModel fit_direction_pca(const LogSpectraSet& spectra, std::size_t direction, Ear ear,
                                    std::size_t p = kDefaultPcCount);

double cumulative_variance(const DirectionPcaModel& model, std::size_t p);

Eigen::VectorXd reconstruct(const DirectionPcaModel& model, const Eigen::VectorXd& weights);
Eigen::VectorXd project(const DirectionPcaModel& model, const Eigen::VectorXd& spectrum);

struct PcaBaselineConfig {
  std::size_t p = kDefaultPcCount;
  std::vector<std::size_t> hidden = {32};
  TrainConfig train = {1e-3, 1000, 200, GradientReduction::kSum, 0};
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

// All per-direction models and their weight networks. Slot index is
// ear * D + direction.
struct PcaBaseline {
  std::size_t p = kDefaultPcCount;
  DirectionGrid grid;
  std::vector<DirectionPcaModel> models;
  std::vector<MlpNetwork> nets;  // empty until trained

  std::size_t slot(std::size_t direction, Ear ear) const {
    return static_cast<std::size_t>(ear) * grid.size() + direction;
  }
  const DirectionPcaModel& model(std::size_t direction, Ear ear) const {
    return models.at(slot(direction, ear));
  }
};

// Fits every (direction, ear) model on the observations in `spectra`.
PcaBaseline fit_pca_baseline(const LogSpectraSet& spectra, const DirectionGrid& grid,
                             std::size_t p = kDefaultPcCount, unsigned workers = 0);

// Mean over directions of the variance captured by the first p PCs.
double mean_pca_variance(const PcaBaseline& baseline, Ear ear, std::size_t p);

// Trains one 8 -> hidden -> P network per (direction, ear) on the training
// subjects listed in the dataset manifest.
void train_pca_baseline_nets(PcaBaseline& baseline, const HrtfDataset& ds,
                             const LogSpectraSet& spectra, const PcaBaselineConfig& cfg);

// Log-magnitude spectrum (dB) predicted from anthropometry at a measured
// direction. Throws ValidationError for directions off the grid.
std::vector<double> predict_pca_hrtf(const PcaBaseline& baseline, const AnthroParams& anthro,
                                     Ear ear, double azimuth_deg, double elevation_deg);

void save_pca_baseline(const PcaBaseline& baseline, const std::filesystem::path& dir);
PcaBaseline load_pca_baseline(const std::filesystem::path& dir);

}  // namespace hrtfkit

#endif  // HRTFKIT_PCA_BASELINE_HPP_
