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

#ifndef HRTFKIT_SPCA_HPP_
#define HRTFKIT_SPCA_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hrtfkit/dataset.hpp"
#include "hrtfkit/spectra.hpp"

namespace hrtfkit {

// Spatial principal component analysis of log-magnitude HRTFs.
//
// The input is a stacked matrix H with one row per (observation, frequency)
// pair and one column per direction. Fitting removes the per-direction mean
// H_av (the mean over frequencies and observations), eigendecomposes the
// D x D scatter matrix R = H_delta^T H_delta and keeps the Q leading
// eigenvectors as the rows of W (the spatial principal components). Columns
// of W are the per-direction vectors of SPC values (DV-SPCs). Weights are
// d = H_delta W^T and H is approximated by d W + H_av.

constexpr std::size_t kDefaultSpcCount = 200;

// Per-bin mean log magnitude over every observation and direction supplied.
Eigen::VectorXd compute_global_mean(const LogSpectraSet& spectra);
Eigen::VectorXd compute_global_mean(std::span<const Eigen::MatrixXd> spectra);

struct SpcaModel {
  std::optional<Hemisphere> hemisphere;  // empty for a full-sphere fit
  Eigen::MatrixXd basis;        // Q x D_h, orthonormal rows
  Eigen::VectorXd h_av;         // D_h, dB
  Eigen::VectorXd eigenvalues;  // D_h, nonincreasing, >= 0
  Eigen::VectorXd mu;           // N, global mean spectrum (dB); may be empty
  std::vector<std::size_t> direction_indices;  // grid index of each column
  std::size_t reference_column = 0;

  std::size_t q() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t direction_count() const { return static_cast<std::size_t>(basis.cols()); }
  Eigen::VectorXd dv_spc(std::size_t column) const { return basis.col(static_cast<Eigen::Index>(column)); }
  std::optional<std::size_t> column_of(std::size_t grid_index) const;
};

struct SpcaFit {
  SpcaModel model;
  Eigen::MatrixXd weights;  // rows x Q, same row order as the input
};

// Fits on rows of (mean-spectrum removed) log magnitudes. 1 <= q <= columns.
// Eigenvector signs are canonicalized so each SPC's largest-magnitude entry
// is positive.
SpcaFit fit_spca(const Eigen::MatrixXd& log_delta_rows, std::size_t q);

// 100 * sum of the first q eigenvalues / sum of all of them.
double cumulative_variance(const Eigen::VectorXd& eigenvalues, std::size_t q);
double cumulative_variance(const SpcaModel& model, std::size_t q);

// weights (F x Q) -> F x D_h log magnitudes: d W + H_av.
Eigen::MatrixXd reconstruct(const SpcaModel& model, const Eigen::MatrixXd& weights);
// rows (F x D_h) -> weights: (rows - H_av) W^T.
Eigen::MatrixXd project(const SpcaModel& model, const Eigen::MatrixXd& rows);

// Builds the stacked (observation * N) x |directions| matrix of log spectra
// minus `mu`. Row index = observation * N + bin.
Eigen::MatrixXd stack_spatial_rows(const LogSpectraSet& spectra, const Eigen::VectorXd& mu,
                                   std::span<const std::size_t> direction_indices);

// Grid index of the hemisphere reference direction: (0, 0) front,
// (0, 180) rear.
std::size_t reference_direction(const DirectionGrid& grid, Hemisphere h);

// Fits one hemisphere on every observation in `spectra`.
SpcaFit fit_hemisphere(const LogSpectraSet& spectra, const Eigen::VectorXd& mu,
                       const DirectionGrid& grid, Hemisphere h, std::size_t q);

// Cumulative variance at each q in `q_list`, fitting on the supplied
// observations over the given directions (the diagnostic per-ear tables).
std::vector<double> variance_table(const LogSpectraSet& spectra, const Eigen::VectorXd& mu,
                                   std::span<const std::size_t> direction_indices,
                                   std::span<const std::size_t> q_list);

// spca_model.json + W.f32 + H_av.f32 in `dir`.
void save_spca_model(const SpcaModel& model, const std::filesystem::path& dir);
SpcaModel load_spca_model(const std::filesystem::path& dir);

}  // namespace hrtfkit

#endif  // HRTFKIT_SPCA_HPP_
