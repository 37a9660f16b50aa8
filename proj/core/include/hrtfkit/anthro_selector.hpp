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

#ifndef HRTFKIT_ANTHRO_SELECTOR_HPP_
#define HRTFKIT_ANTHRO_SELECTOR_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hrtfkit/dataset.hpp"
#include "hrtfkit/spectra.hpp"

namespace hrtfkit {

// Ordinary least squares of each weight column on [1, anthro].
struct RegressionResult {
  Eigen::MatrixXd coefficients;  // (K + 1) x Q, row 0 is the intercept
  Eigen::MatrixXd std_errors;    // (K + 1) x Q
  Eigen::MatrixXd t_stats;       // (K + 1) x Q
  Eigen::MatrixXd residuals;     // S x Q
  std::size_t dof = 0;           // S - K - 1
};

// weights: S x Q, anthro: S x K. Requires S >= K + 2 and a full-rank design.
RegressionResult regress_weights_on_anthro(const Eigen::MatrixXd& weights,
                                           const Eigen::MatrixXd& anthro);

// Absolute Pearson correlation between columns. The diagonal is not a
// correlation and is stored as 0.
Eigen::MatrixXd pearson_matrix(const Eigen::MatrixXd& anthro);

struct SelectedParameters {
  std::vector<std::string> spectral;
  std::vector<std::string> itd;
};

// x1, x3, x12, d1, d3, d4, d5, d6 for spectra and x1, x2, x3 for the ITD.
const SelectedParameters& selected_parameters();

// Anthropometry of complete subject-ear observations. Pinna columns take the
// matching ear's values; extra columns suffixed _L/_R are merged the same way.
struct AnthroTable {
  std::vector<std::string> names;
  std::vector<Observation> observations;
  Eigen::MatrixXd values;  // observations x names
};

AnthroTable build_anthro_table(const HrtfDataset& ds);

struct SelectionConfig {
  std::size_t pc_count = 12;
  double alpha = 0.05;          // two-sided significance level
  std::size_t direction_stride = 1;
  unsigned workers = 0;
};

struct SelectionReport {
  std::vector<std::string> names;
  std::vector<std::size_t> significance_counts;  // per parameter
  std::size_t regression_count = 0;              // (direction, order) pairs
  double t_threshold = 0.0;
  std::size_t observation_count = 0;
  Eigen::MatrixXd pearson;
  SelectedParameters selected;
};

SelectionReport build_selection_report(const HrtfDataset& ds, const SelectionConfig& cfg);

// report.json and pearson.csv.
void write_selection_report(const SelectionReport& report, const std::filesystem::path& dir);

}  // namespace hrtfkit

#endif  // HRTFKIT_ANTHRO_SELECTOR_HPP_
