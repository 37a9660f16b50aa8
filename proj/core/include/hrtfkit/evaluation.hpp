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

#ifndef HRTFKIT_EVALUATION_HPP_
#define HRTFKIT_EVALUATION_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hrtfkit/dataset.hpp"
#include "hrtfkit/predictors.hpp"
#include "hrtfkit/synthesis.hpp"

namespace hrtfkit {

// Mean absolute dB difference over directions, per bin. Panels are D x N.
Eigen::VectorXd spectral_distortion(const Eigen::MatrixXd& measured, const Eigen::MatrixXd& test);

// DV-SPC and H_av predicted at every grid direction of the bundle.
std::vector<DirectionParams> grid_direction_params(const PredictorBundle& bundle);

// D x N log magnitudes synthesized for one listener and ear over the bundle
// grid. `params` may hold precomputed grid_direction_params for SPCA.
Eigen::MatrixXd predicted_log_panel(const PredictorBundle& bundle, const AnthroParams& anthro,
                                    Ear ear, SynthMethod method,
                                    const std::vector<DirectionParams>* params = nullptr);

struct SdReport {
  std::vector<std::string> methods;
  std::vector<std::string> subjects;
  std::vector<double> bin_hz;                 // the unique bins 0 .. N/2
  std::vector<Eigen::MatrixXd> per_subject;   // per method: subjects x bins, ears averaged
  Eigen::MatrixXd mean_db;                    // methods x bins, mean over subjects
  Eigen::MatrixXd std_db;                     // methods x bins, population std over subjects
  std::vector<double> overall_db;             // per method, uniform mean over bins

  double overall(SynthMethod m) const;
};

SdReport build_sd_report(const PredictorBundle& bundle, const HrtfDataset& ds,
                         const std::vector<SynthMethod>& methods,
                         const std::vector<std::string>& subjects, unsigned workers = 0);

// sd_report.csv (bin_hz, method, mean_db, std_db) and sd_subjects.csv.
void write_sd_report(const SdReport& report, const std::filesystem::path& dir);

struct SfrsMap {
  std::size_t bin = 0;
  double bin_hz = 0.0;
  std::string method;
  std::vector<double> azimuths_deg;
  std::vector<double> elevations_deg;
  Eigen::MatrixXd db;                    // azimuths x elevations
  std::optional<Eigen::MatrixXd> error;  // |reference - db|
};

// Requires a panel covering the full grid (D x N).
SfrsMap sfrs(const Eigen::MatrixXd& panel, const DirectionGrid& grid, std::size_t bin,
             const std::string& method, const Eigen::MatrixXd* reference = nullptr,
             double sample_rate = 44100.0);

// Columns az, el, db and, with a reference, error_db.
void write_sfrs_csv(const SfrsMap& map, const std::filesystem::path& path);

struct ErrorSummary {
  std::optional<double> e_d;
  std::optional<double> e_w;
  std::optional<double> e_h;
  std::optional<double> e_t;
};

// Statistics for each predictor present in the bundle.
ErrorSummary error_summary(const PredictorBundle& bundle, const HrtfDataset& ds);
void write_errors_json(const ErrorSummary& summary, const std::filesystem::path& path);

struct VarianceReport {
  std::vector<std::size_t> q_list;
  std::vector<double> left;   // full-sphere fit per ear
  std::vector<double> right;
};

// Cumulative variance of a full-sphere SPCA per ear, over every subject.
VarianceReport variance_report(const HrtfDataset& ds, std::span<const std::size_t> q_list);
void write_variance_csv(const VarianceReport& report, const std::filesystem::path& path);

}  // namespace hrtfkit

#endif  // HRTFKIT_EVALUATION_HPP_
