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

#ifndef HRTFKIT_DATASET_HPP_
#define HRTFKIT_DATASET_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hrtfkit {

enum class Ear { kLeft = 0, kRight = 1 };
constexpr std::array<Ear, 2> kBothEars = {Ear::kLeft, Ear::kRight};
const char* ear_name(Ear ear);

enum class Hemisphere { kFront = 0, kRear = 1 };
constexpr std::array<Hemisphere, 2> kBothHemispheres = {Hemisphere::kFront,
                                                        Hemisphere::kRear};
const char* hemisphere_name(Hemisphere h);

// Interaural-polar direction: azimuth is the lateral angle (positive toward
// the right ear), elevation is the polar angle sweeping front-up-back.
struct Direction {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

// Rectangular measurement grid. Directions are enumerated azimuth-major:
// index = azimuth_index * elevation_count + elevation_index.
class DirectionGrid {
 public:
  DirectionGrid() = default;
  DirectionGrid(std::vector<double> azimuths_deg, std::vector<double> elevations_deg);

  // The 25 x 50 = 1250 direction CIPIC grid.
  static DirectionGrid cipic();

  const std::vector<double>& azimuths_deg() const { return azimuths_; }
  const std::vector<double>& elevations_deg() const { return elevations_; }
  std::size_t direction_count() const { return azimuths_.size() * elevations_.size(); }
  std::size_t size() const { return direction_count(); }

  Direction at(std::size_t index) const;
  std::size_t index(std::size_t azimuth_index, std::size_t elevation_index) const;
  // Grid index of (az, el) when it lies on the grid within `tol_deg`.
  std::optional<std::size_t> find(double azimuth_deg, double elevation_deg,
                                  double tol_deg = 1e-6) const;
  // Grid index of the direction with negated azimuth, when the grid has one.
  std::optional<std::size_t> mirror(std::size_t index) const;

  bool is_cipic() const;
  // Throws ValidationError unless this is the CIPIC grid.
  void require_cipic() const;

 private:
  std::vector<double> azimuths_;
  std::vector<double> elevations_;
};

struct HemispherePartition {
  std::vector<std::size_t> front_indices;
  std::vector<std::size_t> rear_indices;

  const std::vector<std::size_t>& indices(Hemisphere h) const {
    return h == Hemisphere::kFront ? front_indices : rear_indices;
  }
};

// Front = elevation <= 90 degrees, rear = the rest.
HemispherePartition partition_hemispheres(const DirectionGrid& grid);
Hemisphere hemisphere_of(double elevation_deg);

struct PinnaParams {
  std::optional<double> d1;  // cavum concha height
  std::optional<double> d3;  // cavum concha width
  std::optional<double> d4;  // fossa height
  std::optional<double> d5;  // pinna height
  std::optional<double> d6;  // pinna width

  bool complete() const { return d1 && d3 && d4 && d5 && d6; }
};

// Anthropometric measurements in cm. Only the head/torso and pinna values the
// models consume are named; any further columns found in anthro.csv are kept
// in `extra` for the selection analysis.
struct AnthroParams {
  std::optional<double> x1;   // head width
  std::optional<double> x2;   // head height
  std::optional<double> x3;   // head depth
  std::optional<double> x12;  // shoulder width
  PinnaParams left;
  PinnaParams right;
  std::map<std::string, double> extra;

  const PinnaParams& pinna(Ear ear) const { return ear == Ear::kLeft ? left : right; }
  bool complete() const { return x1 && x2 && x3 && x12 && left.complete() && right.complete(); }

  // x1, x3, x12, d1, d3, d4, d5, d6 for the given ear. Throws when missing.
  std::array<double, 8> spectral_inputs(Ear ear) const;
  // x1, x2, x3. Throws when missing or nonpositive.
  std::array<double, 3> itd_inputs() const;
  // Throws ValidationError if any present value is not strictly positive.
  void validate() const;
};

using HrirMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SubjectRecord {
  std::string subject_id;
  HrirMatrix hrir_left;   // D x hrir_length
  HrirMatrix hrir_right;  // D x hrir_length
  std::optional<AnthroParams> anthro;
  std::optional<std::vector<double>> itd_ms;  // D values

  const HrirMatrix& hrir(Ear ear) const { return ear == Ear::kLeft ? hrir_left : hrir_right; }
  std::span<const float> hrir(Ear ear, std::size_t direction) const;
};

struct HrtfDataset {
  double sample_rate = 44100.0;
  std::size_t hrir_length = 200;
  DirectionGrid grid;
  std::vector<SubjectRecord> subjects;
  std::string generic_subject_id;
  std::vector<std::string> training_subjects;
  std::vector<std::string> test_subjects;

  const SubjectRecord& subject(const std::string& id) const;
  const SubjectRecord* find_subject(const std::string& id) const;
  // Checks every invariant; throws ValidationError naming the offending item.
  void validate() const;
};

constexpr int kDatasetFormatVersion = 1;

HrtfDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const HrtfDataset& ds, const std::filesystem::path& dir);

// Parsing of the anthro.csv table; exposed for tests and the CLI.
std::map<std::string, AnthroParams> parse_anthro_csv(const std::string& text,
                                                     const std::string& source_name);
std::string format_anthro_csv(const std::vector<std::pair<std::string, AnthroParams>>& rows);

// A single subject's anthropometry as a JSON object keyed by the anthro.csv
// column names; null or absent keys are missing values.
AnthroParams parse_anthro_json(const std::string& text, const std::string& source_name);
std::string format_anthro_json(const AnthroParams& anthro);

// Subjects whose anthropometry has all nine model parameters for both ears.
std::vector<std::string> subjects_with_full_anthro(const HrtfDataset& ds);

struct SplitPlan {
  std::size_t count = 0;
  std::size_t test_stride = 4;
  std::size_t valid_stride = 5;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> valid_idx;
  std::vector<std::size_t> test_idx;
};

// Test = every test_stride-th index from 0; the remainder is re-indexed and
// every valid_stride-th of it (from 0) becomes validation; the rest trains.
SplitPlan make_split(std::size_t count, std::size_t test_stride = 4,
                     std::size_t valid_stride = 5);

}  // namespace hrtfkit

#endif  // HRTFKIT_DATASET_HPP_
