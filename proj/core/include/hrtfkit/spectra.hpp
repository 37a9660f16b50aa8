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

#ifndef HRTFKIT_SPECTRA_HPP_
#define HRTFKIT_SPECTRA_HPP_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "hrtfkit/dataset.hpp"

namespace hrtfkit {

// One subject-ear pair.
struct Observation {
  std::string subject_id;
  Ear ear = Ear::kLeft;
};

// Log-magnitude spectra in dB, one D x N matrix per observation.
struct LogSpectraSet {
  std::vector<Observation> observations;
  std::vector<Eigen::MatrixXd> spectra;

  std::size_t size() const { return observations.size(); }
  // Index of (subject, ear) or throws.
  std::size_t find(const std::string& subject_id, Ear ear) const;
};

// D x N log spectra of one subject and ear.
Eigen::MatrixXd log_spectra(const SubjectRecord& subject, Ear ear);

// Observations are ordered subject-major (as listed), left ear before right.
LogSpectraSet compute_log_spectra(const HrtfDataset& ds,
                                  const std::vector<std::string>& subject_ids,
                                  const std::vector<Ear>& ears = {Ear::kLeft, Ear::kRight});

// All subjects, both ears.
LogSpectraSet compute_log_spectra(const HrtfDataset& ds);

// The SPCA basis is shared by both ears in an ear-aligned frame: right-ear
// spectra as measured, left-ear spectra with the azimuth negated, so that
// positive azimuths are ipsilateral for both observations.
double ear_aligned_azimuth(double azimuth_deg, Ear ear);
// Grid index holding `ear`'s spectrum for aligned direction `index`. Throws
// ValidationError when the grid is not symmetric in azimuth.
std::size_t ear_aligned_index(const DirectionGrid& grid, std::size_t index, Ear ear);
// D x N spectra of `ear` reordered into the aligned frame.
Eigen::MatrixXd ear_aligned(const Eigen::MatrixXd& spectra, Ear ear, const DirectionGrid& grid);
LogSpectraSet ear_aligned(LogSpectraSet set, const DirectionGrid& grid);

}  // namespace hrtfkit

#endif  // HRTFKIT_SPECTRA_HPP_
