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

#include "hrtfkit/spectra.hpp"

#include "hrtfkit/dsp.hpp"
#include "hrtfkit/error.hpp"
#include "hrtfkit/parallel.hpp"

namespace hrtfkit {

std::size_t LogSpectraSet::find(const std::string& subject_id, Ear ear) const {
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (observations[i].subject_id == subject_id && observations[i].ear == ear) return i;
  }
  throw ValidationError("no log spectra for subject " + subject_id + " (" + ear_name(ear) +
                        " ear)");
}

Eigen::MatrixXd log_spectra(const SubjectRecord& subject, Ear ear) {
  const HrirMatrix& h = subject.hrir(ear);
  Eigen::MatrixXd out(h.rows(), h.cols());
  for (Eigen::Index d = 0; d < h.rows(); ++d) {
    const auto spec = dsp::hrir_to_log_spectrum(subject.hrir(ear, static_cast<std::size_t>(d)));
    out.row(d) = Eigen::Map<const Eigen::RowVectorXd>(spec.data(), h.cols());
  }
  return out;
}

LogSpectraSet compute_log_spectra(const HrtfDataset& ds,
                                  const std::vector<std::string>& subject_ids,
                                  const std::vector<Ear>& ears) {
  LogSpectraSet set;
  for (const auto& id : subject_ids) {
    ds.subject(id);  // validates the id
    for (Ear ear : ears) set.observations.push_back({id, ear});
  }
  set.spectra.resize(set.observations.size());
  parallel_for(set.observations.size(), [&](std::size_t i) {
    set.spectra[i] = log_spectra(ds.subject(set.observations[i].subject_id),
                                 set.observations[i].ear);
  });
  return set;
}

LogSpectraSet compute_log_spectra(const HrtfDataset& ds) {
  std::vector<std::string> ids;
  for (const auto& s : ds.subjects) ids.push_back(s.subject_id);
  return compute_log_spectra(ds, ids);
}

double ear_aligned_azimuth(double azimuth_deg, Ear ear) {
  return ear == Ear::kLeft ? -azimuth_deg : azimuth_deg;
}

std::size_t ear_aligned_index(const DirectionGrid& grid, std::size_t index, Ear ear) {
  if (ear == Ear::kRight) return index;
  const auto m = grid.mirror(index);
  if (!m) throw ValidationError("direction grid is not symmetric in azimuth");
  return *m;
}

Eigen::MatrixXd ear_aligned(const Eigen::MatrixXd& spectra, Ear ear, const DirectionGrid& grid) {
  if (spectra.rows() != static_cast<Eigen::Index>(grid.size())) {
    throw ValidationError("ear_aligned: spectra have " + std::to_string(spectra.rows()) +
                          " directions, grid has " + std::to_string(grid.size()));
  }
  if (ear == Ear::kRight) return spectra;
  Eigen::MatrixXd out(spectra.rows(), spectra.cols());
  for (std::size_t d = 0; d < grid.size(); ++d) {
    out.row(static_cast<Eigen::Index>(d)) =
        spectra.row(static_cast<Eigen::Index>(ear_aligned_index(grid, d, ear)));
  }
  return out;
}

LogSpectraSet ear_aligned(LogSpectraSet set, const DirectionGrid& grid) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    set.spectra[i] = ear_aligned(set.spectra[i], set.observations[i].ear, grid);
  }
  return set;
}

}  // namespace hrtfkit
