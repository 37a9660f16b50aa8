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

#include "hrtfkit/evaluation.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/dsp.hpp"
#include "hrtfkit/error.hpp"
#include "hrtfkit/parallel.hpp"
#include "hrtfkit/spca.hpp"
#include "hrtfkit/spectra.hpp"

namespace hrtfkit {
namespace fs = std::filesystem;

Eigen::VectorXd spectral_distortion(const Eigen::MatrixXd& measured, const Eigen::MatrixXd& test) {
  if (measured.rows() != test.rows() || measured.cols() != test.cols()) {
    throw ValidationError("spectral_distortion: panel shapes differ (" +
                          std::to_string(measured.rows()) + "x" + std::to_string(measured.cols()) +
                          " vs " + std::to_string(test.rows()) + "x" + std::to_string(test.cols()) + ")");
  }
  if (measured.rows() == 0) throw ValidationError("spectral_distortion: empty direction set");
  return (measured - test).cwiseAbs().colwise().mean().transpose();
}

std::vector<DirectionParams> grid_direction_params(const PredictorBundle& bundle) {
  std::vector<DirectionParams> params(bundle.grid.size());
  for (std::size_t d = 0; d < params.size(); ++d) {
    const Direction dir = bundle.grid.at(d);
    params[d] = predict_direction_params(bundle, dir.azimuth_deg, dir.elevation_deg);
  }
  return params;
}

Eigen::MatrixXd predicted_log_panel(const PredictorBundle& bundle, const AnthroParams& anthro,
                                    Ear ear, SynthMethod method,
                                    const std::vector<DirectionParams>* params) {
  const auto d_count = static_cast<Eigen::Index>(bundle.grid.size());
  const auto n = static_cast<Eigen::Index>(bundle.hrir_length);
  Eigen::MatrixXd panel(d_count, n);
  switch (method) {
    case SynthMethod::kGeneric: {
      if (!bundle.generic_left || !bundle.generic_right) {
        throw ValidationError("bundle carries no generic subject HRIRs");
      }
      const HrirMatrix& h = ear == Ear::kLeft ? *bundle.generic_left : *bundle.generic_right;
      for (Eigen::Index d = 0; d < d_count; ++d) {
        const auto spec = dsp::hrir_to_log_spectrum(
            std::span<const float>(h.row(d).data(), static_cast<std::size_t>(n)));
        panel.row(d) = Eigen::Map<const Eigen::RowVectorXd>(spec.data(), n);
      }
      break;
    }
    case SynthMethod::kPca: {
      if (!bundle.baseline) throw ValidationError("bundle has no PCA baseline; run train pca");
      for (Eigen::Index d = 0; d < d_count; ++d) {
        const Direction dir = bundle.grid.at(static_cast<std::size_t>(d));
        const auto spec = predict_pca_hrtf(*bundle.baseline, anthro, ear, dir.azimuth_deg, dir.elevation_deg);
        for (Eigen::Index k = 0; k < n; ++k) panel(d, k) = std::max(dsp::kFloorDb, spec[k]);
      }
      break;
    }
    case SynthMethod::kSpca: {
      std::vector<DirectionParams> local;
      if (!params) {
        local = grid_direction_params(bundle);
        params = &local;
      }
      const PersonalizedWeights w = personalize(bundle, anthro);
      for (Eigen::Index d = 0; d < d_count; ++d) {
        const std::size_t aligned = ear_aligned_index(bundle.grid, static_cast<std::size_t>(d), ear);
        const auto spec = spca_log_magnitude(bundle, w, ear, (*params)[aligned]);
        panel.row(d) = Eigen::Map<const Eigen::RowVectorXd>(spec.data(), n);
      }
      break;
    }
  }
  return panel;
}

double SdReport::overall(SynthMethod m) const {
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (methods[i] == method_name(m)) return overall_db[i];
  }
  throw ValidationError(std::string("SD report has no method ") + method_name(m));
}

SdReport build_sd_report(const PredictorBundle& bundle, const HrtfDataset& ds,
                         const std::vector<SynthMethod>& methods,
                         const std::vector<std::string>& subjects, unsigned workers) {
  if (subjects.empty()) throw ValidationError("SD report needs at least one subject");
  if (methods.empty()) throw ValidationError("SD report needs at least one method");
  if (bundle.grid.size() != ds.grid.size()) throw ValidationError("bundle and dataset grids differ");
  const std::size_t n = bundle.hrir_length;
  const std::size_t bins = n / 2 + 1;

  SdReport report;
  report.subjects = subjects;
  for (SynthMethod m : methods) report.methods.push_back(method_name(m));
  for (std::size_t k = 0; k < bins; ++k) report.bin_hz.push_back(static_cast<double>(k) * ds.sample_rate / static_cast<double>(n));

  std::vector<DirectionParams> params;
  if (std::find(methods.begin(), methods.end(), SynthMethod::kSpca) != methods.end()) {
    params = grid_direction_params(bundle);
  }
  report.per_subject.assign(methods.size(), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(subjects.size()),
                                                                   static_cast<Eigen::Index>(bins)));
  parallel_for(
      subjects.size(),
      [&](std::size_t si) {
        const SubjectRecord& s = ds.subject(subjects[si]);
        if (!s.anthro) throw ValidationError("subject " + s.subject_id + " has no anthropometry");
        for (Ear ear : kBothEars) {
          const Eigen::MatrixXd measured = log_spectra(s, ear);
          for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const Eigen::MatrixXd test = predicted_log_panel(bundle, *s.anthro, ear, methods[mi], &params);
            const Eigen::VectorXd sd = spectral_distortion(measured, test);
            report.per_subject[mi].row(static_cast<Eigen::Index>(si)) +=
                0.5 * sd.head(static_cast<Eigen::Index>(bins)).transpose();
          }
        }
      },
      workers);

  const auto mc = static_cast<Eigen::Index>(methods.size());
  report.mean_db.resize(mc, static_cast<Eigen::Index>(bins));
  report.std_db.resize(mc, static_cast<Eigen::Index>(bins));
  for (Eigen::Index m = 0; m < mc; ++m) {
    const Eigen::MatrixXd& p = report.per_subject[m];
    const Eigen::RowVectorXd mean = p.colwise().mean();
    report.mean_db.row(m) = mean;
    report.std_db.row(m) = ((p.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
    report.overall_db.push_back(mean.mean());
  }
  return report;
}

void write_sd_report(const SdReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream csv;
  csv.precision(10);
  csv << "bin_hz,method,mean_db,std_db\n";
  for (std::size_t k = 0; k < report.bin_hz.size(); ++k) {
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
      csv << report.bin_hz[k] << ',' << report.methods[m] << ','
          << report.mean_db(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) << ','
          << report.std_db(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) << '\n';
    }
  }
  write_text(dir / "sd_report.csv", csv.str());

  std::ostringstream subj;
  subj.precision(10);
  subj << "subject_id,method,mean_db\n";
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    for (std::size_t s = 0; s < report.subjects.size(); ++s) {
      subj << report.subjects[s] << ',' << report.methods[m] << ','
           << report.per_subject[m].row(static_cast<Eigen::Index>(s)).mean() << '\n';
    }
  }
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    subj << "all," << report.methods[m] << ',' << report.overall_db[m] << '\n';
  }
  write_text(dir / "sd_subjects.csv", subj.str());
}

SfrsMap sfrs(const Eigen::MatrixXd& panel, const DirectionGrid& grid, std::size_t bin,
             const std::string& method, const Eigen::MatrixXd* reference, double sample_rate) {
  if (static_cast<std::size_t>(panel.rows()) != grid.size()) {
    throw ValidationError("sfrs: panel has " + std::to_string(panel.rows()) +
                          " directions, grid has " + std::to_string(grid.size()));
  }
  if (bin >= static_cast<std::size_t>(panel.cols())) throw ValidationError("sfrs: bin out of range");
  if (reference && (reference->rows() != panel.rows() || reference->cols() != panel.cols())) {
    throw ValidationError("sfrs: reference panel shape differs");
  }
  SfrsMap map;
  map.bin = bin;
  map.bin_hz = static_cast<double>(bin) * sample_rate / static_cast<double>(panel.cols());
  map.method = method;
  map.azimuths_deg = grid.azimuths_deg();
  map.elevations_deg = grid.elevations_deg();
  const auto na = static_cast<Eigen::Index>(map.azimuths_deg.size());
  const auto ne = static_cast<Eigen::Index>(map.elevations_deg.size());
  map.db.resize(na, ne);
  if (reference) map.error = Eigen::MatrixXd(na, ne);
  for (Eigen::Index a = 0; a < na; ++a) {
    for (Eigen::Index e = 0; e < ne; ++e) {
      const auto d = static_cast<Eigen::Index>(grid.index(static_cast<std::size_t>(a), static_cast<std::size_t>(e)));
      const auto b = static_cast<Eigen::Index>(bin);
      map.db(a, e) = panel(d, b);
      if (reference) (*map.error)(a, e) = std::abs((*reference)(d, b) - panel(d, b));
    }
  }
  return map;
}

void write_sfrs_csv(const SfrsMap& map, const fs::path& path) {
  std::ostringstream csv;
  csv.precision(10);
  csv << "az,el,db" << (map.error ? ",error_db" : "") << '\n';
  for (std::size_t a = 0; a < map.azimuths_deg.size(); ++a) {
    for (std::size_t e = 0; e < map.elevations_deg.size(); ++e) {
      const auto ai = static_cast<Eigen::Index>(a);
      const auto ei = static_cast<Eigen::Index>(e);
      csv << map.azimuths_deg[a] << ',' << map.elevations_deg[e] << ',' << map.db(ai, ei);
      if (map.error) csv << ',' << (*map.error)(ai, ei);
      csv << '\n';
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, csv.str());
}

ErrorSummary error_summary(const PredictorBundle& bundle, const HrtfDataset& ds) {
  bundle.require_spca_models();
  const PredictorFunctions fns = bundle_functions(bundle);
  ErrorSummary s;
  if (fns.weights) s.e_d = weight_error(ds, *bundle.spca, fns);
  if (fns.dvspc) s.e_w = dvspc_error(ds.grid, *bundle.spca, fns);
  if (fns.hav) s.e_h = hav_error(ds.grid, *bundle.spca, fns);
  if (fns.itd) s.e_t = itd_error(ds, *bundle.spca, fns);
  return s;
}

void write_errors_json(const ErrorSummary& summary, const fs::path& path) {
  auto value = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["e_d"] = value(summary.e_d);
  j["e_W"] = value(summary.e_w);
  j["e_H"] = value(summary.e_h);
  j["e_T_ms"] = value(summary.e_t);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, j.dump(2) + "\n");
}

VarianceReport variance_report(const HrtfDataset& ds, std::span<const std::size_t> q_list) {
  if (q_list.empty()) throw ValidationError("variance report needs at least one Q");
  VarianceReport report;
  report.q_list.assign(q_list.begin(), q_list.end());
  std::vector<std::string> ids;
  for (const auto& s : ds.subjects) ids.push_back(s.subject_id);
  std::vector<std::size_t> all(ds.grid.size());
  std::iota(all.begin(), all.end(), 0);
  for (Ear ear : kBothEars) {
    const LogSpectraSet spectra = compute_log_spectra(ds, ids, {ear});
    const Eigen::VectorXd mu = compute_global_mean(spectra);
    auto values = variance_table(spectra, mu, all, q_list);
    (ear == Ear::kLeft ? report.left : report.right) = std::move(values);
  }
  return report;
}

void write_variance_csv(const VarianceReport& report, const fs::path& path) {
  std::ostringstream csv;
  csv.precision(6);
  csv << std::fixed << "q,left_pct,right_pct\n";
  for (std::size_t i = 0; i < report.q_list.size(); ++i) {
    csv << report.q_list[i] << ',' << report.left[i] << ',' << report.right[i] << '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, csv.str());
}

}  // namespace hrtfkit
