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

#include "hrtfkit/pca_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/error.hpp"
#include "hrtfkit/parallel.hpp"

namespace hrtfkit {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Appends unit vectors orthogonal to the existing rows until `rows` are filled.
void complete_orthonormal(Eigen::MatrixXd& basis, Eigen::Index filled) {
  const Eigen::Index n = basis.cols();
  Eigen::Index candidate = 0;
  while (filled < basis.rows()) {
    if (candidate >= n) throw NumericalError("fit_pca: cannot complete orthonormal basis");
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Unit(n, candidate++);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index r = 0; r < filled; ++r) v -= v.dot(basis.row(r)) * basis.row(r);
    }
    const double norm = v.norm();
    if (norm > 1e-6) basis.row(filled++) = v / norm;
  }
}

}  // namespace

DirectionPcaModel fit_pca(const Eigen::MatrixXd& spectra, std::size_t p) {
  const Eigen::Index s = spectra.rows();
  const Eigen::Index n = spectra.cols();
  if (s < 2) throw ValidationError("fit_pca: need at least 2 subjects, got " + std::to_string(s));
  if (p < 1 || p > static_cast<std::size_t>(n)) {
    throw ValidationError("fit_pca: P=" + std::to_string(p) + " outside [1, " + std::to_string(n) + "]");
  }
  if (!spectra.allFinite()) throw ValidationError("fit_pca: non-finite input");

  DirectionPcaModel model;
  model.mean = spectra.colwise().mean().transpose();
  const Eigen::MatrixXd centered = spectra.rowwise() - model.mean.transpose();

  // The nonzero spectrum of the N x N scatter matrix equals that of the
  // S x S Gram matrix, which is much smaller for S << N.
  const Eigen::MatrixXd gram = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw NumericalError("fit_pca: eigendecomposition failed");

  model.eigenvalues = Eigen::VectorXd::Zero(n);
  const Eigen::Index rank_limit = std::min(s, n);
  const double largest = std::max(0.0, solver.eigenvalues()(s - 1));
  const double tol = 1e-12 * std::max(largest, 1e-300);
  for (Eigen::Index i = 0; i < rank_limit; ++i) {
    model.eigenvalues(i) = std::max(0.0, solver.eigenvalues()(s - 1 - i));
  }

  model.basis.resize(static_cast<Eigen::Index>(p), n);
  Eigen::Index filled = 0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(p) && i < rank_limit; ++i) {
    const double lambda = model.eigenvalues(i);
    if (!(lambda > tol) || largest <= 0.0) break;
    Eigen::RowVectorXd w = (centered.transpose() * solver.eigenvectors().col(s - 1 - i)).transpose();
    for (Eigen::Index r = 0; r < filled; ++r) w -= w.dot(model.basis.row(r)) * model.basis.row(r);
    w.normalize();
    model.basis.row(filled++) = w;
  }
  complete_orthonormal(model.basis, filled);
  for (Eigen::Index r = 0; r < model.basis.rows(); ++r) {
    Eigen::Index arg = 0;
    model.basis.row(r).cwiseAbs().maxCoeff(&arg);
    if (model.basis(r, arg) < 0.0) model.basis.row(r) *= -1.0;
  }
  return model;
}

DirectionPcaModel fit_direction_pca(const LogSpectraSet& spectra, std::size_t direction, Ear ear,
                                    std::size_t p) {
  std::vector<std::size_t> rows;
  for (std::size_t o = 0; o < spectra.size(); ++o) {
    if (spectra.observations[o].ear == ear) rows.push_back(o);
  }
  if (rows.size() < 2) {
    throw ValidationError("fit_direction_pca: need at least 2 subjects for the " +
                          std::string(ear_name(ear)) + " ear");
  }
  const Eigen::Index bins = spectra.spectra.front().cols();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), bins);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& m = spectra.spectra[rows[r]];
    if (direction >= static_cast<std::size_t>(m.rows())) {
      throw ValidationError("fit_direction_pca: direction out of range");
    }
    x.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(direction));
  }
  DirectionPcaModel model = fit_pca(x, p);
  model.direction = direction;
  model.ear = ear;
  return model;
}

double cumulative_variance(const DirectionPcaModel& model, std::size_t p) {
  if (p < 1 || p > static_cast<std::size_t>(model.eigenvalues.size())) {
    throw ValidationError("cumulative_variance: P out of range");
  }
  const double total = model.eigenvalues.sum();
  if (total <= 0.0) return 100.0;
  return 100.0 * model.eigenvalues.head(static_cast<Eigen::Index>(p)).sum() / total;
}

Eigen::VectorXd reconstruct(const DirectionPcaModel& model, const Eigen::VectorXd& weights) {
  if (weights.size() != model.basis.rows()) throw ValidationError("reconstruct: weight count mismatch");
  return model.basis.transpose() * weights + model.mean;
}

Eigen::VectorXd project(const DirectionPcaModel& model, const Eigen::VectorXd& spectrum) {
  if (spectrum.size() != model.basis.cols()) throw ValidationError("project: spectrum length mismatch");
  return model.basis * (spectrum - model.mean);
}

PcaBaseline fit_pca_baseline(const LogSpectraSet& spectra, const DirectionGrid& grid,
                             std::size_t p, unsigned workers) {
  PcaBaseline baseline;
  baseline.p = p;
  baseline.grid = grid;
  baseline.models.resize(2 * grid.size());
  parallel_for(
      baseline.models.size(),
      [&](std::size_t slot) {
        const Ear ear = slot < grid.size() ? Ear::kLeft : Ear::kRight;
        baseline.models[slot] = fit_direction_pca(spectra, slot % grid.size(), ear, p);
      },
      workers);
  return baseline;
}

double mean_pca_variance(const PcaBaseline& baseline, Ear ear, std::size_t p) {
  double sum = 0.0;
  for (std::size_t d = 0; d < baseline.grid.size(); ++d) {
    sum += cumulative_variance(baseline.model(d, ear), p);
  }
  return sum / static_cast<double>(baseline.grid.size());
}

void train_pca_baseline_nets(PcaBaseline& baseline, const HrtfDataset& ds,
                             const LogSpectraSet& spectra, const PcaBaselineConfig& cfg) {
  if (ds.training_subjects.empty()) {
    throw ValidationError("train_pca_baseline_nets: manifest lists no training subjects");
  }
  std::vector<std::array<double, 8>> inputs[2];
  std::vector<std::size_t> obs[2];
  for (Ear ear : kBothEars) {
    for (const auto& id : ds.training_subjects) {
      const auto& s = ds.subject(id);
      if (!s.anthro) throw ValidationError("training subject " + id + " has no anthropometry");
      inputs[static_cast<int>(ear)].push_back(s.anthro->spectral_inputs(ear));
      obs[static_cast<int>(ear)].push_back(spectra.find(id, ear));
    }
  }
  const std::size_t n = ds.training_subjects.size();
  const std::size_t n_valid = n / 6;
  const std::size_t n_train = n - n_valid;

  std::vector<std::size_t> layers = {8};
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(baseline.p);

  baseline.nets.assign(baseline.models.size(), MlpNetwork());
  parallel_for(
      baseline.models.size(),
      [&](std::size_t slot) {
        const auto& model = baseline.models[slot];
        const int e = static_cast<int>(model.ear);
        SampleSet train_set{Eigen::MatrixXd(n_train, 8), Eigen::MatrixXd(n_train, baseline.p)};
        SampleSet valid_set{Eigen::MatrixXd(n_valid, 8), Eigen::MatrixXd(n_valid, baseline.p)};
        for (std::size_t i = 0; i < n; ++i) {
          const auto& spectrum = spectra.spectra[obs[e][i]].row(static_cast<Eigen::Index>(model.direction));
          const Eigen::VectorXd w = project(model, spectrum.transpose());
          const Eigen::Map<const Eigen::RowVectorXd> x(inputs[e][i].data(), 8);
          auto& set = i < n_train ? train_set : valid_set;
          const auto row = static_cast<Eigen::Index>(i < n_train ? i : i - n_train);
          set.inputs.row(row) = x;
          set.targets.row(row) = w.transpose();
        }
        MlpNetwork net(layers, cfg.seed * 1000003ULL + slot);
        net.fit_statistics(train_set);
        baseline.nets[slot] = train(std::move(net), train_set, valid_set, cfg.train).net;
      },
      cfg.workers);
}

std::vector<double> predict_pca_hrtf(const PcaBaseline& baseline, const AnthroParams& anthro,
                                     Ear ear, double azimuth_deg, double elevation_deg) {
  const auto dir = baseline.grid.find(azimuth_deg, elevation_deg);
  if (!dir) {
    throw ValidationError("off-grid direction unsupported by pca (az " +
                          std::to_string(azimuth_deg) + ", el " + std::to_string(elevation_deg) +
                          ")");
  }
  if (baseline.nets.empty()) throw ValidationError("pca baseline networks are not trained");
  const std::size_t slot = baseline.slot(*dir, ear);
  const auto x = anthro.spectral_inputs(ear);
  const Eigen::VectorXd w =
      baseline.nets[slot].forward(Eigen::Map<const Eigen::VectorXd>(x.data(), 8));
  const Eigen::VectorXd spectrum = reconstruct(baseline.models[slot], w);
  return {spectrum.data(), spectrum.data() + spectrum.size()};
}

void save_pca_baseline(const PcaBaseline& baseline, const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t slots = baseline.models.size();
  if (slots == 0) throw ValidationError("save_pca_baseline: no models");
  const auto n = static_cast<std::size_t>(baseline.models.front().basis.cols());
  std::vector<double> basis, mean, eig;
  basis.reserve(slots * baseline.p * n);
  for (const auto& m : baseline.models) {
    for (Eigen::Index r = 0; r < m.basis.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.basis.cols(); ++c) basis.push_back(m.basis(r, c));
    }
    mean.insert(mean.end(), m.mean.data(), m.mean.data() + m.mean.size());
    eig.insert(eig.end(), m.eigenvalues.data(), m.eigenvalues.data() + m.eigenvalues.size());
  }
  json meta;
  meta["format_version"] = 1;
  meta["p"] = baseline.p;
  meta["bins"] = n;
  meta["azimuths_deg"] = baseline.grid.azimuths_deg();
  meta["elevations_deg"] = baseline.grid.elevations_deg();
  meta["slot_order"] = "ear-major (left then right), then direction";
  meta["files"] = {{"basis", "basis.f32"}, {"mean", "mean.f32"}, {"eigenvalues", "eigenvalues.f32"}};
  meta["nets"] = baseline.nets.empty() ? "" : "nets.jsonl";
  write_text(dir / "baseline.json", meta.dump(1) + "\n");
  write_f32_from_double(dir / "basis.f32", basis);
  write_f32_from_double(dir / "mean.f32", mean);
  write_f32_from_double(dir / "eigenvalues.f32", eig);
  if (!baseline.nets.empty()) {
    std::ofstream out(dir / "nets.jsonl", std::ios::trunc);
    for (const auto& net : baseline.nets) out << mlp_to_json(net) << '\n';
    if (!out) throw Error("write failed for " + (dir / "nets.jsonl").string());
  }
}

PcaBaseline load_pca_baseline(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_text(dir / "baseline.json"));
  } catch (const json::parse_error& e) {
    throw ValidationError((dir / "baseline.json").string() + ": " + e.what());
  }
  PcaBaseline baseline;
  baseline.p = meta.at("p").get<std::size_t>();
  const auto n = meta.at("bins").get<std::size_t>();
  baseline.grid = DirectionGrid(meta.at("azimuths_deg").get<std::vector<double>>(),
                                meta.at("elevations_deg").get<std::vector<double>>());
  const std::size_t slots = 2 * baseline.grid.size();
  const auto basis = read_f32_as_double(dir / "basis.f32", slots * baseline.p * n);
  const auto mean = read_f32_as_double(dir / "mean.f32", slots * n);
  const auto eig = read_f32_as_double(dir / "eigenvalues.f32", slots * n);
  baseline.models.resize(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    auto& m = baseline.models[s];
    m.direction = s % baseline.grid.size();
    m.ear = s < baseline.grid.size() ? Ear::kLeft : Ear::kRight;
    m.basis = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        basis.data() + s * baseline.p * n, static_cast<Eigen::Index>(baseline.p), static_cast<Eigen::Index>(n));
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data() + s * n, static_cast<Eigen::Index>(n));
    m.eigenvalues = Eigen::Map<const Eigen::VectorXd>(eig.data() + s * n, static_cast<Eigen::Index>(n));
  }
  const auto nets_file = meta.value("nets", std::string{});
  if (!nets_file.empty()) {
    std::ifstream in(dir / nets_file);
    if (!in) throw ValidationError("cannot open " + (dir / nets_file).string());
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) baseline.nets.push_back(mlp_from_json(line));
    }
    if (baseline.nets.size() != slots) {
      throw ValidationError((dir / nets_file).string() + ": expected " + std::to_string(slots) +
                            " networks, found " + std::to_string(baseline.nets.size()));
    }
  }
  return baseline;
}

}  // namespace hrtfkit
