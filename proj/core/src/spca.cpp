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

#include "hrtfkit/spca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/error.hpp"

namespace hrtfkit {
namespace fs = std::filesystem;
using json = nlohmann::json;

Eigen::VectorXd compute_global_mean(std::span<const Eigen::MatrixXd> spectra) {
  if (spectra.empty()) throw ValidationError("compute_global_mean: no spectra");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(spectra.front().cols());
  double count = 0.0;
  for (const auto& m : spectra) {
    if (m.cols() != sum.size()) throw ValidationError("compute_global_mean: bin count mismatch");
    sum += m.colwise().sum().transpose();
    count += static_cast<double>(m.rows());
  }
  if (count == 0.0) throw ValidationError("compute_global_mean: no directions");
  return sum / count;
}

Eigen::VectorXd compute_global_mean(const LogSpectraSet& spectra) {
  return compute_global_mean(std::span<const Eigen::MatrixXd>(spectra.spectra));
}

std::optional<std::size_t> SpcaModel::column_of(std::size_t grid_index) const {
  const auto it = std::find(direction_indices.begin(), direction_indices.end(), grid_index);
  if (it == direction_indices.end()) return std::nullopt;
  return static_cast<std::size_t>(it - direction_indices.begin());
}

SpcaFit fit_spca(const Eigen::MatrixXd& log_delta_rows, std::size_t q) {
  const Eigen::Index dirs = log_delta_rows.cols();
  if (log_delta_rows.rows() == 0 || dirs == 0) throw ValidationError("fit_spca: empty input");
  if (q < 1 || q > static_cast<std::size_t>(dirs)) {
    throw ValidationError("fit_spca: Q=" + std::to_string(q) + " outside [1, " +
                          std::to_string(dirs) + "]");
  }
  if (!log_delta_rows.allFinite()) throw ValidationError("fit_spca: non-finite input");

  SpcaFit fit;
  SpcaModel& model = fit.model;
  model.h_av = log_delta_rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = log_delta_rows.rowwise() - model.h_av.transpose();

  Eigen::MatrixXd scatter(dirs, dirs);
  scatter.setZero();
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  scatter = scatter.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scatter);
  if (solver.info() != Eigen::Success) throw NumericalError("fit_spca: eigendecomposition failed");

  // Eigen returns ascending order.
  const Eigen::VectorXd ascending = solver.eigenvalues();
  model.eigenvalues = ascending.reverse();
  const double largest = std::max(0.0, model.eigenvalues(0));
  const double round_off = 1e-9 * std::max(1.0, largest);
  for (Eigen::Index i = 0; i < dirs; ++i) {
    double& v = model.eigenvalues(i);
    if (v < -round_off) {
      throw NumericalError("fit_spca: scatter matrix has a negative eigenvalue " +
                           std::to_string(v));
    }
    v = std::max(v, 0.0);
  }

  model.basis.resize(static_cast<Eigen::Index>(q), dirs);
  for (std::size_t k = 0; k < q; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(dirs - 1 - static_cast<Eigen::Index>(k));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    model.basis.row(static_cast<Eigen::Index>(k)) = v.transpose().normalized();
  }
  fit.weights = centered * model.basis.transpose();
  return fit;
}

double cumulative_variance(const Eigen::VectorXd& eigenvalues, std::size_t q) {
  if (q < 1 || q > static_cast<std::size_t>(eigenvalues.size())) {
    throw ValidationError("cumulative_variance: Q=" + std::to_string(q) + " outside [1, " +
                          std::to_string(eigenvalues.size()) + "]");
  }
  const double total = eigenvalues.sum();
  if (total <= 0.0) return 100.0;  // no variance left to explain
  return 100.0 * eigenvalues.head(static_cast<Eigen::Index>(q)).sum() / total;
}

double cumulative_variance(const SpcaModel& model, std::size_t q) {
  return cumulative_variance(model.eigenvalues, q);
}

Eigen::MatrixXd reconstruct(const SpcaModel& model, const Eigen::MatrixXd& weights) {
  if (weights.cols() != model.basis.rows()) {
    throw ValidationError("reconstruct: weights have " + std::to_string(weights.cols()) +
                          " columns, model has Q=" + std::to_string(model.basis.rows()));
  }
  Eigen::MatrixXd out = weights * model.basis;
  out.rowwise() += model.h_av.transpose();
  return out;
}

Eigen::MatrixXd project(const SpcaModel& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != model.basis.cols()) {
    throw ValidationError("project: rows have " + std::to_string(rows.cols()) +
                          " directions, model has " + std::to_string(model.basis.cols()));
  }
  return (rows.rowwise() - model.h_av.transpose()) * model.basis.transpose();
}

Eigen::MatrixXd stack_spatial_rows(const LogSpectraSet& spectra, const Eigen::VectorXd& mu,
                                   std::span<const std::size_t> direction_indices) {
  if (spectra.size() == 0) throw ValidationError("stack_spatial_rows: no observations");
  const Eigen::Index bins = spectra.spectra.front().cols();
  if (mu.size() != bins) throw ValidationError("stack_spatial_rows: mean spectrum length mismatch");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(spectra.size()) * bins,
                       static_cast<Eigen::Index>(direction_indices.size()));
  for (std::size_t o = 0; o < spectra.size(); ++o) {
    const Eigen::MatrixXd& s = spectra.spectra[o];
    for (std::size_t c = 0; c < direction_indices.size(); ++c) {
      const auto d = static_cast<Eigen::Index>(direction_indices[c]);
      if (d >= s.rows()) throw ValidationError("stack_spatial_rows: direction out of range");
      rows.block(static_cast<Eigen::Index>(o) * bins, static_cast<Eigen::Index>(c), bins, 1) =
          s.row(d).transpose() - mu;
    }
  }
  return rows;
}

std::size_t reference_direction(const DirectionGrid& grid, Hemisphere h) {
  const double el = h == Hemisphere::kFront ? 0.0 : 180.0;
  const auto idx = grid.find(0.0, el);
  if (!idx) throw ValidationError("grid has no reference direction (0, " + std::to_string(el) + ")");
  return *idx;
}

SpcaFit fit_hemisphere(const LogSpectraSet& spectra, const Eigen::VectorXd& mu,
                       const DirectionGrid& grid, Hemisphere h, std::size_t q) {
  const auto part = partition_hemispheres(grid);
  const auto& dirs = part.indices(h);
  SpcaFit fit = fit_spca(stack_spatial_rows(spectra, mu, dirs), q);
  fit.model.hemisphere = h;
  fit.model.mu = mu;
  fit.model.direction_indices = dirs;
  fit.model.reference_column = *fit.model.column_of(reference_direction(grid, h));
  return fit;
}

std::vector<double> variance_table(const LogSpectraSet& spectra, const Eigen::VectorXd& mu,
                                   std::span<const std::size_t> direction_indices,
                                   std::span<const std::size_t> q_list) {
  const SpcaFit fit = fit_spca(stack_spatial_rows(spectra, mu, direction_indices), 1);
  std::vector<double> out;
  for (std::size_t q : q_list) out.push_back(cumulative_variance(fit.model, q));
  return out;
}

void save_spca_model(const SpcaModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  json meta;
  meta["format_version"] = 1;
  meta["hemisphere"] = model.hemisphere ? hemisphere_name(*model.hemisphere) : "full";
  meta["q"] = model.q();
  meta["direction_count"] = model.direction_count();
  meta["direction_indices"] = model.direction_indices;
  meta["reference_column"] = model.reference_column;
  meta["eigenvalues"] = std::vector<double>(model.eigenvalues.data(),
                                            model.eigenvalues.data() + model.eigenvalues.size());
  meta["mu"] = std::vector<double>(model.mu.data(), model.mu.data() + model.mu.size());
  meta["files"] = {{"W", "W.f32"}, {"H_av", "H_av.f32"}};
  write_text(dir / "spca_model.json", meta.dump(1) + "\n");

  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = model.basis;
  write_f32_from_double(dir / "W.f32", {w.data(), static_cast<std::size_t>(w.size())});
  write_f32_from_double(dir / "H_av.f32",
                        {model.h_av.data(), static_cast<std::size_t>(model.h_av.size())});
}

SpcaModel load_spca_model(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_text(dir / "spca_model.json"));
  } catch (const json::parse_error& e) {
    throw ValidationError((dir / "spca_model.json").string() + ": " + e.what());
  }
  SpcaModel model;
  try {
    if (meta.at("format_version").get<int>() != 1) {
      throw ValidationError((dir / "spca_model.json").string() + ": unknown format_version");
    }
    const auto h = meta.at("hemisphere").get<std::string>();
    if (h == "front") model.hemisphere = Hemisphere::kFront;
    if (h == "rear") model.hemisphere = Hemisphere::kRear;
    const auto q = meta.at("q").get<std::size_t>();
    const auto d = meta.at("direction_count").get<std::size_t>();
    model.direction_indices = meta.at("direction_indices").get<std::vector<std::size_t>>();
    model.reference_column = meta.at("reference_column").get<std::size_t>();
    const auto ev = meta.at("eigenvalues").get<std::vector<double>>();
    const auto mu = meta.at("mu").get<std::vector<double>>();
    model.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
    model.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    const auto w = read_f32_as_double(dir / meta.at("files").at("W").get<std::string>(), q * d);
    const auto hav = read_f32_as_double(dir / meta.at("files").at("H_av").get<std::string>(), d);
    model.basis = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(d));
    model.h_av = Eigen::Map<const Eigen::VectorXd>(hav.data(), static_cast<Eigen::Index>(d));
    if (model.direction_indices.size() != d || static_cast<std::size_t>(model.eigenvalues.size()) != d) {
      throw ValidationError((dir / "spca_model.json").string() + ": inconsistent sizes");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError((dir / "spca_model.json").string() + ": " + e.what());
  }
  return model;
}

}  // namespace hrtfkit
