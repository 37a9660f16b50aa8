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

#include "hrtfkit/anthro_selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/QR>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/error.hpp"
#include "hrtfkit/parallel.hpp"
#include "hrtfkit/pca_baseline.hpp"

namespace hrtfkit {

RegressionResult regress_weights_on_anthro(const Eigen::MatrixXd& weights,
                                           const Eigen::MatrixXd& anthro) {
  const Eigen::Index s = anthro.rows();
  const Eigen::Index k = anthro.cols();
  if (weights.rows() != s) {
    throw ValidationError("regress_weights_on_anthro: " + std::to_string(weights.rows()) +
                          " weight rows vs " + std::to_string(s) + " anthropometry rows");
  }
  if (s < k + 2) {
    throw ValidationError("regress_weights_on_anthro: need at least " + std::to_string(k + 2) +
                          " subjects, got " + std::to_string(s));
  }
  Eigen::MatrixXd design(s, k + 1);
  design.col(0).setOnes();
  design.rightCols(k) = anthro;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k + 1) {
    throw NumericalError("regress_weights_on_anthro: rank-deficient design matrix (rank " +
                         std::to_string(qr.rank()) + " of " + std::to_string(k + 1) + ")");
  }
  RegressionResult out;
  out.dof = static_cast<std::size_t>(s - k - 1);
  out.coefficients = qr.solve(weights);
  out.residuals = weights - design * out.coefficients;

  // diag((X^T X)^-1) from the triangular factor: X P = Q R.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k + 1, k + 1).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(k + 1, k + 1));
  const Eigen::MatrixXd inv_perm = r_inv * r_inv.transpose();
  const Eigen::MatrixXd xtx_inv =
      qr.colsPermutation() * inv_perm * qr.colsPermutation().transpose();

  out.std_errors.resize(k + 1, weights.cols());
  out.t_stats.resize(k + 1, weights.cols());
  for (Eigen::Index q = 0; q < weights.cols(); ++q) {
    const double sigma2 = out.residuals.col(q).squaredNorm() / static_cast<double>(out.dof);
    for (Eigen::Index j = 0; j <= k; ++j) {
      const double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
      const double est = out.coefficients(j, q);
      out.std_errors(j, q) = se;
      if (se > 0.0) {
        out.t_stats(j, q) = est / se;
      } else {
        out.t_stats(j, q) =
            est == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), est);
      }
    }
  }
  return out;
}

Eigen::MatrixXd pearson_matrix(const Eigen::MatrixXd& anthro) {
  const Eigen::Index s = anthro.rows();
  const Eigen::Index k = anthro.cols();
  if (s < 3) throw ValidationError("pearson_matrix: need at least 3 subjects, got " + std::to_string(s));
  const Eigen::MatrixXd centered = anthro.rowwise() - anthro.colwise().mean();
  const Eigen::VectorXd norms = centered.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (norms(j) == 0.0) {
      throw ValidationError("pearson_matrix: column " + std::to_string(j) + " has zero variance");
    }
  }
  Eigen::MatrixXd r = (centered.transpose() * centered).cwiseAbs();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) r(i, j) = std::min(1.0, r(i, j) / (norms(i) * norms(j)));
  }
  // Exact symmetry regardless of summation order.
  r = (0.5 * (r + r.transpose())).eval();
  r.diagonal().setZero();
  return r;
}

const SelectedParameters& selected_parameters() {
  static const SelectedParameters sets{
      {"x1", "x3", "x12", "d1", "d3", "d4", "d5", "d6"},
      {"x1", "x2", "x3"},
  };
  return sets;
}

namespace {

// Extra column name for the given ear, with any _L/_R suffix folded.
struct ExtraColumn {
  std::string name;
  std::string left_key;
  std::string right_key;
};

std::vector<ExtraColumn> extra_columns(const std::vector<const AnthroParams*>& params) {
  std::set<std::string> keys;
  for (const auto* p : params) {
    for (const auto& [key, value] : p->extra) keys.insert(key);
  }
  std::vector<ExtraColumn> cols;
  std::set<std::string> merged;
  for (const auto& key : keys) {
    const bool sided = key.size() > 2 && (key.ends_with("_L") || key.ends_with("_R"));
    if (sided) {
      const std::string base = key.substr(0, key.size() - 2);
      if (merged.count(base) == 0 && keys.count(base + "_L") && keys.count(base + "_R")) {
        merged.insert(base);
        cols.push_back({base, base + "_L", base + "_R"});
        continue;
      }
      if (merged.count(base)) continue;
    }
    cols.push_back({key, key, key});
  }
  // Keep only columns every subject has.
  std::erase_if(cols, [&](const ExtraColumn& c) {
    return std::any_of(params.begin(), params.end(), [&](const AnthroParams* p) {
      return p->extra.count(c.left_key) == 0 || p->extra.count(c.right_key) == 0;
    });
  });
  return cols;
}

}  // namespace

AnthroTable build_anthro_table(const HrtfDataset& ds) {
  const auto ids = subjects_with_full_anthro(ds);
  std::vector<const AnthroParams*> params;
  for (const auto& id : ids) params.push_back(&*ds.subject(id).anthro);

  AnthroTable table;
  table.names = {"x1", "x2", "x3", "x12", "d1", "d3", "d4", "d5", "d6"};
  const auto extras = extra_columns(params);
  for (const auto& c : extras) table.names.push_back(c.name);

  table.values.resize(static_cast<Eigen::Index>(2 * ids.size()),
                      static_cast<Eigen::Index>(table.names.size()));
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const AnthroParams& a = *params[i];
    for (Ear ear : kBothEars) {
      table.observations.push_back({ids[i], ear});
      const PinnaParams& p = a.pinna(ear);
      const double fixed[] = {*a.x1, *a.x2, *a.x3, *a.x12, *p.d1, *p.d3, *p.d4, *p.d5, *p.d6};
      Eigen::Index col = 0;
      for (double v : fixed) table.values(row, col++) = v;
      for (const auto& c : extras) {
        table.values(row, col++) = a.extra.at(ear == Ear::kLeft ? c.left_key : c.right_key);
      }
      ++row;
    }
  }
  return table;
}

SelectionReport build_selection_report(const HrtfDataset& ds, const SelectionConfig& cfg) {
  if (cfg.direction_stride == 0) throw ValidationError("direction_stride must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const AnthroTable table = build_anthro_table(ds);
  const auto k = table.names.size();
  const std::size_t s = table.observations.size();
  if (s < k + 2) {
    throw ValidationError("select-anthro: " + std::to_string(s) + " complete observations for " +
                          std::to_string(k) + " parameters");
  }

  SelectionReport report;
  report.names = table.names;
  report.observation_count = s;
  report.pearson = pearson_matrix(table.values);
  report.selected = selected_parameters();
  const boost::math::students_t dist(static_cast<double>(s - k - 1));
  report.t_threshold = boost::math::quantile(boost::math::complement(dist, cfg.alpha / 2.0));

  std::vector<std::string> ids;
  for (std::size_t i = 0; i < s; i += 2) ids.push_back(table.observations[i].subject_id);
  const LogSpectraSet spectra = compute_log_spectra(ds, ids);

  std::vector<std::size_t> directions;
  for (std::size_t d = 0; d < ds.grid.size(); d += cfg.direction_stride) directions.push_back(d);

  std::vector<std::size_t> counts(k, 0);
  std::mutex mutex;
  parallel_for(
      directions.size(),
      [&](std::size_t i) {
        const std::size_t d = directions[i];
        Eigen::MatrixXd x(static_cast<Eigen::Index>(s), spectra.spectra.front().cols());
        for (std::size_t o = 0; o < s; ++o) {
          x.row(static_cast<Eigen::Index>(o)) = spectra.spectra[o].row(static_cast<Eigen::Index>(d));
        }
        const DirectionPcaModel model = fit_pca(x, cfg.pc_count);
        const Eigen::MatrixXd w = (x.rowwise() - model.mean.transpose()) * model.basis.transpose();
        const RegressionResult reg = regress_weights_on_anthro(w, table.values);
        std::vector<std::size_t> local(k, 0);
        for (Eigen::Index q = 0; q < w.cols(); ++q) {
          for (std::size_t j = 0; j < k; ++j) {
            if (std::abs(reg.t_stats(static_cast<Eigen::Index>(j + 1), q)) > report.t_threshold) {
              ++local[j];
            }
          }
        }
        std::lock_guard lock(mutex);
        for (std::size_t j = 0; j < k; ++j) counts[j] += local[j];
      },
      cfg.workers);
  report.significance_counts = counts;
  report.regression_count = directions.size() * cfg.pc_count;
  return report;
}

void write_selection_report(const SelectionReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["parameters"] = report.names;
  j["significance_counts"] = report.significance_counts;
  j["regression_count"] = report.regression_count;
  j["t_threshold"] = report.t_threshold;
  j["observation_count"] = report.observation_count;
  std::vector<std::size_t> order(report.names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.significance_counts[a] > report.significance_counts[b];
  });
  nlohmann::json ranked = nlohmann::json::array();
  for (std::size_t i : order) {
    ranked.push_back({{"parameter", report.names[i]}, {"count", report.significance_counts[i]}});
  }
  j["ranking"] = ranked;
  nlohmann::json matrix = nlohmann::json::array();
  for (Eigen::Index r = 0; r < report.pearson.rows(); ++r) {
    std::vector<double> row(report.pearson.cols());
    for (Eigen::Index c = 0; c < report.pearson.cols(); ++c) row[c] = report.pearson(r, c);
    matrix.push_back(row);
  }
  j["pearson_abs"] = matrix;
  j["selected"] = {{"spectral", report.selected.spectral}, {"itd", report.selected.itd}};
  write_text(dir / "report.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv.precision(17);
  csv << "parameter";
  for (const auto& n : report.names) csv << ',' << n;
  csv << '\n';
  for (Eigen::Index r = 0; r < report.pearson.rows(); ++r) {
    csv << report.names[r];
    for (Eigen::Index c = 0; c < report.pearson.cols(); ++c) csv << ',' << report.pearson(r, c);
    csv << '\n';
  }
  write_text(dir / "pearson.csv", csv.str());
}

}  // namespace hrtfkit
