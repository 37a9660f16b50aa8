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

#include "hrtfkit/predictors.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/dsp.hpp"
#include "hrtfkit/error.hpp"
#include "hrtfkit/parallel.hpp"
#include "hrtfkit/spectra.hpp"

namespace hrtfkit {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum class Family : std::uint64_t { kWeights = 1, kDvspc = 2, kHav = 3, kItd = 4 };

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t net_seed(std::uint64_t base, Family family, Hemisphere h, std::size_t index) {
  return splitmix64(base ^ splitmix64((static_cast<std::uint64_t>(family) << 40) ^
                                      (static_cast<std::uint64_t>(h) << 32) ^ index));
}

std::vector<std::size_t> layers_for(std::size_t in, const std::vector<std::size_t>& hidden,
                                    std::size_t out) {
  std::vector<std::size_t> layers = {in};
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(out);
  return layers;
}

MlpNetwork fit_net(const std::vector<std::size_t>& layers, std::uint64_t seed,
                   const SampleSet& train_set, const SampleSet& valid_set,
                   const TrainConfig& cfg, std::size_t* best_epoch) {
  MlpNetwork net(layers, seed);
  net.fit_statistics(train_set);
  TrainResult result = train(std::move(net), train_set, valid_set, cfg);
  if (best_epoch) *best_epoch = result.best_epoch;
  return std::move(result.net);
}

SampleSet make_set(std::size_t rows, std::size_t in, std::size_t out) {
  return {Eigen::MatrixXd(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in)),
          Eigen::MatrixXd(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out))};
}

SampleSet repeat_rows(const SampleSet& s, std::size_t times) {
  if (times <= 1) return s;
  SampleSet out = make_set(s.size() * times, s.inputs.cols(), s.targets.cols());
  for (std::size_t r = 0; r < s.size(); ++r) {
    for (std::size_t t = 0; t < times; ++t) {
      const auto row = static_cast<Eigen::Index>(r * times + t);
      out.inputs.row(row) = s.inputs.row(static_cast<Eigen::Index>(r));
      out.targets.row(row) = s.targets.row(static_cast<Eigen::Index>(r));
    }
  }
  return out;
}

const SpcaModel& hemisphere_model(const SpcaPair& spca, Hemisphere h) {
  const SpcaModel& m = spca.get(h);
  if (!m.hemisphere || *m.hemisphere != h) {
    throw ValidationError(std::string("SPCA model for the ") + hemisphere_name(h) +
                          " hemisphere is missing or mislabeled");
  }
  return m;
}

// Direction-model training set of one hemisphere: rows = grid directions,
// inputs = [reference features, az, el], targets from `target_of(column)`.
template <typename TargetFn>
SampleSet direction_set(const DirectionGrid& grid, const SpcaModel& model,
                        const std::vector<std::size_t>& directions,
                        const Eigen::VectorXd& reference, std::size_t out, TargetFn target_of) {
  const auto ref_len = static_cast<std::size_t>(reference.size());
  SampleSet s = make_set(directions.size(), ref_len + 2, out);
  for (std::size_t r = 0; r < directions.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    const Direction d = grid.at(directions[r]);
    s.inputs.row(row).head(static_cast<Eigen::Index>(ref_len)) = reference.transpose();
    s.inputs(row, static_cast<Eigen::Index>(ref_len)) = d.azimuth_deg;
    s.inputs(row, static_cast<Eigen::Index>(ref_len + 1)) = d.elevation_deg;
    s.targets.row(row) = target_of(*model.column_of(directions[r])).transpose();
  }
  return s;
}

void require_grid_match(const HrtfDataset& ds, const SpcaModel& model) {
  for (std::size_t idx : model.direction_indices) {
    if (idx >= ds.grid.size()) {
      throw ValidationError("SPCA model direction index " + std::to_string(idx) +
                            " exceeds the dataset grid");
    }
  }
}

}  // namespace

SpcaPair fit_spca_pair(const HrtfDataset& ds, std::size_t q) {
  const LogSpectraSet spectra = ear_aligned(compute_log_spectra(ds), ds.grid);
  const Eigen::VectorXd mu = compute_global_mean(spectra);
  SpcaPair pair;
  for (Hemisphere h : kBothHemispheres) {
    pair.models[static_cast<int>(h)] = fit_hemisphere(spectra, mu, ds.grid, h, q).model;
  }
  return pair;
}

SubjectSplit make_subject_split(const HrtfDataset& ds) {
  if (ds.training_subjects.empty()) throw ValidationError("manifest lists no training subjects");
  if (ds.test_subjects.empty()) throw ValidationError("manifest lists no test subjects");
  std::vector<Observation> all;
  for (const auto& id : ds.training_subjects) {
    for (Ear ear : kBothEars) all.push_back({id, ear});
  }
  const std::size_t n_valid = all.size() / 6;
  SubjectSplit split;
  split.train.assign(all.begin(), all.end() - static_cast<std::ptrdiff_t>(n_valid));
  split.valid.assign(all.end() - static_cast<std::ptrdiff_t>(n_valid), all.end());
  for (const auto& id : ds.test_subjects) {
    for (Ear ear : kBothEars) split.test.push_back({id, ear});
  }
  return split;
}

DirectionSplit make_direction_split(const SpcaModel& model) {
  const SplitPlan plan = make_split(model.direction_count());
  DirectionSplit split;
  for (std::size_t i : plan.train_idx) split.train.push_back(model.direction_indices[i]);
  for (std::size_t i : plan.valid_idx) split.valid.push_back(model.direction_indices[i]);
  for (std::size_t i : plan.test_idx) split.test.push_back(model.direction_indices[i]);
  return split;
}

Eigen::MatrixXd spca_weights(const SubjectRecord& subject, Ear ear, const SpcaModel& model,
                             const DirectionGrid& grid) {
  const Eigen::MatrixXd spectra = ear_aligned(log_spectra(subject, ear), ear, grid);
  if (model.mu.size() != spectra.cols()) {
    throw ValidationError("SPCA model mean spectrum has " + std::to_string(model.mu.size()) +
                          " bins, HRTFs have " + std::to_string(spectra.cols()));
  }
  Eigen::MatrixXd rows(spectra.cols(), static_cast<Eigen::Index>(model.direction_count()));
  for (std::size_t c = 0; c < model.direction_count(); ++c) {
    const auto idx = static_cast<Eigen::Index>(model.direction_indices[c]);
    if (idx >= spectra.rows()) throw ValidationError("SPCA direction index outside the grid");
    rows.col(static_cast<Eigen::Index>(c)) = spectra.row(idx).transpose() - model.mu;
  }
  return project(model, rows);
}

std::vector<double> subject_itds(const SubjectRecord& subject, double sample_rate) {
  if (subject.itd_ms) return *subject.itd_ms;
  const auto d = static_cast<std::size_t>(subject.hrir_left.rows());
  std::vector<double> itds(d);
  for (std::size_t i = 0; i < d; ++i) {
    try {
      itds[i] = dsp::extract_itd(subject.hrir(Ear::kLeft, i), subject.hrir(Ear::kRight, i),
                                 sample_rate);
    } catch (const Error& e) {
      throw ValidationError("subject " + subject.subject_id + ", direction " + std::to_string(i) +
                            ": " + e.what());
    }
  }
  return itds;
}

WeightPredictor train_weight_nets(const HrtfDataset& ds, const SpcaModel& model,
                                  const PredictorConfig& cfg, TrainingReport* report) {
  if (!model.hemisphere) throw ValidationError("weight networks need a hemisphere SPCA model");
  require_grid_match(ds, model);
  const Hemisphere h = *model.hemisphere;
  const SubjectSplit split = make_subject_split(ds);
  const std::size_t q = model.q();

  auto gather = [&](const std::vector<Observation>& obs, std::vector<std::array<double, 8>>& x,
                    std::vector<Eigen::MatrixXd>& w) {
    for (const auto& o : obs) {
      const auto& s = ds.subject(o.subject_id);
      if (!s.anthro) throw ValidationError("subject " + o.subject_id + " has no anthropometry");
      x.push_back(s.anthro->spectral_inputs(o.ear));
      w.push_back(spca_weights(s, o.ear, model, ds.grid));
    }
  };
  std::vector<std::array<double, 8>> x_train, x_valid;
  std::vector<Eigen::MatrixXd> w_train, w_valid;
  gather(split.train, x_train, w_train);
  gather(split.valid, x_valid, w_valid);

  auto bin_set = [&](const std::vector<std::array<double, 8>>& x,
                     const std::vector<Eigen::MatrixXd>& w, std::size_t k) {
    SampleSet s = make_set(x.size(), 8, q);
    for (std::size_t r = 0; r < x.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      for (int c = 0; c < 8; ++c) s.inputs(row, c) = x[r][c];
      s.targets.row(row) = w[r].row(static_cast<Eigen::Index>(k));
    }
    return s;
  };

  WeightPredictor wp;
  wp.hemisphere = h;
  wp.nets.resize(kUniqueBins);
  std::vector<std::size_t> best(kUniqueBins, 0);
  const auto layers = layers_for(8, cfg.weights.hidden, q);
  parallel_for(
      kUniqueBins,
      [&](std::size_t k) {
        wp.nets[k] = fit_net(layers, net_seed(cfg.seed, Family::kWeights, h, k),
                             bin_set(x_train, w_train, k), bin_set(x_valid, w_valid, k),
                             cfg.weights.train, &best[k]);
      },
      cfg.workers);

  if (report) {
    report->family = std::string("weights_") + hemisphere_name(h);
    report->train_samples = x_train.size();
    report->valid_samples = x_valid.size();
    report->test_samples = split.test.size();
    report->best_epochs = best;
    double sum = 0.0;
    for (const auto& o : split.test) {
      const auto& s = ds.subject(o.subject_id);
      if (!s.anthro) throw ValidationError("subject " + o.subject_id + " has no anthropometry");
      const Eigen::MatrixXd pred = predict_weights(wp, s.anthro->spectral_inputs(o.ear));
      sum += (pred - spca_weights(s, o.ear, model, ds.grid)).squaredNorm() / static_cast<double>(pred.size());
    }
    report->test_error = sum / static_cast<double>(split.test.size());
  }
  return wp;
}

DvspcPredictor train_dvspc_nets(const HrtfDataset& ds, const SpcaPair& spca,
                                const PredictorConfig& cfg, TrainingReport* report) {
  DvspcPredictor pred;
  std::array<std::size_t, 2> best{};
  std::array<std::size_t, 2> counts_train{}, counts_valid{};
  const std::size_t repeat = cfg.duplicate_direction_samples ? 2 : 1;
  for (Hemisphere h : kBothHemispheres) {
    const auto& m = hemisphere_model(spca, h);
    require_grid_match(ds, m);
    pred.reference[static_cast<int>(h)] = m.dv_spc(m.reference_column);
  }
  parallel_for(
      2,
      [&](std::size_t hi) {
        const auto h = static_cast<Hemisphere>(hi);
        const SpcaModel& m = spca.get(h);
        const DirectionSplit split = make_direction_split(m);
        auto target = [&](std::size_t col) { return m.dv_spc(col); };
        const SampleSet tr =
            repeat_rows(direction_set(ds.grid, m, split.train, pred.reference[hi], m.q(), target), repeat);
        const SampleSet va =
            repeat_rows(direction_set(ds.grid, m, split.valid, pred.reference[hi], m.q(), target), repeat);
        counts_train[hi] = tr.size();
        counts_valid[hi] = va.size();
        pred.nets[hi] = fit_net(layers_for(m.q() + 2, cfg.dvspc.hidden, m.q()),
                                net_seed(cfg.seed, Family::kDvspc, h, 0), tr, va,
                                cfg.dvspc.train, &best[hi]);
      },
      cfg.workers);
  if (report) {
    PredictorBundle tmp;
    tmp.grid = ds.grid;
    tmp.spca = spca;
    tmp.dvspc = pred;
    report->family = "dvspc";
    report->train_samples = counts_train[0] + counts_train[1];
    report->valid_samples = counts_valid[0] + counts_valid[1];
    report->test_samples = make_direction_split(spca.get(Hemisphere::kFront)).test.size() +
                           make_direction_split(spca.get(Hemisphere::kRear)).test.size();
    report->best_epochs = {best[0], best[1]};
    report->test_error = dvspc_error(ds.grid, spca, bundle_functions(tmp));
  }
  return pred;
}

HavPredictor train_hav_nets(const HrtfDataset& ds, const SpcaPair& spca,
                            const PredictorConfig& cfg, TrainingReport* report) {
  HavPredictor pred;
  std::array<std::size_t, 2> best{};
  std::array<std::size_t, 2> counts_train{}, counts_valid{};
  const std::size_t repeat = cfg.duplicate_direction_samples ? 2 : 1;
  for (Hemisphere h : kBothHemispheres) {
    const auto& m = hemisphere_model(spca, h);
    require_grid_match(ds, m);
    pred.reference[static_cast<int>(h)] = m.h_av(static_cast<Eigen::Index>(m.reference_column));
  }
  parallel_for(
      2,
      [&](std::size_t hi) {
        const auto h = static_cast<Hemisphere>(hi);
        const SpcaModel& m = spca.get(h);
        const DirectionSplit split = make_direction_split(m);
        const Eigen::VectorXd ref = Eigen::VectorXd::Constant(1, pred.reference[hi]);
        auto target = [&](std::size_t col) {
          return Eigen::VectorXd::Constant(1, m.h_av(static_cast<Eigen::Index>(col)));
        };
        const SampleSet tr = repeat_rows(direction_set(ds.grid, m, split.train, ref, 1, target), repeat);
        const SampleSet va = repeat_rows(direction_set(ds.grid, m, split.valid, ref, 1, target), repeat);
        counts_train[hi] = tr.size();
        counts_valid[hi] = va.size();
        pred.nets[hi] = fit_net(layers_for(3, cfg.hav.hidden, 1),
                                net_seed(cfg.seed, Family::kHav, h, 0), tr, va, cfg.hav.train,
                                &best[hi]);
      },
      cfg.workers);
  if (report) {
    PredictorBundle tmp;
    tmp.grid = ds.grid;
    tmp.spca = spca;
    tmp.hav = pred;
    report->family = "hav";
    report->train_samples = counts_train[0] + counts_train[1];
    report->valid_samples = counts_valid[0] + counts_valid[1];
    report->test_samples = make_direction_split(spca.get(Hemisphere::kFront)).test.size() +
                           make_direction_split(spca.get(Hemisphere::kRear)).test.size();
    report->best_epochs = {best[0], best[1]};
    report->test_error = hav_error(ds.grid, spca, bundle_functions(tmp));
  }
  return pred;
}

ItdPredictor train_itd_nets(const HrtfDataset& ds, const SpcaPair& spca,
                            const PredictorConfig& cfg, TrainingReport* report) {
  if (ds.training_subjects.empty()) throw ValidationError("manifest lists no training subjects");
  std::vector<std::array<double, 3>> heads;
  std::vector<std::vector<double>> itds;
  for (const auto& id : ds.training_subjects) {
    const auto& s = ds.subject(id);
    if (!s.anthro) throw ValidationError("subject " + id + " has no anthropometry");
    heads.push_back(s.anthro->itd_inputs());
    itds.push_back(subject_itds(s, ds.sample_rate));
  }
  auto build = [&](const std::vector<std::size_t>& dirs) {
    SampleSet s = make_set(heads.size() * dirs.size(), 5, 1);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < heads.size(); ++i) {
      for (std::size_t d : dirs) {
        const Direction dir = ds.grid.at(d);
        s.inputs.row(row) << heads[i][0], heads[i][1], heads[i][2], dir.azimuth_deg,
            dir.elevation_deg;
        s.targets(row, 0) = itds[i][d];
        ++row;
      }
    }
    return s;
  };

  ItdPredictor pred;
  std::array<std::size_t, 2> best{};
  std::array<std::size_t, 2> counts_train{}, counts_valid{};
  for (Hemisphere h : kBothHemispheres) require_grid_match(ds, hemisphere_model(spca, h));
  parallel_for(
      2,
      [&](std::size_t hi) {
        const auto h = static_cast<Hemisphere>(hi);
        const DirectionSplit split = make_direction_split(spca.get(h));
        const SampleSet tr = build(split.train);
        const SampleSet va = build(split.valid);
        counts_train[hi] = tr.size();
        counts_valid[hi] = va.size();
        pred.nets[hi] = fit_net(layers_for(5, cfg.itd.hidden, 1),
                                net_seed(cfg.seed, Family::kItd, h, 0), tr, va, cfg.itd.train,
                                &best[hi]);
      },
      cfg.workers);
  if (report) {
    PredictorBundle tmp;
    tmp.grid = ds.grid;
    tmp.spca = spca;
    tmp.itd = pred;
    report->family = "itd";
    report->train_samples = counts_train[0] + counts_train[1];
    report->valid_samples = counts_valid[0] + counts_valid[1];
    report->test_samples = ds.test_subjects.size() *
                           (make_direction_split(spca.get(Hemisphere::kFront)).test.size() +
                            make_direction_split(spca.get(Hemisphere::kRear)).test.size());
    report->best_epochs = {best[0], best[1]};
    report->test_error = itd_error(ds, spca, bundle_functions(tmp));
  }
  return pred;
}

Eigen::MatrixXd predict_weights(const WeightPredictor& wp, const std::array<double, 8>& anthro) {
  if (wp.nets.size() != kUniqueBins) {
    throw ValidationError("weight predictor has " + std::to_string(wp.nets.size()) +
                          " networks, expected " + std::to_string(kUniqueBins));
  }
  for (double v : anthro) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("anthropometric inputs must be positive and finite");
    }
  }
  const std::size_t n = 2 * (kUniqueBins - 1);
  const auto q = static_cast<Eigen::Index>(wp.nets.front().output_size());
  Eigen::MatrixXd w(static_cast<Eigen::Index>(n), q);
  const Eigen::Map<const Eigen::VectorXd> x(anthro.data(), 8);
  for (std::size_t k = 0; k < kUniqueBins; ++k) {
    w.row(static_cast<Eigen::Index>(k)) = wp.nets[k].forward(x).transpose();
  }
  for (std::size_t k = kUniqueBins; k < n; ++k) {
    w.row(static_cast<Eigen::Index>(k)) = w.row(static_cast<Eigen::Index>(n - k));
  }
  return w;
}

void check_direction_range(double azimuth_deg, double elevation_deg) {
  if (!std::isfinite(azimuth_deg) || azimuth_deg < -90.0 || azimuth_deg > 90.0) {
    throw ValidationError("azimuth " + std::to_string(azimuth_deg) + " outside [-90, 90]");
  }
  if (!std::isfinite(elevation_deg) || elevation_deg < -90.0 || elevation_deg >= 270.0) {
    throw ValidationError("elevation " + std::to_string(elevation_deg) + " outside [-90, 270)");
  }
}

std::size_t PredictorBundle::q() const {
  if (!spca) throw ValidationError("bundle has no SPCA models");
  return spca->q();
}

const Eigen::VectorXd& PredictorBundle::mu() const {
  if (!spca) throw ValidationError("bundle has no SPCA models");
  return spca->get(Hemisphere::kFront).mu;
}

void PredictorBundle::require_spca_models() const {
  if (!spca) throw ValidationError("bundle has no SPCA models; run fit-spca first");
}

void PredictorBundle::validate() const {
  if (format_version != kBundleFormatVersion) {
    throw ValidationError("unsupported bundle format_version " + std::to_string(format_version));
  }
  if (!spca) {
    if (weights || dvspc || hav) throw ValidationError("bundle has predictors but no SPCA models");
    return;
  }
  const std::size_t qq = spca->q();
  for (Hemisphere h : kBothHemispheres) {
    const SpcaModel& m = hemisphere_model(*spca, h);
    if (m.q() != qq) throw ValidationError("front and rear SPCA models disagree on Q");
    if (m.mu.size() != spca->get(Hemisphere::kFront).mu.size()) {
      throw ValidationError("front and rear SPCA models disagree on the mean spectrum");
    }
    if (m.direction_indices[m.reference_column] != reference_direction(grid, h)) {
      throw ValidationError(std::string("SPCA ") + hemisphere_name(h) +
                            " reference column is not the hemisphere reference direction");
    }
  }
  auto close = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && (a - b).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, b.cwiseAbs().maxCoeff());
  };
  for (Hemisphere h : kBothHemispheres) {
    const int hi = static_cast<int>(h);
    const SpcaModel& m = spca->get(h);
    if (weights) {
      const auto& wp = (*weights)[hi];
      if (wp.hemisphere != h || wp.nets.size() != kUniqueBins) {
        throw ValidationError(std::string("malformed ") + hemisphere_name(h) + " weight predictor");
      }
      for (const auto& net : wp.nets) {
        if (net.input_size() != 8 || net.output_size() != qq) {
          throw ValidationError("weight network shape does not match Q=" + std::to_string(qq));
        }
      }
    }
    if (dvspc) {
      const auto& net = dvspc->nets[hi];
      if (net.input_size() != qq + 2 || net.output_size() != qq) {
        throw ValidationError("DV-SPC network shape does not match Q=" + std::to_string(qq));
      }
      if (!close(dvspc->reference[hi], m.dv_spc(m.reference_column))) {
        throw ValidationError("DV-SPC reference vector disagrees with the SPCA model");
      }
    }
    if (hav) {
      if (hav->nets[hi].input_size() != 3 || hav->nets[hi].output_size() != 1) {
        throw ValidationError("malformed H_av network");
      }
      const double ref = m.h_av(static_cast<Eigen::Index>(m.reference_column));
      if (std::abs(hav->reference[hi] - ref) > 1e-5 * std::max(1.0, std::abs(ref))) {
        throw ValidationError("H_av reference value disagrees with the SPCA model");
      }
    }
    if (itd && (itd->nets[hi].input_size() != 5 || itd->nets[hi].output_size() != 1)) {
      throw ValidationError("malformed ITD network");
    }
  }
}

PredictorBundle make_bundle(const HrtfDataset& ds, std::uint64_t seed) {
  PredictorBundle b;
  b.grid = ds.grid;
  b.sample_rate = ds.sample_rate;
  b.hrir_length = ds.hrir_length;
  b.seed = seed;
  b.training_subjects = ds.training_subjects;
  b.test_subjects = ds.test_subjects;
  b.generic_subject_id = ds.generic_subject_id;
  if (const auto* g = ds.find_subject(ds.generic_subject_id)) {
    b.generic_left = g->hrir_left;
    b.generic_right = g->hrir_right;
  }
  return b;
}

DirectionParams predict_direction_params(const PredictorBundle& bundle, double azimuth_deg,
                                         double elevation_deg) {
  check_direction_range(azimuth_deg, elevation_deg);
  if (!bundle.dvspc) throw ValidationError("bundle has no DV-SPC networks; run train dvspc");
  if (!bundle.hav) throw ValidationError("bundle has no H_av networks; run train hav");
  DirectionParams p;
  p.hemisphere = hemisphere_of(elevation_deg);
  const int hi = static_cast<int>(p.hemisphere);
  const Eigen::VectorXd& ref = bundle.dvspc->reference[hi];
  Eigen::VectorXd x(ref.size() + 2);
  x << ref, azimuth_deg, elevation_deg;
  p.dv_spc = bundle.dvspc->nets[hi].forward(x);
  const Eigen::Vector3d xh(bundle.hav->reference[hi], azimuth_deg, elevation_deg);
  p.h_av = bundle.hav->nets[hi].forward(xh)(0);
  return p;
}

double predict_itd(const PredictorBundle& bundle, const AnthroParams& anthro,
                   double azimuth_deg, double elevation_deg) {
  check_direction_range(azimuth_deg, elevation_deg);
  if (!bundle.itd) throw ValidationError("bundle has no ITD networks; run train itd");
  const auto head = anthro.itd_inputs();
  Eigen::VectorXd x(5);
  x << head[0], head[1], head[2], azimuth_deg, elevation_deg;
  return bundle.itd->nets[static_cast<int>(hemisphere_of(elevation_deg))].forward(x)(0);
}

PredictorFunctions bundle_functions(const PredictorBundle& bundle) {
  PredictorFunctions f;
  const PredictorBundle* b = &bundle;
  if (bundle.weights) {
    f.weights = [b](Hemisphere h, const std::array<double, 8>& x) {
      return predict_weights((*b->weights)[static_cast<int>(h)], x);
    };
  }
  if (bundle.dvspc) {
    f.dvspc = [b](Hemisphere h, double az, double el) {
      const int hi = static_cast<int>(h);
      const Eigen::VectorXd& ref = b->dvspc->reference[hi];
      Eigen::VectorXd x(ref.size() + 2);
      x << ref, az, el;
      return b->dvspc->nets[hi].forward(x);
    };
  }
  if (bundle.hav) {
    f.hav = [b](Hemisphere h, double az, double el) {
      const int hi = static_cast<int>(h);
      return b->hav->nets[hi].forward(Eigen::Vector3d(b->hav->reference[hi], az, el))(0);
    };
  }
  if (bundle.itd) {
    f.itd = [b](const std::array<double, 3>& head, double az, double el) {
      Eigen::VectorXd x(5);
      x << head[0], head[1], head[2], az, el;
      return b->itd->nets[static_cast<int>(hemisphere_of(el))].forward(x)(0);
    };
  }
  return f;
}

double weight_error(const HrtfDataset& ds, const SpcaPair& spca, const PredictorFunctions& fns) {
  if (!fns.weights) throw ValidationError("no weight predictor available");
  const SubjectSplit split = make_subject_split(ds);
  double total = 0.0;
  for (Hemisphere h : kBothHemispheres) {
    const SpcaModel& m = hemisphere_model(spca, h);
    double sum = 0.0;
    for (const auto& o : split.test) {
      const auto& s = ds.subject(o.subject_id);
      if (!s.anthro) throw ValidationError("subject " + o.subject_id + " has no anthropometry");
      const Eigen::MatrixXd truth = spca_weights(s, o.ear, m, ds.grid);
      const Eigen::MatrixXd pred = fns.weights(h, s.anthro->spectral_inputs(o.ear));
      if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
        throw ValidationError("predicted weight matrix has the wrong shape");
      }
      sum += (pred - truth).squaredNorm() / static_cast<double>(truth.size());
    }
    total += sum / static_cast<double>(split.test.size());
  }
  return total / 2.0;
}

double dvspc_error(const DirectionGrid& grid, const SpcaPair& spca, const PredictorFunctions& fns) {
  if (!fns.dvspc) throw ValidationError("no DV-SPC predictor available");
  double sum = 0.0;
  std::size_t count = 0;
  for (Hemisphere h : kBothHemispheres) {
    const SpcaModel& m = hemisphere_model(spca, h);
    for (std::size_t d : make_direction_split(m).test) {
      const Direction dir = grid.at(d);
      sum += (fns.dvspc(h, dir.azimuth_deg, dir.elevation_deg) - m.dv_spc(*m.column_of(d))).squaredNorm();
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double hav_error(const DirectionGrid& grid, const SpcaPair& spca, const PredictorFunctions& fns) {
  if (!fns.hav) throw ValidationError("no H_av predictor available");
  double sum = 0.0;
  std::size_t count = 0;
  for (Hemisphere h : kBothHemispheres) {
    const SpcaModel& m = hemisphere_model(spca, h);
    for (std::size_t d : make_direction_split(m).test) {
      const Direction dir = grid.at(d);
      const double e = fns.hav(h, dir.azimuth_deg, dir.elevation_deg) -
                       m.h_av(static_cast<Eigen::Index>(*m.column_of(d)));
      sum += e * e;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double itd_error(const HrtfDataset& ds, const SpcaPair& spca, const PredictorFunctions& fns) {
  if (!fns.itd) throw ValidationError("no ITD predictor available");
  if (ds.test_subjects.empty()) throw ValidationError("manifest lists no test subjects");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& id : ds.test_subjects) {
    const auto& s = ds.subject(id);
    if (!s.anthro) throw ValidationError("subject " + id + " has no anthropometry");
    const auto head = s.anthro->itd_inputs();
    const auto truth = subject_itds(s, ds.sample_rate);
    for (Hemisphere h : kBothHemispheres) {
      for (std::size_t d : make_direction_split(hemisphere_model(spca, h)).test) {
        const Direction dir = ds.grid.at(d);
        sum += std::abs(fns.itd(head, dir.azimuth_deg, dir.elevation_deg) - truth[d]);
        ++count;
      }
    }
  }
  return sum / static_cast<double>(count);
}

namespace {

std::string net_file(const char* family, Hemisphere h) {
  return std::string(family) + "_" + hemisphere_name(h) + ".json";
}

std::string weight_net_file(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "net_%03zu.json", k);
  return buf;
}

json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_bundle(const PredictorBundle& bundle, const fs::path& dir) {
  bundle.validate();
  fs::create_directories(dir);
  json meta;
  meta["format_version"] = bundle.format_version;
  meta["q"] = bundle.spca ? json(bundle.spca->q()) : json(nullptr);
  meta["sample_rate"] = bundle.sample_rate;
  meta["hrir_length"] = bundle.hrir_length;
  meta["azimuths_deg"] = bundle.grid.azimuths_deg();
  meta["elevations_deg"] = bundle.grid.elevations_deg();
  meta["seed"] = bundle.seed;
  meta["splits"] = {{"training_subjects", bundle.training_subjects},
                    {"test_subjects", bundle.test_subjects}};
  meta["generic_subject_id"] = bundle.generic_subject_id;
  meta["mu"] = bundle.spca ? vector_json(bundle.mu()) : json(nullptr);
  json members;
  members["spca"] = bundle.spca.has_value();
  members["weights"] = bundle.weights.has_value();
  members["dvspc"] = bundle.dvspc.has_value();
  members["hav"] = bundle.hav.has_value();
  members["itd"] = bundle.itd.has_value();
  members["baseline"] = bundle.baseline.has_value();
  members["generic"] = bundle.generic_left.has_value() && bundle.generic_right.has_value();
  meta["members"] = members;

  for (Hemisphere h : kBothHemispheres) {
    const int hi = static_cast<int>(h);
    const std::string hn = hemisphere_name(h);
    if (bundle.spca) save_spca_model(bundle.spca->get(h), dir / ("spca_" + hn));
    if (bundle.weights) {
      const fs::path wdir = dir / ("weights_" + hn);
      fs::create_directories(wdir);
      for (std::size_t k = 0; k < kUniqueBins; ++k) {
        save_mlp((*bundle.weights)[hi].nets[k], wdir / weight_net_file(k));
      }
    }
    if (bundle.dvspc) {
      save_mlp(bundle.dvspc->nets[hi], dir / net_file("dvspc", h));
      meta["dvspc_reference"][hn] = vector_json(bundle.dvspc->reference[hi]);
    }
    if (bundle.hav) {
      save_mlp(bundle.hav->nets[hi], dir / net_file("hav", h));
      meta["hav_reference"][hn] = bundle.hav->reference[hi];
    }
    if (bundle.itd) save_mlp(bundle.itd->nets[hi], dir / net_file("itd", h));
  }
  if (bundle.baseline) save_pca_baseline(*bundle.baseline, dir / "baseline");
  if (members["generic"].get<bool>()) {
    fs::create_directories(dir / "generic");
    write_f32(dir / "generic" / "left.f32",
              {bundle.generic_left->data(), static_cast<std::size_t>(bundle.generic_left->size())});
    write_f32(dir / "generic" / "right.f32",
              {bundle.generic_right->data(), static_cast<std::size_t>(bundle.generic_right->size())});
  }
  write_text(dir / "bundle.json", meta.dump(1) + "\n");
}

PredictorBundle load_bundle(const fs::path& dir) {
  const fs::path manifest = dir / "bundle.json";
  if (!fs::exists(manifest)) throw ValidationError("no bundle at " + dir.string() + " (missing bundle.json)");
  json meta;
  try {
    meta = json::parse(read_text(manifest));
  } catch (const json::parse_error& e) {
    throw ValidationError(manifest.string() + ": " + e.what());
  }
  PredictorBundle b;
  try {
    b.format_version = meta.at("format_version").get<int>();
    if (b.format_version != kBundleFormatVersion) {
      throw ValidationError(manifest.string() + ": unsupported format_version " +
                            std::to_string(b.format_version));
    }
    b.sample_rate = meta.at("sample_rate").get<double>();
    b.hrir_length = meta.at("hrir_length").get<std::size_t>();
    b.grid = DirectionGrid(meta.at("azimuths_deg").get<std::vector<double>>(),
                           meta.at("elevations_deg").get<std::vector<double>>());
    b.seed = meta.at("seed").get<std::uint64_t>();
    b.training_subjects = meta.at("splits").at("training_subjects").get<std::vector<std::string>>();
    b.test_subjects = meta.at("splits").at("test_subjects").get<std::vector<std::string>>();
    b.generic_subject_id = meta.value("generic_subject_id", std::string{});
    const json& members = meta.at("members");

    if (members.at("spca").get<bool>()) {
      SpcaPair pair;
      for (Hemisphere h : kBothHemispheres) {
        pair.models[static_cast<int>(h)] = load_spca_model(dir / (std::string("spca_") + hemisphere_name(h)));
      }
      b.spca = std::move(pair);
    }
    if (members.at("weights").get<bool>()) {
      std::array<WeightPredictor, 2> wps;
      for (Hemisphere h : kBothHemispheres) {
        auto& wp = wps[static_cast<int>(h)];
        wp.hemisphere = h;
        for (std::size_t k = 0; k < kUniqueBins; ++k) {
          wp.nets.push_back(load_mlp(dir / (std::string("weights_") + hemisphere_name(h)) / weight_net_file(k)));
        }
      }
      b.weights = std::move(wps);
    }
    if (members.at("dvspc").get<bool>()) {
      DvspcPredictor p;
      for (Hemisphere h : kBothHemispheres) {
        p.nets[static_cast<int>(h)] = load_mlp(dir / net_file("dvspc", h));
        p.reference[static_cast<int>(h)] = json_vector(meta.at("dvspc_reference").at(hemisphere_name(h)));
      }
      b.dvspc = std::move(p);
    }
    if (members.at("hav").get<bool>()) {
      HavPredictor p;
      for (Hemisphere h : kBothHemispheres) {
        p.nets[static_cast<int>(h)] = load_mlp(dir / net_file("hav", h));
        p.reference[static_cast<int>(h)] = meta.at("hav_reference").at(hemisphere_name(h)).get<double>();
      }
      b.hav = std::move(p);
    }
    if (members.at("itd").get<bool>()) {
      ItdPredictor p;
      for (Hemisphere h : kBothHemispheres) p.nets[static_cast<int>(h)] = load_mlp(dir / net_file("itd", h));
      b.itd = std::move(p);
    }
    if (members.at("baseline").get<bool>()) b.baseline = load_pca_baseline(dir / "baseline");
    if (members.value("generic", false)) {
      const auto rows = static_cast<Eigen::Index>(b.grid.size());
      const auto cols = static_cast<Eigen::Index>(b.hrir_length);
      const std::size_t count = b.grid.size() * b.hrir_length;
      const auto left = read_f32(dir / "generic" / "left.f32", count);
      const auto right = read_f32(dir / "generic" / "right.f32", count);
      b.generic_left = Eigen::Map<const HrirMatrix>(left.data(), rows, cols);
      b.generic_right = Eigen::Map<const HrirMatrix>(right.data(), rows, cols);
    }
  } catch (const json::exception& e) {
    throw ValidationError(manifest.string() + ": " + e.what());
  }
  b.validate();
  return b;
}

}  // namespace hrtfkit
