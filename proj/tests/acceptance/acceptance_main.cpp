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

// Acceptance run: one PASS / FAIL / SKIP line per criterion.
//
// Default mode uses the synthetic CIPIC-shaped dataset from the test support
// library. With --reference the dataset is read from the directory named by
// HRTFKIT_REFERENCE_DATASET (exit code 77 when it is unset), and the numeric
// bands tied to the measured database are checked.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "hrtfkit/dataset.hpp"
#include "hrtfkit/dsp.hpp"
#include "hrtfkit/evaluation.hpp"
#include "hrtfkit/mlp.hpp"
#include "hrtfkit/pca_baseline.hpp"
#include "hrtfkit/predictors.hpp"
#include "hrtfkit/spca.hpp"
#include "hrtfkit/spectra.hpp"
#include "synthetic_cipic.hpp"

namespace hrtfkit {
namespace {

enum class Status { kPass, kFail, kSoftFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

class Report {
 public:
  void add(int id, const std::string& title, const Outcome& o, double seconds) {
    const char* tag = o.status == Status::kPass       ? "PASS"
                      : o.status == Status::kFail     ? "FAIL"
                      : o.status == Status::kSoftFail ? "FAIL (soft)"
                                                      : "SKIP";
    std::cout << tag << "  criterion " << id << ": " << title << " | " << o.detail << " [" << std::fixed
              << std::setprecision(1) << seconds << " s]" << std::endl;
    if (o.status == Status::kFail) ++failures_;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

template <typename F>
void run_criterion(Report& report, int id, const std::string& title, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {Status::kFail, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.add(id, title, o, s);
}

Outcome pass_if(bool ok, std::string detail) { return {ok ? Status::kPass : Status::kFail, std::move(detail)}; }

// 1. Full-rank SPCA reproduces the stacked log spectra.
Outcome spca_exactness(const HrtfDataset& ds) {
  const LogSpectraSet spectra = ear_aligned(compute_log_spectra(ds), ds.grid);
  const Eigen::VectorXd mu = compute_global_mean(spectra);
  const HemispherePartition part = partition_hemispheres(ds.grid);
  double worst = 0.0;
  for (Hemisphere h : kBothHemispheres) {
    const std::size_t d_h = part.indices(h).size();
    const SpcaFit fit = fit_hemisphere(spectra, mu, ds.grid, h, d_h);
    const Eigen::MatrixXd rows = stack_spatial_rows(spectra, mu, fit.model.direction_indices);
    worst = std::max(worst, (reconstruct(fit.model, fit.weights) - rows).cwiseAbs().maxCoeff());
  }
  return pass_if(worst < 1e-6, "max |error| " + num(worst, 3) + " dB at Q = D_h (limit 1e-6)");
}

// 2. Per-ear cumulative variance against the published table.
Outcome variance_table_check(const HrtfDataset& ds, bool reference) {
  static const std::vector<std::size_t> q = {1, 5, 10, 20, 50, 60, 80, 100, 200, 500};
  static const double left[] = {16.54, 52.20, 62.29, 70.10, 78.33, 80.09, 82.93, 85.11, 91.03, 97.07};
  static const double right[] = {20.14, 55.33, 64.84, 71.85, 79.54, 81.22, 83.98, 86.09, 91.56, 97.22};
  const VarianceReport r = variance_report(ds, q);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    worst = std::max({worst, std::abs(r.left[i] - left[i]), std::abs(r.right[i] - right[i])});
  }
  std::string detail = "Q=1 " + num(r.left[0]) + "/" + num(r.right[0]) + "%, Q=200 " + num(r.left[8]) + "/" +
                       num(r.right[8]) + "%, max deviation " + num(worst, 3) + " points (limit 1.5)";
  if (!reference) return {Status::kSkip, "needs the measured database; synthetic " + detail};
  return pass_if(worst <= 1.5, detail);
}

// 3. Mean variance captured by 12 per-direction PCs.
Outcome pca_variance_check(const HrtfDataset& ds, bool reference) {
  const LogSpectraSet spectra = compute_log_spectra(ds);
  const PcaBaseline b = fit_pca_baseline(spectra, ds.grid, kDefaultPcCount, 0);
  const double l = mean_pca_variance(b, Ear::kLeft, kDefaultPcCount);
  const double r = mean_pca_variance(b, Ear::kRight, kDefaultPcCount);
  const double worst = std::max(std::abs(l - 92.02), std::abs(r - 91.71));
  std::string detail = "12 PCs: left " + num(l) + "%, right " + num(r) + "% over " + std::to_string(b.models.size()) +
                       " fits, deviation " + num(worst, 3) + " points (limit 1.5)";
  if (!reference) return {Status::kSkip, "needs the measured database; synthetic " + detail};
  return pass_if(worst <= 1.5, detail);
}

double sign_free(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::min((a - b).cwiseAbs().maxCoeff(), (a + b).cwiseAbs().maxCoeff());
}

// Largest discrepancy between a fitted (eigenvalues, basis) and the SVD of the
// column-centred matrix, over components that are unique up to sign.
double oracle_gap(const Eigen::MatrixXd& x, const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXd& basis) {
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullV);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(x.cols());
  lam.head(svd.singularValues().size()) = svd.singularValues().cwiseAbs2();
  const double scale = std::max(1.0, lam(0));
  double gap = (eigenvalues - lam).cwiseAbs().maxCoeff() / scale;
  for (Eigen::Index k = 0; k < basis.rows(); ++k) {
    const double prev = k > 0 ? lam(k - 1) - lam(k) : scale;
    const double next = k + 1 < lam.size() ? lam(k) - lam(k + 1) : scale;
    if (lam(k) < 1e-6 * scale || std::min(prev, next) < 1e-3 * scale) continue;
    gap = std::max(gap, sign_free(basis.row(k).transpose(), svd.matrixV().col(k)));
  }
  return gap;
}

// 4. fit_spca and per-direction PCA against the SVD oracle.
Outcome oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> rows(2, 8), cols(2, 10);
  std::normal_distribution<double> g(0.0, 4.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd x(rows(rng), cols(rng));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const auto n = static_cast<std::size_t>(x.cols());
    const SpcaFit spca = fit_spca(x, n);
    worst = std::max(worst, oracle_gap(x, spca.model.eigenvalues, spca.model.basis));
    const DirectionPcaModel pca = fit_pca(x, n);
    worst = std::max(worst, oracle_gap(x, pca.eigenvalues, pca.basis));
  }
  return pass_if(worst < 1e-9, "100 matrices up to 8x10, both fits, max gap " + num(worst, 3) + " (limit 1e-9)");
}

// 5. Minimum-phase reconstruction of measured HRIRs.
Outcome min_phase_suite(const HrtfDataset& ds) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> subj(0, ds.subjects.size() - 1), dir(0, ds.grid.size() - 1);
  double worst_db = 0.0, worst_deficit = 0.0;
  std::size_t prefix_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const SubjectRecord& s = ds.subjects[subj(rng)];
    const HrirMatrix& m = trial % 2 ? s.hrir_right : s.hrir_left;
    const auto row = static_cast<Eigen::Index>(dir(rng));
    std::vector<double> h(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index n = 0; n < m.cols(); ++n) h[static_cast<std::size_t>(n)] = m(row, n);
    const std::vector<double> mp = dsp::min_phase_hrir(dsp::magnitude_spectrum(h));
    const auto a = dsp::hrir_to_log_spectrum(std::span<const double>(h));
    const auto b = dsp::hrir_to_log_spectrum(std::span<const double>(mp));
    for (std::size_t k = 0; k < a.size(); ++k) worst_db = std::max(worst_db, std::abs(a[k] - b[k]));
    double total = 0.0;
    for (double v : h) total += v * v;
    double eh = 0.0, em = 0.0;
    bool violated = false;
    for (std::size_t n = 0; n < h.size(); ++n) {
      eh += h[n] * h[n];
      em += mp[n] * mp[n];
      if (em < eh - 1e-9 * (1.0 + eh)) {
        violated = true;
        worst_deficit = std::max(worst_deficit, (eh - em) / total);
      }
    }
    if (violated) ++prefix_violations;
  }
  return pass_if(worst_db < 1e-4 && prefix_violations == 0,
                 "1000 HRIRs, max magnitude change " + num(worst_db, 3) + " dB (limit 1e-4), " +
                     std::to_string(prefix_violations) + " prefix-energy violations (worst deficit " +
                     num(worst_deficit, 3) + " of total energy)");
}

// 6. Backprop against central differences.
Outcome gradient_correctness() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> width(1, 6), depth(1, 3);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> sizes = {width(rng)};
    const std::size_t hidden = depth(rng);
    for (std::size_t l = 0; l < hidden; ++l) sizes.push_back(width(rng));
    sizes.push_back(width(rng));
    const MlpNetwork net(sizes, 100 + static_cast<std::uint64_t>(trial));
    Eigen::VectorXd x(static_cast<Eigen::Index>(sizes.front())), t(static_cast<Eigen::Index>(sizes.back()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng) * 2.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = u(rng);
    worst = std::max(worst, gradient_check(net, x, t));
  }
  return pass_if(worst < 1e-4, "100 random networks, max relative error " + num(worst, 3) + " (limit 1e-4)");
}

// 10. Invariants spanning the modules, recomputed on the run's dataset.
Outcome invariant_suite(const HrtfDataset& ds, const SpcaPair& spca) {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* name) {
    if (!ok) failed.emplace_back(name);
  };

  for (Hemisphere h : kBothHemispheres) {
    const SpcaModel& m = spca.get(h);
    const Eigen::MatrixXd gram = m.basis * m.basis.transpose();
    check((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-9,
          "orthonormality");
    check(std::is_sorted(m.eigenvalues.data(), m.eigenvalues.data() + m.eigenvalues.size(), std::greater<>()) &&
              m.eigenvalues.minCoeff() >= 0.0,
          "eigenvalue ordering");
  }

  // Eckart-Young on a random low-dimensional problem: squared residual of the
  // rank-q reconstruction equals the discarded eigenvalue mass.
  {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(60, 25);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    bool ok = true;
    for (std::size_t q : {1u, 5u, 12u, 24u}) {
      const SpcaFit fit = fit_spca(x, q);
      const double resid = (reconstruct(fit.model, fit.weights) - x).squaredNorm();
      const double tail = fit.model.eigenvalues.tail(25 - static_cast<Eigen::Index>(q)).sum();
      ok = ok && std::abs(resid - tail) < 1e-8 * fit.model.eigenvalues.sum();
    }
    check(ok, "Eckart-Young");
  }

  {
    const SplitPlan a = make_split(625), b = make_split(625);
    std::vector<std::size_t> all = a.train_idx;
    all.insert(all.end(), a.valid_idx.begin(), a.valid_idx.end());
    all.insert(all.end(), a.test_idx.begin(), a.test_idx.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(625);
    std::iota(expect.begin(), expect.end(), 0);
    check(a.train_idx == b.train_idx && a.valid_idx == b.valid_idx && a.test_idx == b.test_idx && all == expect &&
              a.test_idx.size() == 157 && a.valid_idx.size() == 94 && a.train_idx.size() == 374,
          "split determinism");
    const SubjectSplit s1 = make_subject_split(ds), s2 = make_subject_split(ds);
    check(s1.train.size() == s2.train.size() && s1.valid.size() == s2.valid.size() &&
              s1.test.size() == 2 * ds.test_subjects.size(),
          "subject split determinism");
  }

  {
    bool ok = true;
    for (std::size_t i = 0; i < ds.grid.size(); ++i) {
      const auto m = ds.grid.mirror(i);
      ok = ok && m && ds.grid.mirror(*m) == i && ds.grid.at(*m).azimuth_deg == -ds.grid.at(i).azimuth_deg &&
           ds.grid.at(*m).elevation_deg == ds.grid.at(i).elevation_deg &&
           ear_aligned_index(ds.grid, i, Ear::kRight) == i && ear_aligned_index(ds.grid, i, Ear::kLeft) == *m;
    }
    check(ok, "symmetry mirroring");
  }

  {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-89.0, 89.0), pol(-90.0, 269.9);
    bool ok = true;
    for (int i = 0; i < 10000; ++i) {
      const dsp::PolarAngles p{lat(rng), pol(rng)};
      const dsp::PolarAngles back = dsp::spherical_to_polar(dsp::polar_to_spherical(p));
      ok = ok && std::abs(back.lateral_deg - p.lateral_deg) < 1e-9 && std::abs(back.polar_deg - p.polar_deg) < 1e-9;
    }
    check(ok, "coordinate round trip");
  }

  {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(3.0, 7.0);
    SampleSet set;
    set.inputs.resize(80, 5);
    set.targets.resize(80, 3);
    for (Eigen::Index i = 0; i < set.inputs.size(); ++i) set.inputs.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < set.targets.size(); ++i) set.targets.data()[i] = g(rng);
    MlpNetwork net({5, 4, 3}, 1);
    net.fit_statistics(set);
    const Eigen::MatrixXd xn = net.normalize_inputs(set.inputs);
    const Eigen::MatrixXd tn = net.scale_targets(set.targets);
    const Eigen::VectorXd mean = xn.rowwise().mean();
    const Eigen::VectorXd var = (xn.colwise() - mean).rowwise().squaredNorm() / 80.0;  // population variance
    check(mean.cwiseAbs().maxCoeff() < 1e-12 && (var.array() - 1.0).abs().maxCoeff() < 1e-9 &&
              std::abs(tn.cwiseAbs().maxCoeff() - 1.0 / 1.2) < 1e-12,
          "standardization stats");
  }

  std::string detail = "orthonormality, eigenvalue ordering, Eckart-Young, split determinism, symmetry mirroring, "
                       "coordinate round trip, standardization stats";
  if (failed.empty()) return {Status::kPass, detail + " (unit suites cover the rest)"};
  std::string names;
  for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
  return {Status::kFail, "failed: " + names};
}

PredictorConfig run_config(bool reference) {
  PredictorConfig cfg;
  if (!reference) {
    cfg.weights.train.max_epochs = 200;
    cfg.dvspc.train.max_epochs = 20;
    cfg.hav.train.max_epochs = 20;
    cfg.itd.train.max_epochs = 20;
  }
  return cfg;
}

std::string budget(const PredictorConfig& cfg) {
  return "epochs weights " + std::to_string(cfg.weights.train.max_epochs) + ", dvspc " +
         std::to_string(cfg.dvspc.train.max_epochs) + ", hav " + std::to_string(cfg.hav.train.max_epochs) + ", itd " +
         std::to_string(cfg.itd.train.max_epochs);
}

int run(bool reference, const HrtfDataset& ds) {
  std::cout << "dataset: " << (reference ? "reference" : "synthetic CIPIC-shaped") << ", " << ds.subjects.size()
            << " subjects, " << ds.grid.size() << " directions" << std::endl;
  Report report;
  run_criterion(report, 1, "SPCA exactness", [&] { return spca_exactness(ds); });
  run_criterion(report, 2, "cumulative variance table", [&] { return variance_table_check(ds, reference); });
  run_criterion(report, 3, "PCA baseline variance", [&] { return pca_variance_check(ds, reference); });
  run_criterion(report, 4, "oracle equivalence", [] { return oracle_equivalence(); });
  run_criterion(report, 5, "minimum-phase properties", [&] { return min_phase_suite(ds); });
  run_criterion(report, 6, "gradient correctness", [] { return gradient_correctness(); });

  // Criteria 7-9 share one trained bundle.
  const auto t0 = std::chrono::steady_clock::now();
  const PredictorConfig cfg = run_config(reference);
  PredictorBundle bundle = make_bundle(ds, cfg.seed);
  bundle.spca = fit_spca_pair(ds, cfg.q);
  bundle.weights = std::array<WeightPredictor, 2>{train_weight_nets(ds, bundle.spca->get(Hemisphere::kFront), cfg),
                                                  train_weight_nets(ds, bundle.spca->get(Hemisphere::kRear), cfg)};
  bundle.dvspc = train_dvspc_nets(ds, *bundle.spca, cfg);
  bundle.hav = train_hav_nets(ds, *bundle.spca, cfg);
  bundle.itd = train_itd_nets(ds, *bundle.spca, cfg);
  const ErrorSummary err = error_summary(bundle, ds);
  const double train_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "trained bundle (" << budget(cfg) << ") in " << std::fixed << std::setprecision(1) << train_s << " s"
            << std::endl;

  run_criterion(report, 7, "ITD model", [&]() -> Outcome {
    const std::string detail = "e_T " + num(*err.e_t) + " ms (limit 0.05)";
    if (!reference) return {Status::kSkip, "needs the measured database; synthetic " + detail};
    return pass_if(*err.e_t < 0.05, detail);
  });
  run_criterion(report, 8, "reconstruction-error bands", [&]() -> Outcome {
    const bool ok = *err.e_w < 4e-2 && *err.e_h < 0.4 && *err.e_d < 20.0;
    const std::string detail = "e_W " + num(*err.e_w) + " (limit 0.04), e_H " + num(*err.e_h) +
                               " (limit 0.4), e_d " + num(*err.e_d) + " (limit 20)";
    if (!reference) return {Status::kSkip, "needs the measured database; synthetic " + detail};
    return {ok ? Status::kPass : Status::kSoftFail, detail};
  });
  run_criterion(report, 9, "method ordering", [&]() -> Outcome {
    const SdReport sd = build_sd_report(bundle, ds, {SynthMethod::kSpca, SynthMethod::kGeneric}, ds.test_subjects, 0);
    const double s = sd.overall(SynthMethod::kSpca), g = sd.overall(SynthMethod::kGeneric);
    const bool ordered = s < g;
    const std::string detail = "mean SD over " + std::to_string(ds.test_subjects.size()) + " subjects: SPCA " +
                               num(s) + " dB, generic " + num(g) + " dB";
    if (!ordered) return {Status::kFail, detail + "; SPCA not below generic"};
    if (!reference) {
      return {Status::kSkip, detail + "; ordering holds, the 5.54 +- 1.5 dB band needs the measured database"};
    }
    return pass_if(std::abs(s - 5.54) <= 1.5, detail + ", band 5.54 +- 1.5 dB");
  });
  run_criterion(report, 10, "invariant suites", [&] { return invariant_suite(ds, *bundle.spca); });

  std::cout << (report.failures() == 0 ? "acceptance: no hard failures" : "acceptance: hard failures present")
            << std::endl;
  return report.failures() == 0 ? 0 : 1;
}

}  // namespace
}  // namespace hrtfkit

int main(int argc, char** argv) {
  const bool reference = argc > 1 && std::string(argv[1]) == "--reference";
  try {
    if (reference) {
      const char* dir = std::getenv("HRTFKIT_REFERENCE_DATASET");
      if (dir == nullptr || *dir == '\0') {
        std::cout << "SKIP  reference acceptance: HRTFKIT_REFERENCE_DATASET is not set" << std::endl;
        return 77;
      }
      return hrtfkit::run(true, hrtfkit::load_dataset(dir));
    }
    return hrtfkit::run(false, hrtfkit::testing::shared_synthetic_cipic());
  } catch (const std::exception& e) {
    std::cout << "FAIL  acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
}
