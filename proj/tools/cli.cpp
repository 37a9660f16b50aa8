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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hrtfkit/anthro_selector.hpp"
#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/dataset.hpp"
#include "hrtfkit/error.hpp"
#include "hrtfkit/evaluation.hpp"
#include "hrtfkit/pca_baseline.hpp"
#include "hrtfkit/predictors.hpp"
#include "hrtfkit/spectra.hpp"
#include "hrtfkit/synthesis.hpp"

namespace hrtfkit::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* const kFamilies[] = {"weights", "dvspc", "hav", "itd", "pca"};

struct FamilyOverrides {
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::vector<std::size_t>> hidden;
  std::optional<std::string> reduction;
};

struct Options {
  std::string dataset;
  std::string bundle;
  std::string out = "hrtfkit_out";
  std::uint64_t seed = 1;
  std::size_t q = kDefaultSpcCount;
  unsigned workers = 0;
  bool duplicate_direction_samples = false;
  std::map<std::string, FamilyOverrides> config_training;

  std::string input;

  std::string train_what = "all";
  std::size_t epochs = 0;
  std::size_t patience = 0;
  double learning_rate = 0.0;
  std::string hidden;

  std::string anthro;
  std::string method = "spca";
  std::string synth_out;
  std::string format = "f32";
  double azimuth = 0.0;
  double elevation = 0.0;
  bool zero_weights = false;

  std::string eval_what;
  std::string methods = "spca,generic";
  std::string q_list = "1,5,10,20,50,60,80,100,200,500";
  std::string subjects;
  std::string subject;
  std::string bins = "56";
  std::string ear = "left";

  std::size_t pc_count = kDefaultPcCount;
  double alpha = 0.05;
  std::size_t direction_stride = 1;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> values;
  for (const auto& item : split_list(text)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item[0] == '-') {
      throw ValidationError(std::string("invalid ") + what + " entry '" + item + "'");
    }
    values.push_back(static_cast<std::size_t>(v));
  }
  if (values.empty()) throw ValidationError(std::string("empty ") + what);
  return values;
}

FamilyOverrides overrides_from_json(const json& j, const std::string& family) {
  FamilyOverrides o;
  for (const auto& [key, value] : j.items()) {
    if (key == "epochs") o.epochs = value.get<std::size_t>();
    else if (key == "patience") o.patience = value.get<std::size_t>();
    else if (key == "batch_size") o.batch_size = value.get<std::size_t>();
    else if (key == "learning_rate") o.learning_rate = value.get<double>();
    else if (key == "hidden") o.hidden = value.get<std::vector<std::size_t>>();
    else if (key == "reduction") o.reduction = value.get<std::string>();
    else throw ValidationError("config: unknown training key " + family + "." + key);
  }
  return o;
}

void load_config(const std::string& path, Options& o) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError(path + ": expected a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dataset") o.dataset = value.get<std::string>();
      else if (key == "bundle") o.bundle = value.get<std::string>();
      else if (key == "out") o.out = value.get<std::string>();
      else if (key == "seed") o.seed = value.get<std::uint64_t>();
      else if (key == "q") o.q = value.get<std::size_t>();
      else if (key == "workers") o.workers = value.get<unsigned>();
      else if (key == "methods") o.methods = value.get<std::string>();
      else if (key == "q_list") o.q_list = value.get<std::string>();
      else if (key == "duplicate_direction_samples") o.duplicate_direction_samples = value.get<bool>();
      else if (key == "training") {
        for (const auto& [family, fam] : value.items()) {
          if (std::find(std::begin(kFamilies), std::end(kFamilies), family) == std::end(kFamilies)) {
            throw ValidationError(path + ": unknown training family '" + family + "'");
          }
          o.config_training[family] = overrides_from_json(fam, family);
        }
      } else {
        throw ValidationError(path + ": unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::optional<std::string> find_config_arg(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

void apply(const FamilyOverrides& o, NetConfig& net) {
  if (o.epochs) net.train.max_epochs = *o.epochs;
  if (o.patience) net.train.patience = *o.patience;
  if (o.batch_size) net.train.batch_size = *o.batch_size;
  if (o.learning_rate) net.train.learning_rate = *o.learning_rate;
  if (o.hidden) net.hidden = *o.hidden;
  if (o.reduction) {
    if (*o.reduction == "sum") net.train.reduction = GradientReduction::kSum;
    else if (*o.reduction == "mean") net.train.reduction = GradientReduction::kMean;
    else throw ValidationError("reduction must be 'sum' or 'mean', got '" + *o.reduction + "'");
  }
  if (!(net.train.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (net.train.patience < 1) throw ValidationError("patience must be >= 1");
}

struct Configs {
  PredictorConfig predictors;
  PcaBaselineConfig pca;
};

Configs build_configs(const Options& o, const std::vector<std::string>& families) {
  Configs c;
  c.predictors.q = o.q;
  c.predictors.seed = o.seed;
  c.predictors.workers = o.workers;
  c.predictors.duplicate_direction_samples = o.duplicate_direction_samples;
  c.pca.seed = o.seed;
  c.pca.workers = o.workers;
  NetConfig pca_net{c.pca.hidden, c.pca.train};
  std::map<std::string, NetConfig*> nets = {{"weights", &c.predictors.weights},
                                            {"dvspc", &c.predictors.dvspc},
                                            {"hav", &c.predictors.hav},
                                            {"itd", &c.predictors.itd},
                                            {"pca", &pca_net}};
  for (const auto& [family, ov] : o.config_training) apply(ov, *nets.at(family));
  FamilyOverrides flags;
  if (o.epochs) flags.epochs = o.epochs;
  if (o.patience) flags.patience = o.patience;
  if (o.learning_rate > 0.0) flags.learning_rate = o.learning_rate;
  if (!o.hidden.empty()) flags.hidden = parse_size_list(o.hidden, "hidden sizes");
  for (const auto& f : families) apply(flags, *nets.at(f));
  c.pca.hidden = pca_net.hidden;
  c.pca.train = pca_net.train;
  return c;
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required option ") + flag);
  return value;
}

HrtfDataset open_dataset(const Options& o) {
  return load_dataset(require(o.dataset, "--dataset"));
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const std::string dir = o.input.empty() ? require(o.dataset, "--input") : o.input;
  const HrtfDataset ds = load_dataset(dir);
  ds.validate();
  const auto full = subjects_with_full_anthro(ds);
  out << "dataset " << dir << "\n"
      << "  subjects: " << ds.subjects.size() << "\n"
      << "  directions: " << ds.grid.size() << " (" << ds.grid.azimuths_deg().size() << " azimuths x "
      << ds.grid.elevations_deg().size() << " elevations)" << (ds.grid.is_cipic() ? ", CIPIC grid" : "") << "\n"
      << "  hrir_length: " << ds.hrir_length << " at " << ds.sample_rate << " Hz\n"
      << "  full anthropometry: " << full.size() << "\n"
      << "  training subjects: " << ds.training_subjects.size() << "\n"
      << "  test subjects: " << ds.test_subjects.size() << "\n"
      << "  generic subject: " << (ds.generic_subject_id.empty() ? "(none)" : ds.generic_subject_id) << "\n";
  return 0;
}

int cmd_fit_spca(const Options& o, std::ostream& out) {
  const std::string bundle_dir = require(o.bundle, "--bundle");
  const HrtfDataset ds = open_dataset(o);
  PredictorBundle bundle = make_bundle(ds, o.seed);
  bundle.spca = fit_spca_pair(ds, o.q);
  save_bundle(bundle, bundle_dir);

  std::ostringstream csv;
  csv << std::fixed << std::setprecision(6) << "q,front_pct,rear_pct\n";
  out << "SPCA fitted with Q=" << o.q << " (front/rear hemispheres, "
      << bundle.spca->get(Hemisphere::kFront).direction_count() << " directions each)\n";
  out << "  Q    front%   rear%\n";
  for (std::size_t q : parse_size_list(o.q_list, "q list")) {
    const std::size_t d = bundle.spca->get(Hemisphere::kFront).eigenvalues.size();
    if (q < 1 || q > d) continue;
    const double f = cumulative_variance(bundle.spca->get(Hemisphere::kFront).eigenvalues, q);
    const double r = cumulative_variance(bundle.spca->get(Hemisphere::kRear).eigenvalues, q);
    csv << q << ',' << f << ',' << r << '\n';
    out << "  " << std::setw(3) << q << "  " << fmt(f, 2) << "  " << fmt(r, 2) << "\n";
  }
  write_text(fs::path(bundle_dir) / "spca_variance.csv", csv.str());
  out << "wrote " << bundle_dir << "\n";
  return 0;
}

int cmd_select_anthro(const Options& o, std::ostream& out) {
  const HrtfDataset ds = open_dataset(o);
  SelectionConfig cfg;
  cfg.pc_count = o.pc_count;
  cfg.alpha = o.alpha;
  cfg.direction_stride = o.direction_stride;
  cfg.workers = o.workers;
  const SelectionReport report = build_selection_report(ds, cfg);
  write_selection_report(report, o.out);
  out << "selection report over " << report.observation_count << " subject-ear observations, "
      << report.regression_count << " regressions, |t| > " << fmt(report.t_threshold, 3) << "\n";
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    out << "  " << std::setw(8) << report.names[i] << "  " << report.significance_counts[i] << "\n";
  }
  out << "selected (spectral):";
  for (const auto& n : report.selected.spectral) out << ' ' << n;
  out << "\nselected (itd):";
  for (const auto& n : report.selected.itd) out << ' ' << n;
  out << "\nwrote " << (fs::path(o.out) / "report.json").string() << "\n";
  return 0;
}

json report_json(const TrainingReport& r) {
  return {{"test_error", r.test_error},
          {"train_samples", r.train_samples},
          {"valid_samples", r.valid_samples},
          {"test_samples", r.test_samples},
          {"best_epochs", r.best_epochs}};
}

int cmd_train(const Options& o, std::ostream& out) {
  static const std::vector<std::string> all = {"weights", "dvspc", "hav", "itd", "pca"};
  std::vector<std::string> families;
  if (o.train_what == "all") {
    families = all;
  } else if (std::find(all.begin(), all.end(), o.train_what) != all.end()) {
    families = {o.train_what};
  } else {
    throw ValidationError("unknown training target '" + o.train_what +
                          "' (expected weights, dvspc, hav, itd, pca or all)");
  }
  const Configs cfg = build_configs(o, families);
  const std::string bundle_dir = require(o.bundle, "--bundle");
  const HrtfDataset ds = open_dataset(o);

  PredictorBundle bundle = fs::exists(fs::path(bundle_dir) / "bundle.json") ? load_bundle(bundle_dir)
                                                                            : make_bundle(ds, o.seed);
  if (bundle.grid.size() != ds.grid.size()) throw ValidationError("bundle grid does not match the dataset");
  bundle.seed = o.seed;
  bundle.training_subjects = ds.training_subjects;
  bundle.test_subjects = ds.test_subjects;
  const bool needs_spca = std::any_of(families.begin(), families.end(), [](const std::string& f) { return f != "pca"; });
  if (needs_spca && !bundle.spca) {
    if (o.train_what != "all") throw ValidationError("bundle has no SPCA models; run fit-spca first");
    out << "fitting SPCA (Q=" << o.q << ")\n";
    bundle.spca = fit_spca_pair(ds, o.q);
    save_bundle(bundle, bundle_dir);
  }

  const fs::path report_path = fs::path(bundle_dir) / "training_report.json";
  json reports = fs::exists(report_path) ? json::parse(read_text(report_path)) : json::object();
  auto record = [&](const std::string& key, const TrainingReport& r, const char* label) {
    reports[key] = report_json(r);
    out << "  " << label << ": test error " << r.test_error << " (" << r.train_samples << " train, "
        << r.valid_samples << " valid, " << r.test_samples << " test)\n";
  };

  for (const auto& f : families) {
    out << "training " << f << "\n";
    if (f == "weights") {
      std::array<WeightPredictor, 2> wps;
      double e_d = 0.0;
      for (Hemisphere h : kBothHemispheres) {
        TrainingReport r;
        wps[static_cast<int>(h)] = train_weight_nets(ds, bundle.spca->get(h), cfg.predictors, &r);
        record(r.family, r, r.family.c_str());
        e_d += r.test_error / 2.0;
      }
      bundle.weights = std::move(wps);
      reports["e_d"] = e_d;
      out << "  e_d: " << e_d << "\n";
    } else if (f == "dvspc") {
      TrainingReport r;
      bundle.dvspc = train_dvspc_nets(ds, *bundle.spca, cfg.predictors, &r);
      record("dvspc", r, "e_W");
    } else if (f == "hav") {
      TrainingReport r;
      bundle.hav = train_hav_nets(ds, *bundle.spca, cfg.predictors, &r);
      record("hav", r, "e_H");
    } else if (f == "itd") {
      TrainingReport r;
      bundle.itd = train_itd_nets(ds, *bundle.spca, cfg.predictors, &r);
      record("itd", r, "e_T (ms)");
    } else if (f == "pca") {
      const LogSpectraSet spectra = compute_log_spectra(ds);
      PcaBaseline baseline = fit_pca_baseline(spectra, ds.grid, cfg.pca.p, o.workers);
      train_pca_baseline_nets(baseline, ds, spectra, cfg.pca);
      out << "  mean variance captured by " << cfg.pca.p << " PCs: left "
          << fmt(mean_pca_variance(baseline, Ear::kLeft, cfg.pca.p), 2) << "%, right "
          << fmt(mean_pca_variance(baseline, Ear::kRight, cfg.pca.p), 2) << "%\n";
      bundle.baseline = std::move(baseline);
    }
    save_bundle(bundle, bundle_dir);
    write_text(report_path, reports.dump(2) + "\n");
  }
  out << "wrote " << bundle_dir << "\n";
  return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const PredictorBundle bundle = load_bundle(require(o.bundle, "--bundle"));
  SynthRequest req;
  req.method = parse_method(o.method);
  req.azimuth_deg = o.azimuth;
  req.elevation_deg = o.elevation;
  req.zero_weights = o.zero_weights;
  if (!o.anthro.empty()) {
    req.anthro = parse_anthro_json(read_text(o.anthro), o.anthro);
  } else if (req.method != SynthMethod::kGeneric) {
    throw ValidationError("missing required option --anthro");
  }
  ExportFormat format;
  if (o.format == "f32") format = ExportFormat::kF32;
  else if (o.format == "wav") format = ExportFormat::kWav;
  else throw ValidationError("format must be f32 or wav, got '" + o.format + "'");
  const std::string path = require(o.synth_out, "--out");
  const SynthResult res = synthesize(bundle, req);
  export_hrir(res, path, format);
  out << "synthesized " << method_name(res.method) << " HRIRs at az " << res.azimuth_deg << ", el "
      << res.elevation_deg << ": ITD " << fmt(res.itd_ms, 4) << " ms\n"
      << "wrote " << path << (format == ExportFormat::kF32 ? " (+ .json sidecar)" : "") << "\n";
  return 0;
}

std::vector<SynthMethod> parse_methods(const std::string& text) {
  std::vector<SynthMethod> methods;
  for (const auto& m : split_list(text)) methods.push_back(parse_method(m));
  if (methods.empty()) throw ValidationError("no methods given");
  return methods;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const fs::path out_dir = o.out;
  if (o.eval_what == "variance") {
    const HrtfDataset ds = open_dataset(o);
    const auto q_list = parse_size_list(o.q_list, "q list");
    for (std::size_t q : q_list) {
      if (q < 1 || q > ds.grid.size()) {
        throw ValidationError("Q=" + std::to_string(q) + " outside [1, " + std::to_string(ds.grid.size()) + "]");
      }
    }
    const VarianceReport report = variance_report(ds, q_list);
    write_variance_csv(report, out_dir / "variance_table.csv");
    out << "cumulative variance (%)\n  Q      left    right\n";
    for (std::size_t i = 0; i < report.q_list.size(); ++i) {
      out << "  " << std::setw(3) << report.q_list[i] << "  " << std::setw(7) << fmt(report.left[i], 2)
          << "  " << std::setw(7) << fmt(report.right[i], 2) << "\n";
    }
    out << "wrote " << (out_dir / "variance_table.csv").string() << "\n";
    return 0;
  }
  const HrtfDataset ds = open_dataset(o);
  const PredictorBundle bundle = load_bundle(require(o.bundle, "--bundle"));
  if (o.eval_what == "errors") {
    const ErrorSummary s = error_summary(bundle, ds);
    write_errors_json(s, out_dir / "errors.json");
    auto show = [&](const char* name, const std::optional<double>& v) {
      out << "  " << name << ": " << (v ? std::to_string(*v) : std::string("(not trained)")) << "\n";
    };
    show("e_d", s.e_d);
    show("e_W", s.e_w);
    show("e_H", s.e_h);
    show("e_T (ms)", s.e_t);
    out << "wrote " << (out_dir / "errors.json").string() << "\n";
    return 0;
  }
  const auto methods = parse_methods(o.methods);
  if (o.eval_what == "sd") {
    std::vector<std::string> subjects = o.subjects.empty() ? bundle.test_subjects : split_list(o.subjects);
    const SdReport report = build_sd_report(bundle, ds, methods, subjects, o.workers);
    write_sd_report(report, out_dir);
    out << "mean spectral distortion over " << subjects.size() << " subjects\n";
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
      out << "  " << std::setw(8) << report.methods[m] << "  " << fmt(report.overall_db[m], 3) << " dB\n";
    }
    out << "wrote " << (out_dir / "sd_report.csv").string() << "\n";
    return 0;
  }
  if (o.eval_what == "sfrs") {
    const std::string id = !o.subject.empty() ? o.subject
                           : !bundle.test_subjects.empty() ? bundle.test_subjects.front()
                                                           : throw ValidationError("missing --subject");
    const SubjectRecord& s = ds.subject(id);
    Ear ear;
    if (o.ear == "left") ear = Ear::kLeft;
    else if (o.ear == "right") ear = Ear::kRight;
    else throw ValidationError("ear must be left or right");
    const Eigen::MatrixXd measured = log_spectra(s, ear);
    const auto bins = parse_size_list(o.bins, "bin list");
    std::vector<std::pair<std::string, Eigen::MatrixXd>> panels = {{"measured", measured}};
    for (SynthMethod m : methods) {
      if (m != SynthMethod::kGeneric && !s.anthro) throw ValidationError("subject " + id + " has no anthropometry");
      panels.emplace_back(method_name(m), predicted_log_panel(bundle, s.anthro.value_or(AnthroParams{}), ear, m));
    }
    for (std::size_t bin : bins) {
      for (const auto& [name, panel] : panels) {
        const SfrsMap map = sfrs(panel, ds.grid, bin, name, name == "measured" ? nullptr : &measured, ds.sample_rate);
        const fs::path path = out_dir / ("sfrs_" + name + "_" + std::to_string(bin) + ".csv");
        write_sfrs_csv(map, path);
        out << "wrote " << path.string() << " (" << fmt(map.bin_hz, 1) << " Hz"
            << (map.error ? ", mean |error| " + fmt(map.error->mean(), 3) + " dB" : std::string()) << ")\n";
      }
    }
    return 0;
  }
  throw ValidationError("unknown evaluation '" + o.eval_what + "' (expected sd, sfrs, variance or errors)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"hrtfkit: HRTF personalization from anthropometry", "hrtfkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hrtfkit 0.1.0");

  std::string config_path;
  app.add_option("--config", config_path, "JSON file with option defaults")->check(CLI::ExistingFile);
  try {
    if (auto cfg = find_config_arg(argc, argv); cfg && fs::exists(*cfg)) load_config(*cfg, o);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  app.add_option("-d,--dataset", o.dataset, "Portable dataset directory")->capture_default_str();
  app.add_option("-b,--bundle", o.bundle, "Model bundle directory")->capture_default_str();
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--q", o.q, "Number of spatial principal components")->capture_default_str();
  app.add_option("--workers", o.workers, "Worker threads (0 = all cores)")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Validate a portable dataset and print a summary");
  ingest->add_option("--input", o.input, "Dataset directory");

  auto* fit = app.add_subcommand("fit-spca", "Fit front/rear SPCA models into a new bundle");
  fit->add_option("--q-list", o.q_list, "Q values for the variance table")->capture_default_str();

  auto* select = app.add_subcommand("select-anthro", "Regression and correlation analysis of anthropometry");
  select->add_option("--out", o.out, "Output directory")->capture_default_str();
  select->add_option("--pcs", o.pc_count, "PCs per direction")->capture_default_str();
  select->add_option("--alpha", o.alpha, "Two-sided significance level")->capture_default_str();
  select->add_option("--direction-stride", o.direction_stride, "Use every n-th direction")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train predictor networks into the bundle");
  train->add_option("what", o.train_what, "weights, dvspc, hav, itd, pca or all")->capture_default_str();
  train->add_option("--epochs", o.epochs, "Maximum epochs for the selected networks");
  train->add_option("--patience", o.patience, "Early-stopping patience");
  train->add_option("--lr", o.learning_rate, "Learning rate");
  train->add_option("--hidden", o.hidden, "Hidden layer sizes, comma separated");

  auto* synth = app.add_subcommand("synth", "Synthesize a binaural HRIR pair");
  synth->add_option("--anthro", o.anthro, "anthro.json of the listener");
  synth->add_option("--az", o.azimuth, "Interaural-polar azimuth (deg)")->required();
  synth->add_option("--el", o.elevation, "Interaural-polar elevation (deg)")->required();
  synth->add_option("--method", o.method, "spca, pca or generic")->capture_default_str();
  synth->add_option("--out", o.synth_out, "Output file")->required();
  synth->add_option("--format", o.format, "f32 or wav")->capture_default_str();
  synth->add_flag("--zero-weights", o.zero_weights, "Force SPCA weights to zero (diagnostic)");

  auto* eval = app.add_subcommand("eval", "Write evaluation reports");
  eval->add_option("what", o.eval_what, "sd, sfrs, variance or errors")->required();
  eval->add_option("--out", o.out, "Output directory")->capture_default_str();
  eval->add_option("--methods", o.methods, "Comma separated methods")->capture_default_str();
  eval->add_option("--q-list", o.q_list, "Q values for the variance table")->capture_default_str();
  eval->add_option("--subjects", o.subjects, "Subjects for the SD report (default: test subjects)");
  eval->add_option("--subject", o.subject, "Subject for SFRS maps");
  eval->add_option("--bins", o.bins, "Frequency bins for SFRS maps")->capture_default_str();
  eval->add_option("--ear", o.ear, "left or right")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return cmd_ingest(o, out);
    if (*fit) return cmd_fit_spca(o, out);
    if (*select) return cmd_select_anthro(o, out);
    if (*train) return cmd_train(o, out);
    if (*synth) return cmd_synth(o, out);
    if (*eval) return cmd_eval(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace hrtfkit::cli
