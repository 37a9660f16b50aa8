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

#include "hrtfkit/synthesis.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/dsp.hpp"
#include "hrtfkit/error.hpp"
#include "hrtfkit/spectra.hpp"

namespace hrtfkit {
namespace fs = std::filesystem;
using json = nlohmann::json;

const char* method_name(SynthMethod m) {
  switch (m) {
    case SynthMethod::kSpca: return "spca";
    case SynthMethod::kPca: return "pca";
    case SynthMethod::kGeneric: return "generic";
  }
  return "unknown";
}

SynthMethod parse_method(const std::string& name) {
  if (name == "spca") return SynthMethod::kSpca;
  if (name == "pca") return SynthMethod::kPca;
  if (name == "generic") return SynthMethod::kGeneric;
  throw ValidationError("unknown method '" + name + "' (expected spca, pca or generic)");
}

PersonalizedWeights personalize(const PredictorBundle& bundle, const AnthroParams& anthro,
                                bool zero_weights) {
  bundle.require_spca_models();
  if (!bundle.weights) throw ValidationError("bundle has no weight networks; run train weights");
  PersonalizedWeights pw;
  const auto n = static_cast<Eigen::Index>(bundle.mu().size());
  const auto q = static_cast<Eigen::Index>(bundle.q());
  for (Ear ear : kBothEars) {
    const auto x = zero_weights ? std::array<double, 8>{} : anthro.spectral_inputs(ear);
    for (Hemisphere h : kBothHemispheres) {
      pw.weights[static_cast<int>(ear)][static_cast<int>(h)] =
          zero_weights ? Eigen::MatrixXd::Zero(n, q)
                       : predict_weights((*bundle.weights)[static_cast<int>(h)], x);
    }
  }
  return pw;
}

std::vector<double> spca_log_magnitude(const PredictorBundle& bundle,
                                       const PersonalizedWeights& weights, Ear ear,
                                       const DirectionParams& params) {
  const Eigen::MatrixXd& d = weights.get(ear, params.hemisphere);
  const Eigen::VectorXd& mu = bundle.mu();
  if (d.cols() != params.dv_spc.size() || d.rows() != mu.size()) {
    throw ValidationError("weight matrix shape does not match the bundle");
  }
  const Eigen::VectorXd log_mag = (d * params.dv_spc).array() + params.h_av + mu.array();
  std::vector<double> out(static_cast<std::size_t>(log_mag.size()));
  for (Eigen::Index k = 0; k < log_mag.size(); ++k) out[k] = std::max(dsp::kFloorDb, log_mag(k));
  return out;
}

namespace {

std::vector<double> min_phase_from_db(const std::vector<double>& db) {
  const auto mag = dsp::db_to_magnitude(db);
  return dsp::min_phase_hrir(mag);
}

SynthResult finish(const PredictorBundle& bundle, const SynthRequest& req,
                   std::vector<double> log_left, std::vector<double> log_right, double itd_ms) {
  SynthResult res;
  res.method = req.method;
  res.bundle_version = bundle.format_version;
  res.azimuth_deg = req.azimuth_deg;
  res.elevation_deg = req.elevation_deg;
  res.sample_rate = bundle.sample_rate;
  res.itd_ms = itd_ms;
  const auto left = min_phase_from_db(log_left);
  const auto right = min_phase_from_db(log_right);
  auto pair = dsp::apply_itd(left, right, itd_ms, bundle.sample_rate);
  res.left = std::move(pair.left);
  res.right = std::move(pair.right);
  res.log_mag_left = std::move(log_left);
  res.log_mag_right = std::move(log_right);
  return res;
}

std::size_t require_on_grid(const PredictorBundle& bundle, const SynthRequest& req) {
  const auto idx = bundle.grid.find(req.azimuth_deg, req.elevation_deg);
  if (!idx) {
    throw ValidationError(std::string("off-grid direction unsupported by ") + method_name(req.method) +
                          " (az " + std::to_string(req.azimuth_deg) + ", el " +
                          std::to_string(req.elevation_deg) + ")");
  }
  return *idx;
}

SynthResult synthesize_generic(const PredictorBundle& bundle, const SynthRequest& req) {
  check_direction_range(req.azimuth_deg, req.elevation_deg);
  const std::size_t d = require_on_grid(bundle, req);
  if (!bundle.generic_left || !bundle.generic_right) {
    throw ValidationError("bundle carries no generic subject HRIRs");
  }
  const auto row = static_cast<Eigen::Index>(d);
  const auto len = static_cast<std::size_t>(bundle.generic_left->cols());
  const std::span<const float> l(bundle.generic_left->row(row).data(), len);
  const std::span<const float> r(bundle.generic_right->row(row).data(), len);
  SynthResult res;
  res.method = req.method;
  res.bundle_version = bundle.format_version;
  res.azimuth_deg = req.azimuth_deg;
  res.elevation_deg = req.elevation_deg;
  res.sample_rate = bundle.sample_rate;
  res.left.assign(l.begin(), l.end());
  res.right.assign(r.begin(), r.end());
  res.log_mag_left = dsp::hrir_to_log_spectrum(l);
  res.log_mag_right = dsp::hrir_to_log_spectrum(r);
  res.itd_ms = dsp::extract_itd(l, r, bundle.sample_rate);
  return res;
}

SynthResult synthesize_pca(const PredictorBundle& bundle, const SynthRequest& req) {
  check_direction_range(req.azimuth_deg, req.elevation_deg);
  require_on_grid(bundle, req);
  if (!bundle.baseline) throw ValidationError("bundle has no PCA baseline; run train pca");
  auto floor = [](std::vector<double> v) {
    for (double& x : v) x = std::max(dsp::kFloorDb, x);
    return v;
  };
  auto left = floor(predict_pca_hrtf(*bundle.baseline, req.anthro, Ear::kLeft, req.azimuth_deg,
                                     req.elevation_deg));
  auto right = floor(predict_pca_hrtf(*bundle.baseline, req.anthro, Ear::kRight, req.azimuth_deg,
                                      req.elevation_deg));
  const double itd = predict_itd(bundle, req.anthro, req.azimuth_deg, req.elevation_deg);
  return finish(bundle, req, std::move(left), std::move(right), itd);
}

}  // namespace

SynthResult synthesize(const PredictorBundle& bundle, const PersonalizedWeights& weights,
                       const SynthRequest& req) {
  if (req.method != SynthMethod::kSpca) return synthesize(bundle, req);
  const DirectionParams right_params =
      predict_direction_params(bundle, req.azimuth_deg, req.elevation_deg);
  const DirectionParams left_params =
      req.azimuth_deg == 0.0
          ? right_params
          : predict_direction_params(bundle, ear_aligned_azimuth(req.azimuth_deg, Ear::kLeft),
                                     req.elevation_deg);
  auto left = spca_log_magnitude(bundle, weights, Ear::kLeft, left_params);
  auto right = spca_log_magnitude(bundle, weights, Ear::kRight, right_params);
  const double itd = predict_itd(bundle, req.anthro, req.azimuth_deg, req.elevation_deg);
  return finish(bundle, req, std::move(left), std::move(right), itd);
}

SynthResult synthesize(const PredictorBundle& bundle, const SynthRequest& req) {
  switch (req.method) {
    case SynthMethod::kGeneric: return synthesize_generic(bundle, req);
    case SynthMethod::kPca: return synthesize_pca(bundle, req);
    case SynthMethod::kSpca: break;
  }
  check_direction_range(req.azimuth_deg, req.elevation_deg);
  return synthesize(bundle, personalize(bundle, req.anthro, req.zero_weights), req);
}

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::string wav_bytes(const SynthResult& res) {
  const auto frames = static_cast<std::uint32_t>(res.left.size());
  const std::uint16_t channels = 2;
  const std::uint16_t bits = 32;
  const auto rate = static_cast<std::uint32_t>(res.sample_rate);
  const std::uint32_t data_bytes = frames * channels * (bits / 8);
  std::string out;
  out += "RIFF";
  put_u32(out, 4 + (8 + 18) + (8 + 4) + (8 + data_bytes));
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 18);
  put_u16(out, 3);  // WAVE_FORMAT_IEEE_FLOAT
  put_u16(out, channels);
  put_u32(out, rate);
  put_u32(out, rate * channels * (bits / 8));
  put_u16(out, channels * (bits / 8));
  put_u16(out, bits);
  put_u16(out, 0);
  out += "fact";
  put_u32(out, 4);
  put_u32(out, frames);
  out += "data";
  put_u32(out, data_bytes);
  for (std::uint32_t i = 0; i < frames; ++i) {
    put_f32(out, static_cast<float>(res.left[i]));
    put_f32(out, static_cast<float>(res.right[i]));
  }
  return out;
}

}  // namespace

void export_hrir(const SynthResult& res, const fs::path& path, ExportFormat format) {
  if (res.left.size() != res.right.size() || res.left.empty()) {
    throw ValidationError("export_hrir: channels must be nonempty and of equal length");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (format == ExportFormat::kWav) {
    write_text(path, wav_bytes(res));
    return;
  }
  std::vector<double> planar(res.left);
  planar.insert(planar.end(), res.right.begin(), res.right.end());
  write_f32_from_double(path, planar);
  json side;
  side["format"] = "f32-planar-le";
  side["channels"] = {"left", "right"};
  side["samples_per_channel"] = res.left.size();
  side["sample_rate"] = res.sample_rate;
  side["azimuth_deg"] = res.azimuth_deg;
  side["elevation_deg"] = res.elevation_deg;
  side["itd_ms"] = res.itd_ms;
  side["method"] = method_name(res.method);
  side["bundle_version"] = res.bundle_version;
  write_text(fs::path(path.string() + ".json"), side.dump(2) + "\n");
}

ImportedHrir import_hrir_f32(const fs::path& path) {
  const fs::path sidecar(path.string() + ".json");
  json side;
  try {
    side = json::parse(read_text(sidecar));
  } catch (const json::parse_error& e) {
    throw ValidationError(sidecar.string() + ": " + e.what());
  }
  ImportedHrir imp;
  try {
    const auto n = side.at("samples_per_channel").get<std::size_t>();
    const auto data = read_f32(path, 2 * n);
    imp.left.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n));
    imp.right.assign(data.begin() + static_cast<std::ptrdiff_t>(n), data.end());
    imp.azimuth_deg = side.at("azimuth_deg").get<double>();
    imp.elevation_deg = side.at("elevation_deg").get<double>();
    imp.itd_ms = side.at("itd_ms").get<double>();
    imp.sample_rate = side.at("sample_rate").get<double>();
    imp.method = side.at("method").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(sidecar.string() + ": " + e.what());
  }
  return imp;
}

}  // namespace hrtfkit
