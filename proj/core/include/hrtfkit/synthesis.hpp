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

#ifndef HRTFKIT_SYNTHESIS_HPP_
#define HRTFKIT_SYNTHESIS_HPP_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hrtfkit/dataset.hpp"
#include "hrtfkit/predictors.hpp"

namespace hrtfkit {

enum class SynthMethod { kSpca, kPca, kGeneric };

const char* method_name(SynthMethod m);
// "spca", "pca" or "generic"; throws ValidationError otherwise.
SynthMethod parse_method(const std::string& name);

struct SynthRequest {
  AnthroParams anthro;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  SynthMethod method = SynthMethod::kSpca;
  // Diagnostic: force the SPCA weights to zero.
  bool zero_weights = false;
};

struct SynthResult {
  std::vector<double> left;   // after the ITD delay
  std::vector<double> right;
  double itd_ms = 0.0;
  std::vector<double> log_mag_left;  // dB, before the ITD delay
  std::vector<double> log_mag_right;
  SynthMethod method = SynthMethod::kSpca;
  int bundle_version = kBundleFormatVersion;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double sample_rate = 44100.0;
};

// Predicted SPCA weights of one listener, [ear][hemisphere], each 200 x Q.
struct PersonalizedWeights {
  std::array<std::array<Eigen::MatrixXd, 2>, 2> weights;

  const Eigen::MatrixXd& get(Ear ear, Hemisphere h) const {
    return weights[static_cast<int>(ear)][static_cast<int>(h)];
  }
};

PersonalizedWeights personalize(const PredictorBundle& bundle, const AnthroParams& anthro,
                                bool zero_weights = false);

// d W + H_av + mu for one ear, floored at the dB floor.
// `params` must belong to the ear-aligned direction (azimuth negated for the
// left ear).
std::vector<double> spca_log_magnitude(const PredictorBundle& bundle,
                                       const PersonalizedWeights& weights, Ear ear,
                                       const DirectionParams& params);

SynthResult synthesize(const PredictorBundle& bundle, const SynthRequest& req);
// SPCA synthesis reusing precomputed weights; req.anthro supplies the ITD inputs.
SynthResult synthesize(const PredictorBundle& bundle, const PersonalizedWeights& weights,
                       const SynthRequest& req);

enum class ExportFormat { kF32, kWav };

// f32: planar little-endian floats (left then right) plus `<path>.json`.
// wav: 2-channel IEEE-float WAV at the result's sample rate.
void export_hrir(const SynthResult& res, const std::filesystem::path& path, ExportFormat format);

struct ImportedHrir {
  std::vector<float> left;
  std::vector<float> right;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double itd_ms = 0.0;
  double sample_rate = 0.0;
  std::string method;
};

ImportedHrir import_hrir_f32(const std::filesystem::path& path);

}  // namespace hrtfkit

#endif  // HRTFKIT_SYNTHESIS_HPP_
