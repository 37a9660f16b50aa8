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

#include "synthetic_cipic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <random>
#include <set>

#include "hrtfkit/dsp.hpp"
#include "hrtfkit/parallel.hpp"

namespace hrtfkit::testing {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSoundSpeed = 343.0;  // m/s
constexpr double kFs = 44100.0;
constexpr std::size_t kN = 200;

// Subjects without complete anthropometry; 021 lacks only pinna data.
const std::set<std::string> kIncomplete = {"008", "010", "011", "012", "017", "021", "131", "165"};

struct SubjectTraits {
  AnthroParams anthro;  // complete values driving the model
  double ripple_phase = 0.0;
  double ripple_cycles = 0.0;
  double ripple_scale = 1.0;
  double echo_gain = 0.5;
  std::array<double, 2> pinna_jitter{1.0, 1.0};  // per ear, scales echo delays
  std::array<double, 2> resonance_jitter{1.0, 1.0};
  std::uint64_t noise_seed = 0;
};

double head_radius_m(const AnthroParams& a) {
  const double cm = 0.51 * *a.x1 / 2.0 + 0.019 * *a.x3 / 2.0 + 0.18 * *a.x2 / 2.0 + 3.2;
  return cm / 100.0;
}

std::array<double, 3> direction_vector(double lat_deg, double pol_deg) {
  const double lat = lat_deg * kPi / 180.0;
  const double pol = pol_deg * kPi / 180.0;
  return {std::cos(lat) * std::cos(pol), std::sin(lat), std::cos(lat) * std::sin(pol)};
}

// Log magnitude in dB at bins 0..N/2 for one ear.
std::vector<double> model_log_magnitude(const SubjectTraits& t, Ear ear, double lat_deg,
                                        double pol_deg) {
  const AnthroParams& a = t.anthro;
  const PinnaParams& p = a.pinna(ear);
  const double side = ear == Ear::kRight ? 1.0 : -1.0;
  const auto v = direction_vector(lat_deg, pol_deg);
  // Ears sit slightly behind the head centre.
  const double back = 5.0 * kPi / 180.0;
  const double cos_inc = -std::sin(back) * v[0] + side * std::cos(back) * v[1];
  const double incidence = std::acos(std::clamp(cos_inc, -1.0, 1.0)) * 180.0 / kPi;
  const double alpha = 1.05 + 0.95 * std::cos(incidence / 150.0 * kPi);
  const double w0 = kSoundSpeed / head_radius_m(a);

  // Elevation-like angle for the pinna model: 90 at the top, folded at the rear.
  const double pol = pol_deg > 90.0 ? 180.0 - pol_deg : pol_deg;
  const double pinna_scale = *p.d5 / 6.4 * t.pinna_jitter[static_cast<int>(ear)];
  static constexpr double rho[] = {0.5, -1.0, 0.5, -0.25, 0.25};
  static constexpr double amp[] = {1.0, 5.0, 5.0, 5.0, 5.0};
  static constexpr double base[] = {2.0, 4.0, 7.0, 11.0, 13.0};
  static constexpr double dfac[] = {1.0, 0.5, 0.5, 0.5, 0.5};
  const double lat_rad = lat_deg * kPi / 180.0;
  double tau[5];
  for (int k = 0; k < 5; ++k) {
    tau[k] = pinna_scale * (amp[k] * std::cos(lat_rad / 2.0) *
                                std::sin(dfac[k] * (90.0 - pol) * kPi / 180.0) +
                            base[k]);
  }
  // Shoulder reflection delay in samples grows with shoulder width and
  // shrinks for sources overhead.
  const double shoulder_delay = (*a.x12 / 45.0) * (12.0 + 6.0 * std::cos(pol * kPi / 180.0));
  const double shoulder_gain = 0.25 * (0.6 + 0.4 * std::max(0.0, std::cos(pol * kPi / 180.0)));
  // Quarter-wave concha resonance from the concha height.
  const double fc = kSoundSpeed / (4.0 * *p.d1 / 100.0 * 2.2) * t.resonance_jitter[static_cast<int>(ear)];
  const double concha_gain = 5.0 * (*p.d3 / 1.6);

  std::vector<double> db(kN / 2 + 1);
  for (std::size_t k = 0; k <= kN / 2; ++k) {
    const double f = static_cast<double>(k) * kFs / static_cast<double>(kN);
    const double w = 2.0 * kPi * f;
    const std::complex<double> shadow =
        std::complex<double>(1.0, alpha * w / (2.0 * w0)) / std::complex<double>(1.0, w / (2.0 * w0));
    std::complex<double> pinna(1.0, 0.0);
    for (int e = 0; e < 5; ++e) {
      pinna += t.echo_gain * rho[e] * std::polar(1.0, -w * tau[e] / kFs);
    }
    const std::complex<double> shoulder = 1.0 + shoulder_gain * std::polar(1.0, -w * shoulder_delay / kFs);
    const double x = f / fc;
    const double resonance = concha_gain * std::exp(-0.5 * std::pow(std::log(std::max(x, 1e-6)) / 0.25, 2.0));
    const double fossa = -3.0 * (*p.d4 / 1.5) *
                         std::exp(-0.5 * std::pow((f - 9000.0 - 1500.0 * std::sin(pol * kPi / 180.0)) / 1200.0, 2.0));
    const double ripple = t.ripple_scale *
                          std::sin(t.ripple_phase + t.ripple_cycles * 2.0 * kPi * f / 22050.0);
    // Gentle high-frequency roll-off of the measurement chain.
    const double chain = -6.0 * std::pow(f / 22050.0, 2.0);
    db[k] = 20.0 * std::log10(std::abs(shadow) * std::abs(pinna) * std::abs(shoulder)) + resonance +
            fossa + ripple + chain;
  }
  return db;
}

// Windowed-sinc fractional delay, truncated to the input length.
std::vector<double> fractional_delay(const std::vector<double>& x, double delay) {
  constexpr int half = 16;
  const int first = static_cast<int>(std::floor(delay)) - half + 1;
  std::vector<double> taps(2 * half);
  for (int j = 0; j < 2 * half; ++j) {
    const double u = static_cast<double>(first + j) - delay;
    const double sinc = std::abs(u) < 1e-12 ? 1.0 : std::sin(kPi * u) / (kPi * u);
    taps[static_cast<std::size_t>(j)] = std::abs(u) < half ? sinc * 0.5 * (1.0 + std::cos(kPi * u / half)) : 0.0;
  }
  const int len = static_cast<int>(x.size());
  std::vector<double> y(x.size(), 0.0);
  for (int n = 0; n < len; ++n) {
    for (int j = 0; j < 2 * half; ++j) {
      const int m = n - first - j;
      if (m >= 0 && m < len) y[static_cast<std::size_t>(n)] += x[static_cast<std::size_t>(m)] * taps[static_cast<std::size_t>(j)];
    }
  }
  return y;
}

AnthroParams draw_anthro(std::mt19937_64& rng) {
  auto n = [&](double mean, double sd) {
    std::normal_distribution<double> d(mean, sd);
    return std::max(0.2 * mean, d(rng));
  };
  AnthroParams a;
  a.x1 = n(14.5, 0.8);
  a.x2 = n(21.5, 1.2);
  a.x3 = n(19.0, 1.0);
  a.x12 = n(45.0, 3.0);
  PinnaParams left;
  left.d1 = n(1.9, 0.2);
  left.d3 = n(1.6, 0.2);
  left.d4 = n(1.5, 0.25);
  left.d5 = n(6.4, 0.5);
  left.d6 = n(3.0, 0.3);
  a.left = left;
  auto jitter = [&](double v) { return v * (1.0 + std::normal_distribution<double>(0.0, 0.03)(rng)); };
  a.right.d1 = jitter(*left.d1);
  a.right.d3 = jitter(*left.d3);
  a.right.d4 = jitter(*left.d4);
  a.right.d5 = jitter(*left.d5);
  a.right.d6 = jitter(*left.d6);
  // Remaining head/torso and pinna measurements, not used by the model.
  const std::pair<const char*, double> head[] = {
      {"x4", 6.5},   {"x5", 17.0},  {"x6", 5.5},   {"x7", 21.0}, {"x8", 10.5},
      {"x9", 11.0},  {"x10", 27.0}, {"x11", 38.0}, {"x13", 105.0}, {"x14", 172.0},
      {"x15", 28.0}, {"x16", 88.0}, {"x17", 58.0}};
  for (const auto& [name, mean] : head) a.extra[name] = n(mean, 0.06 * mean);
  const std::pair<const char*, double> pinna[] = {
      {"d2", 0.7}, {"d7", 0.6}, {"d8", 1.1}, {"theta1", 0.45}, {"theta2", 0.5}};
  for (const auto& [name, mean] : pinna) {
    const double l = n(mean, 0.1 * mean);
    a.extra[std::string(name) + "_L"] = l;
    a.extra[std::string(name) + "_R"] = jitter(l);
  }
  return a;
}

}  // namespace

const std::vector<std::string>& cipic_subject_ids() {
  static const std::vector<std::string> ids = {
      "003", "008", "009", "010", "011", "012", "015", "017", "018", "019", "020", "021",
      "027", "028", "033", "040", "044", "048", "050", "051", "058", "059", "060", "061",
      "065", "119", "124", "126", "127", "131", "133", "134", "135", "137", "147", "148",
      "152", "153", "154", "155", "156", "158", "162", "163", "165"};
  return ids;
}

double model_itd_ms(const AnthroParams& anthro, double azimuth_deg, double elevation_deg) {
  (void)elevation_deg;
  const double lat = azimuth_deg * kPi / 180.0;
  return head_radius_m(anthro) / kSoundSpeed * (lat + std::sin(lat)) * 1000.0;
}

HrtfDataset make_synthetic_cipic(const SyntheticOptions& options) {
  HrtfDataset ds;
  ds.grid = DirectionGrid::cipic();
  ds.sample_rate = kFs;
  ds.hrir_length = kN;
  ds.generic_subject_id = "165";
  const auto& ids = cipic_subject_ids();

  std::mt19937_64 rng(options.seed);
  std::vector<SubjectTraits> traits(ids.size());
  for (auto& t : traits) {
    t.anthro = draw_anthro(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    t.ripple_phase = 2.0 * kPi * u(rng);
    t.ripple_cycles = 3.0 + 4.0 * u(rng);
    t.ripple_scale = options.ripple_db * (0.5 + u(rng));
    t.noise_seed = rng();
    t.echo_gain = options.echo_gain;
    std::normal_distribution<double> g(0.0, options.idiosyncrasy);
    for (int e = 0; e < 2; ++e) {
      t.pinna_jitter[static_cast<std::size_t>(e)] = 1.0 + g(rng);
      t.resonance_jitter[static_cast<std::size_t>(e)] = 1.0 + g(rng);
    }
  }

  ds.subjects.resize(ids.size());
  parallel_for(ids.size(), [&](std::size_t s) {
    const SubjectTraits& t = traits[s];
    SubjectRecord& rec = ds.subjects[s];
    rec.subject_id = ids[s];
    const auto d_count = static_cast<Eigen::Index>(ds.grid.size());
    rec.hrir_left.resize(d_count, static_cast<Eigen::Index>(kN));
    rec.hrir_right.resize(d_count, static_cast<Eigen::Index>(kN));
    std::mt19937_64 noise(t.noise_seed);
    std::normal_distribution<double> gauss(0.0, options.noise_db);
    for (std::size_t d = 0; d < ds.grid.size(); ++d) {
      const Direction dir = ds.grid.at(d);
      const double itd_samples = model_itd_ms(t.anthro, dir.azimuth_deg, dir.elevation_deg) * kFs / 1000.0;
      for (Ear ear : kBothEars) {
        auto half = model_log_magnitude(t, ear, dir.azimuth_deg, dir.elevation_deg);
        for (double& v : half) v += gauss(noise);
        std::vector<double> db(kN);
        for (std::size_t k = 0; k < kN; ++k) db[k] = half[k <= kN / 2 ? k : kN - k];
        const auto mp = dsp::min_phase_hrir(dsp::db_to_magnitude(db));
        // Positive ITD: the right ear leads, so the left ear is delayed.
        const double lag = ear == Ear::kLeft ? itd_samples / 2.0 : -itd_samples / 2.0;
        const auto h = fractional_delay(mp, 30.0 + lag);
        auto& m = ear == Ear::kLeft ? rec.hrir_left : rec.hrir_right;
        for (std::size_t i = 0; i < kN; ++i) {
          m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)) = static_cast<float>(h[i]);
        }
      }
    }
    if (ids[s] == "021") {
      AnthroParams a = t.anthro;
      a.left = PinnaParams{};
      a.right = PinnaParams{};
      rec.anthro = a;
    } else if (kIncomplete.count(ids[s]) == 0) {
      rec.anthro = t.anthro;
    } else if (ids[s] != "165") {
      AnthroParams a = t.anthro;
      a.x12.reset();
      rec.anthro = a;
    }
  });

  std::vector<std::string> full;
  for (const auto& s : ds.subjects) {
    if (s.anthro && s.anthro->complete()) full.push_back(s.subject_id);
  }
  for (std::size_t i = 0; i < full.size(); ++i) {
    (i % 5 == 2 && ds.test_subjects.size() < 7 ? ds.test_subjects : ds.training_subjects).push_back(full[i]);
  }
  return ds;
}

std::filesystem::path shared_synthetic_cipic_dir() {
  if (const char* env = std::getenv("HRTFKIT_SYNTHETIC_CACHE")) return env;
  return std::filesystem::temp_directory_path() / "hrtfkit_synthetic_cipic_v1";
}

const HrtfDataset& shared_synthetic_cipic() {
  static std::once_flag once;
  static HrtfDataset ds;
  std::call_once(once, [] {
    const auto dir = shared_synthetic_cipic_dir();
    if (std::filesystem::exists(dir / "manifest.json")) {
      try {
        ds = load_dataset(dir);
        return;
      } catch (const std::exception&) {
        std::filesystem::remove_all(dir);
      }
    }
    ds = make_synthetic_cipic();
    // Write to a private directory first so concurrent test processes never
    // observe a partial dataset.
    const auto tmp = dir.string() + ".tmp" + std::to_string(std::random_device{}());
    save_dataset(ds, tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, dir, ec);
    if (ec) std::filesystem::remove_all(tmp);
  });
  return ds;
}

}  // namespace hrtfkit::testing
