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

#include "hrtfkit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hrtfkit/binary_io.hpp"
#include "hrtfkit/error.hpp"

namespace hrtfkit {
namespace fs = std::filesystem;
using json = nlohmann::json;

const char* ear_name(Ear ear) { return ear == Ear::kLeft ? "left" : "right"; }

const char* hemisphere_name(Hemisphere h) { return h == Hemisphere::kFront ? "front" : "rear"; }

// ---------------------------------------------------------------------------
// DirectionGrid

DirectionGrid::DirectionGrid(std::vector<double> azimuths_deg,
                             std::vector<double> elevations_deg)
    : azimuths_(std::move(azimuths_deg)), elevations_(std::move(elevations_deg)) {
  if (azimuths_.empty() || elevations_.empty()) {
    throw ValidationError("direction grid needs at least one azimuth and one elevation");
  }
  auto strictly_increasing = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
  };
  if (!strictly_increasing(azimuths_) || !strictly_increasing(elevations_)) {
    throw ValidationError("direction grid angles must be strictly increasing");
  }
}

DirectionGrid DirectionGrid::cipic() {
  std::vector<double> az = {-80, -65, -55};
  for (int a = -45; a <= 45; a += 5) az.push_back(a);
  az.insert(az.end(), {55, 65, 80});
  std::vector<double> el(50);
  for (int k = 0; k < 50; ++k) el[k] = -45.0 + 5.625 * k;
  return DirectionGrid(std::move(az), std::move(el));
}

Direction DirectionGrid::at(std::size_t index) const {
  if (index >= direction_count()) {
    throw ValidationError("direction index " + std::to_string(index) + " out of range");
  }
  return {azimuths_[index / elevations_.size()], elevations_[index % elevations_.size()]};
}

std::size_t DirectionGrid::index(std::size_t azimuth_index, std::size_t elevation_index) const {
  return azimuth_index * elevations_.size() + elevation_index;
}

std::optional<std::size_t> DirectionGrid::find(double azimuth_deg, double elevation_deg,
                                               double tol_deg) const {
  auto locate = [tol_deg](const std::vector<double>& v, double x) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::abs(v[i] - x) <= tol_deg) return i;
    }
    return std::nullopt;
  };
  const auto ai = locate(azimuths_, azimuth_deg);
  const auto ei = locate(elevations_, elevation_deg);
  if (!ai || !ei) return std::nullopt;
  return index(*ai, *ei);
}

std::optional<std::size_t> DirectionGrid::mirror(std::size_t index) const {
  const Direction d = at(index);
  return find(-d.azimuth_deg, d.elevation_deg);
}

bool DirectionGrid::is_cipic() const {
  const auto ref = cipic();
  auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > 1e-6) return false;
    }
    return true;
  };
  return close(azimuths_, ref.azimuths_) && close(elevations_, ref.elevations_);
}

void DirectionGrid::require_cipic() const {
  if (!is_cipic()) {
    throw ValidationError("this pipeline requires the 25x50 CIPIC direction grid; got " +
                          std::to_string(azimuths_.size()) + "x" +
                          std::to_string(elevations_.size()));
  }
}

Hemisphere hemisphere_of(double elevation_deg) {
  return elevation_deg <= 90.0 ? Hemisphere::kFront : Hemisphere::kRear;
}

HemispherePartition partition_hemispheres(const DirectionGrid& grid) {
  HemispherePartition part;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (hemisphere_of(grid.at(i).elevation_deg) == Hemisphere::kFront) {
      part.front_indices.push_back(i);
    } else {
      part.rear_indices.push_back(i);
    }
  }
  return part;
}

// ---------------------------------------------------------------------------
// Anthropometry

namespace {

double require_value(const std::optional<double>& v, const char* name) {
  if (!v) throw ValidationError(std::string("anthropometric parameter ") + name + " is missing");
  if (!(*v > 0.0) || !std::isfinite(*v)) {
    throw ValidationError(std::string("anthropometric parameter ") + name +
                          " must be strictly positive");
  }
  return *v;
}

struct ColumnRef {
  const char* name;
  std::optional<double> AnthroParams::*head = nullptr;
  Ear ear = Ear::kLeft;
  std::optional<double> PinnaParams::*pinna = nullptr;
};

const std::vector<ColumnRef>& anthro_columns() {
  static const std::vector<ColumnRef> cols = {
      {"x1", &AnthroParams::x1},
      {"x2", &AnthroParams::x2},
      {"x3", &AnthroParams::x3},
      {"x12", &AnthroParams::x12},
      {"d1_L", nullptr, Ear::kLeft, &PinnaParams::d1},
      {"d3_L", nullptr, Ear::kLeft, &PinnaParams::d3},
      {"d4_L", nullptr, Ear::kLeft, &PinnaParams::d4},
      {"d5_L", nullptr, Ear::kLeft, &PinnaParams::d5},
      {"d6_L", nullptr, Ear::kLeft, &PinnaParams::d6},
      {"d1_R", nullptr, Ear::kRight, &PinnaParams::d1},
      {"d3_R", nullptr, Ear::kRight, &PinnaParams::d3},
      {"d4_R", nullptr, Ear::kRight, &PinnaParams::d4},
      {"d5_R", nullptr, Ear::kRight, &PinnaParams::d5},
      {"d6_R", nullptr, Ear::kRight, &PinnaParams::d6},
  };
  return cols;
}

std::optional<double>& column_slot(AnthroParams& a, const ColumnRef& col) {
  if (col.head) return a.*(col.head);
  PinnaParams& p = col.ear == Ear::kLeft ? a.left : a.right;
  return p.*(col.pinna);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

std::array<double, 8> AnthroParams::spectral_inputs(Ear ear) const {
  const PinnaParams& p = pinna(ear);
  return {require_value(x1, "x1"),  require_value(x3, "x3"),  require_value(x12, "x12"),
          require_value(p.d1, "d1"), require_value(p.d3, "d3"), require_value(p.d4, "d4"),
          require_value(p.d5, "d5"), require_value(p.d6, "d6")};
}

std::array<double, 3> AnthroParams::itd_inputs() const {
  return {require_value(x1, "x1"), require_value(x2, "x2"), require_value(x3, "x3")};
}

void AnthroParams::validate() const {
  AnthroParams copy = *this;
  for (const auto& col : anthro_columns()) {
    const auto& v = column_slot(copy, col);
    if (v && (!(*v > 0.0) || !std::isfinite(*v))) {
      throw ValidationError(std::string("anthropometric parameter ") + col.name +
                            " must be strictly positive");
    }
  }
}

std::map<std::string, AnthroParams> parse_anthro_csv(const std::string& text,
                                                     const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source_name + ": empty anthropometry table");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "subject_id") {
    throw ValidationError(source_name + ": first column must be subject_id");
  }
  std::vector<int> mapping(header.size(), -1);
  const auto& cols = anthro_columns();
  for (std::size_t c = 1; c < header.size(); ++c) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (header[c] == cols[k].name) mapping[c] = static_cast<int>(k);
    }
  }
  for (const auto& col : cols) {
    if (std::find(header.begin(), header.end(), col.name) == header.end()) {
      throw ValidationError(source_name + ": missing column " + col.name);
    }
  }
  std::map<std::string, AnthroParams> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() > header.size()) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": too many cells");
    }
    AnthroParams a;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c].empty()) continue;
      double value = 0.0;
      const char* first = cells[c].data();
      const char* last = first + cells[c].size();
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last) {
        throw ValidationError(source_name + ":" + std::to_string(line_no) + ": bad number '" +
                              cells[c] + "' in column " + header[c]);
      }
      if (mapping[c] >= 0) {
        column_slot(a, cols[static_cast<std::size_t>(mapping[c])]) = value;
      } else {
        a.extra[header[c]] = value;
      }
    }
    try {
      a.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    rows[cells.at(0)] = std::move(a);
  }
  return rows;
}

std::string format_anthro_csv(const std::vector<std::pair<std::string, AnthroParams>>& rows) {
  std::set<std::string> extra_names;
  for (const auto& [id, a] : rows) {
    for (const auto& [name, v] : a.extra) extra_names.insert(name);
  }
  std::ostringstream out;
  out << "subject_id";
  for (const auto& col : anthro_columns()) out << ',' << col.name;
  for (const auto& name : extra_names) out << ',' << name;
  out << '\n';
  for (const auto& [id, a] : rows) {
    AnthroParams copy = a;
    out << id;
    for (const auto& col : anthro_columns()) {
      out << ',';
      if (const auto& v = column_slot(copy, col)) out << format_number(*v);
    }
    for (const auto& name : extra_names) {
      out << ',';
      if (auto it = a.extra.find(name); it != a.extra.end()) out << format_number(it->second);
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Dataset

AnthroParams parse_anthro_json(const std::string& text, const std::string& source_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source_name + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError(source_name + ": expected a JSON object");
  AnthroParams a;
  const auto& cols = anthro_columns();
  for (const auto& [key, value] : j.items()) {
    if (key == "subject_id" || value.is_null()) continue;
    if (!value.is_number()) {
      throw ValidationError(source_name + ": value of " + key + " is not a number");
    }
    const auto it = std::find_if(cols.begin(), cols.end(),
                                 [&](const ColumnRef& c) { return key == c.name; });
    if (it != cols.end()) {
      column_slot(a, *it) = value.get<double>();
    } else {
      a.extra[key] = value.get<double>();
    }
  }
  try {
    a.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source_name + ": " + e.what());
  }
  return a;
}

std::string format_anthro_json(const AnthroParams& anthro) {
  json j = json::object();
  AnthroParams copy = anthro;
  for (const auto& col : anthro_columns()) {
    const auto& v = column_slot(copy, col);
    j[col.name] = v ? json(*v) : json(nullptr);
  }
  for (const auto& [name, v] : anthro.extra) j[name] = v;
  return j.dump(2) + "\n";
}

std::span<const float> SubjectRecord::hrir(Ear ear, std::size_t direction) const {
  const HrirMatrix& m = hrir(ear);
  return {m.data() + direction * static_cast<std::size_t>(m.cols()),
          static_cast<std::size_t>(m.cols())};
}

const SubjectRecord* HrtfDataset::find_subject(const std::string& id) const {
  for (const auto& s : subjects) {
    if (s.subject_id == id) return &s;
  }
  return nullptr;
}

const SubjectRecord& HrtfDataset::subject(const std::string& id) const {
  if (const auto* s = find_subject(id)) return *s;
  throw ValidationError("unknown subject '" + id + "'");
}

void HrtfDataset::validate() const {
  if (!(sample_rate > 0.0)) throw ValidationError("sample_rate must be positive");
  if (hrir_length == 0) throw ValidationError("hrir_length must be positive");
  const std::size_t d = grid.size();
  std::set<std::string> ids;
  for (const auto& s : subjects) {
    if (!ids.insert(s.subject_id).second) {
      throw ValidationError("duplicate subject id '" + s.subject_id + "'");
    }
    for (Ear ear : kBothEars) {
      const auto& m = s.hrir(ear);
      if (static_cast<std::size_t>(m.rows()) != d ||
          static_cast<std::size_t>(m.cols()) != hrir_length) {
        throw ValidationError("subject " + s.subject_id + " " + ear_name(ear) +
                              " HRIR shape " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + " does not match " + std::to_string(d) +
                              "x" + std::to_string(hrir_length));
      }
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          if (!std::isfinite(m(r, c))) {
            const auto dir = grid.at(static_cast<std::size_t>(r));
            throw ValidationError(
                "subject " + s.subject_id + " " + ear_name(ear) + " ear: non-finite sample " +
                std::to_string(c) + " at direction " + std::to_string(r) + " (az " +
                format_number(dir.azimuth_deg) + ", el " + format_number(dir.elevation_deg) +
                "), float offset " + std::to_string(r * m.cols() + c));
          }
        }
      }
    }
    if (s.itd_ms) {
      if (s.itd_ms->size() != d) {
        throw ValidationError("subject " + s.subject_id + ": ITD array has " +
                              std::to_string(s.itd_ms->size()) + " values, expected " +
                              std::to_string(d));
      }
      for (std::size_t i = 0; i < d; ++i) {
        const double v = (*s.itd_ms)[i];
        if (!std::isfinite(v) || std::abs(v) >= 1.5) {
          throw ValidationError("subject " + s.subject_id + ": ITD at direction " +
                                std::to_string(i) + " is outside (-1.5, 1.5) ms");
        }
      }
    }
    if (s.anthro) s.anthro->validate();
  }
  auto check_listed = [&](const std::vector<std::string>& list, const char* what) {
    for (const auto& id : list) {
      if (!ids.count(id)) {
        throw ValidationError(std::string(what) + " subject '" + id + "' is not in the dataset");
      }
    }
  };
  check_listed(training_subjects, "training");
  check_listed(test_subjects, "test");
  for (const auto& id : training_subjects) {
    if (std::find(test_subjects.begin(), test_subjects.end(), id) != test_subjects.end()) {
      throw ValidationError("subject '" + id + "' is listed as both training and test");
    }
  }
  if (!generic_subject_id.empty() && !ids.count(generic_subject_id)) {
    throw ValidationError("generic subject '" + generic_subject_id + "' is not in the dataset");
  }
}

HrtfDataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::parse_error& e) {
    throw ValidationError(manifest_path.string() + ": invalid JSON at byte " +
                          std::to_string(e.byte) + ": " + e.what());
  }
  HrtfDataset ds;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw ValidationError(manifest_path.string() + ": unknown format_version " +
                            std::to_string(version));
    }
    ds.sample_rate = manifest.at("sample_rate").get<double>();
    ds.hrir_length = manifest.at("hrir_length").get<std::size_t>();
    ds.grid = DirectionGrid(manifest.at("azimuths_deg").get<std::vector<double>>(),
                            manifest.at("elevations_deg").get<std::vector<double>>());
    ds.training_subjects =
        manifest.value("training_subjects", std::vector<std::string>{});
    ds.test_subjects = manifest.value("test_subjects", std::vector<std::string>{});
    ds.generic_subject_id = manifest.value("generic_subject_id", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }

  std::map<std::string, AnthroParams> anthro;
  if (fs::exists(dir / "anthro.csv")) {
    anthro = parse_anthro_csv(read_text(dir / "anthro.csv"), (dir / "anthro.csv").string());
  }

  const std::size_t d = ds.grid.size();
  const std::size_t n = ds.hrir_length;
  for (const auto& entry : manifest.at("subjects")) {
    SubjectRecord rec;
    std::string left_file, right_file, itd_file;
    bool has_anthro = false;
    try {
      rec.subject_id = entry.at("id").get<std::string>();
      has_anthro = entry.value("has_anthro", false);
      const auto& files = entry.at("files");
      left_file = files.at("left").get<std::string>();
      right_file = files.at("right").get<std::string>();
      itd_file = files.value("itd", std::string{});
    } catch (const json::exception& e) {
      throw ValidationError(manifest_path.string() + ": subject entry: " + e.what());
    }
    auto load_ear = [&](const std::string& file) {
      const auto values = read_f32(dir / file, d * n);
      HrirMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
      std::copy(values.begin(), values.end(), m.data());
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
          const auto dir_info = ds.grid.at(i / n);
          throw ValidationError((dir / file).string() + ": subject " + rec.subject_id +
                                ": non-finite sample at direction " + std::to_string(i / n) +
                                " (az " + format_number(dir_info.azimuth_deg) + ", el " +
                                format_number(dir_info.elevation_deg) + "), byte offset " +
                                std::to_string(i * 4));
        }
      }
      return m;
    };
    rec.hrir_left = load_ear(left_file);
    rec.hrir_right = load_ear(right_file);
    if (!itd_file.empty()) rec.itd_ms = read_f32_as_double(dir / itd_file, d);
    if (has_anthro) {
      auto it = anthro.find(rec.subject_id);
      if (it == anthro.end()) {
        throw ValidationError(manifest_path.string() + ": subject " + rec.subject_id +
                              " has has_anthro=true but no row in anthro.csv");
      }
      rec.anthro = it->second;
    }
    ds.subjects.push_back(std::move(rec));
  }
  ds.validate();
  return ds;
}

void save_dataset(const HrtfDataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  json manifest;
  manifest["format_version"] = kDatasetFormatVersion;
  manifest["sample_rate"] = ds.sample_rate;
  manifest["hrir_length"] = ds.hrir_length;
  manifest["azimuths_deg"] = ds.grid.azimuths_deg();
  manifest["elevations_deg"] = ds.grid.elevations_deg();
  manifest["training_subjects"] = ds.training_subjects;
  manifest["test_subjects"] = ds.test_subjects;
  manifest["generic_subject_id"] = ds.generic_subject_id;
  json subjects = json::array();
  std::vector<std::pair<std::string, AnthroParams>> anthro_rows;
  for (const auto& s : ds.subjects) {
    json files;
    files["left"] = s.subject_id + "_L.f32";
    files["right"] = s.subject_id + "_R.f32";
    write_f32(dir / files["left"].get<std::string>(),
              {s.hrir_left.data(), static_cast<std::size_t>(s.hrir_left.size())});
    write_f32(dir / files["right"].get<std::string>(),
              {s.hrir_right.data(), static_cast<std::size_t>(s.hrir_right.size())});
    if (s.itd_ms) {
      files["itd"] = s.subject_id + "_itd.f32";
      write_f32_from_double(dir / files["itd"].get<std::string>(), *s.itd_ms);
    }
    subjects.push_back({{"id", s.subject_id}, {"has_anthro", s.anthro.has_value()},
                        {"files", files}});
    if (s.anthro) anthro_rows.emplace_back(s.subject_id, *s.anthro);
  }
  manifest["subjects"] = subjects;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "anthro.csv", format_anthro_csv(anthro_rows));
}

std::vector<std::string> subjects_with_full_anthro(const HrtfDataset& ds) {
  std::vector<std::string> ids;
  for (const auto& s : ds.subjects) {
    if (s.anthro && s.anthro->complete()) ids.push_back(s.subject_id);
  }
  return ids;
}

SplitPlan make_split(std::size_t count, std::size_t test_stride, std::size_t valid_stride) {
  if (test_stride == 0 || valid_stride == 0) throw ValidationError("split strides must be >= 1");
  if (count < test_stride * valid_stride) {
    throw ValidationError("cannot split " + std::to_string(count) +
                          " items with strides " + std::to_string(test_stride) + "/" +
                          std::to_string(valid_stride));
  }
  SplitPlan plan;
  plan.count = count;
  plan.test_stride = test_stride;
  plan.valid_stride = valid_stride;
  std::size_t remaining = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % test_stride == 0) {
      plan.test_idx.push_back(i);
    } else if (remaining++ % valid_stride == 0) {
      plan.valid_idx.push_back(i);
    } else {
      plan.train_idx.push_back(i);
    }
  }
  return plan;
}

}  // namespace hrtfkit
