// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// On-disk formats.
//
// Manifest (JSON lines): a header line
//   {"format":"partconf-manifest","version":1,"features":"<file>","dim":D}
// followed by one line per image
//   {"image_id":..,"width":..,"height":..,"label":"positive"|"negative",
//    "patches":[{"patch_id":..,"box":[left,top,right,bottom]},...]}
//
// Feature file (binary, little-endian): "PCFV", u32 version (1), u32 D,
// u64 count, then count x D float32 values row-major; row i belongs to the
// i-th patch of the manifest in file order.
//
// Boxes are always serialized as [left, top, right, bottom].

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "partconf/error.hpp"
#include "partconf/features.hpp"
#include "partconf/geom.hpp"

namespace partconf {

using json = nlohmann::json;

inline json box_to_json(const Box& b) {
  return json::array({b.x_left, b.y_top, b.x_right, b.y_bottom});
}

inline Box box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) fail(ErrorKind::kSchema, "box must be [l, t, r, b]");
  for (const auto& v : j) {
    if (!v.is_number()) fail(ErrorKind::kSchema, "box coordinates must be numbers");
  }
  Box b = box_ltrb(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
  if (!b.valid()) fail(ErrorKind::kSchema, "box has crossed edges");
  return b;
}

// Typed field access that reports schema violations instead of json errors.
template <typename T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    fail(ErrorKind::kSchema, std::string("missing field '") + name + "'");
  }
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::kSchema, std::string("field '") + name + "' has the wrong type");
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kMissingInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kMissingInput, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::kMissingInput, "write failed for " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kSchema, path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

namespace detail {

template <typename T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) fail(ErrorKind::kSchema, "feature file truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline constexpr std::uint32_t kFeatureFileVersion = 1;

inline void write_features(const std::filesystem::path& path, const std::vector<FeatureVector>& rows,
                           std::size_t dim) {
  std::string buf = "PCFV";
  detail::put_le<std::uint32_t>(buf, kFeatureFileVersion);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(dim));
  detail::put_le<std::uint64_t>(buf, rows.size());
  for (const auto& row : rows) {
    if (row.size() != dim) fail(ErrorKind::kInvalidArgument, "feature row has wrong dimension");
    for (float v : row) detail::put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
  }
  write_text(path, buf);
}

inline std::vector<FeatureVector> read_features(const std::filesystem::path& path,
                                                std::size_t* dim_out = nullptr) {
  const auto buf = read_text(path);
  if (buf.size() < 4 || buf.compare(0, 4, "PCFV") != 0) {
    fail(ErrorKind::kSchema, path.string() + ": bad feature file magic");
  }
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint32_t>(buf, pos);
  if (version != kFeatureFileVersion) fail(ErrorKind::kSchema, "unsupported feature file version");
  const auto dim = detail::get_le<std::uint32_t>(buf, pos);
  const auto count = detail::get_le<std::uint64_t>(buf, pos);
  if (buf.size() - pos != count * dim * sizeof(float)) {
    fail(ErrorKind::kSchema, path.string() + ": feature file size does not match header");
  }
  std::vector<FeatureVector> rows(count, FeatureVector(dim));
  for (auto& row : rows) {
    for (auto& v : row) v = std::bit_cast<float>(detail::get_le<std::uint32_t>(buf, pos));
  }
  if (dim_out) *dim_out = dim;
  return rows;
}

inline std::string label_name(Label l) { return l == Label::kPositive ? "positive" : "negative"; }

inline Label label_from_name(const std::string& s) {
  if (s == "positive") return Label::kPositive;
  if (s == "negative") return Label::kNegative;
  fail(ErrorKind::kSchema, "label must be 'positive' or 'negative', got '" + s + "'");
}

// Writes <manifest> and the feature file next to it. Patches are written
// grouped by image in dataset image order.
inline void write_dataset(const std::filesystem::path& manifest, const Dataset& d,
                          const std::string& feature_file = "features.bin") {
  std::string text = json{{"format", "partconf-manifest"},
                          {"version", 1},
                          {"features", feature_file},
                          {"dim", d.dim()}}
                         .dump() +
                     "\n";
  std::vector<FeatureVector> rows;
  for (const auto& im : d.images()) {
    json patches = json::array();
    for (std::size_t j : d.patch_indices_of(im.image_id)) {
      const auto& p = d.patches()[j];
      patches.push_back({{"patch_id", p.patch_id}, {"box", box_to_json(p.box)}});
      rows.push_back(p.feature);
    }
    text += json{{"image_id", im.image_id},
                 {"width", im.width},
                 {"height", im.height},
                 {"label", label_name(im.label)},
                 {"patches", patches}}
                .dump() +
            "\n";
  }
  write_text(manifest, text);
  write_features(manifest.parent_path() / feature_file, rows, d.dim());
}

inline Dataset read_dataset(const std::filesystem::path& manifest) {
  const auto text = read_text(manifest);
  std::istringstream lines(text);
  std::string line;
  std::optional<json> header;
  std::vector<ImageInfo> images;
  std::vector<std::pair<PatchId, std::pair<ImageId, Box>>> layout;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      fail(ErrorKind::kSchema, manifest.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    if (!header) {
      if (field<std::string>(j, "format") != "partconf-manifest") {
        fail(ErrorKind::kSchema, "manifest header must have format 'partconf-manifest'");
      }
      header = j;
      continue;
    }
    ImageInfo im;
    im.image_id = field<ImageId>(j, "image_id");
    im.width = field<double>(j, "width");
    im.height = field<double>(j, "height");
    im.label = label_from_name(field<std::string>(j, "label"));
    images.push_back(im);
    for (const auto& p : field<json>(j, "patches")) {
      layout.push_back({field<PatchId>(p, "patch_id"), {im.image_id, box_from_json(field<json>(p, "box"))}});
    }
  }
  if (!header) fail(ErrorKind::kSchema, manifest.string() + ": empty manifest");
  std::size_t dim = 0;
  const auto rows =
      read_features(manifest.parent_path() / field<std::string>(*header, "features"), &dim);
  if (dim != field<std::size_t>(*header, "dim")) {
    fail(ErrorKind::kSchema, "feature file dimension disagrees with manifest");
  }
  if (rows.size() != layout.size()) {
    fail(ErrorKind::kSchema, "feature file row count disagrees with manifest");
  }
  std::vector<PatchRecord> patches;
  patches.reserve(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    patches.push_back(PatchRecord{layout[i].first, layout[i].second.first, layout[i].second.second, rows[i]});
  }
  return Dataset(std::move(images), std::move(patches), dim);
}

inline json boxes_to_json(const std::map<ImageId, Box>& boxes) {
  json j = json::object();
  for (const auto& [img, box] : boxes) j[std::to_string(img)] = box_to_json(box);
  return j;
}

// JSON object keys are strings; image ids travel as their decimal form.
inline ImageId image_key(const std::string& key) {
  try {
    std::size_t used = 0;
    const ImageId id = std::stoll(key, &used);
    if (used == key.size()) return id;
  } catch (const std::logic_error&) {
  }
  fail(ErrorKind::kSchema, "image key '" + key + "' is not an integer");
}

inline std::map<ImageId, Box> boxes_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::kSchema, "expected an object of image_id -> box");
  std::map<ImageId, Box> out;
  for (const auto& [key, value] : j.items()) out.emplace(image_key(key), box_from_json(value));
  return out;
}

}  // namespace partconf
