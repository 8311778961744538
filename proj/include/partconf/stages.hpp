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

// JSON forms of every stage output. Each document carries a "stage" tag so a
// later stage can reject input produced by the wrong step.
//
//   clusters        {stage, k, theta, max_degree, value, clusters:[{cluster_id,
//                    rep_patch_id, members, gain, coverage}]}
//   configs         {stage, configurations:[{label:{ci,cj,loc_bin}, score,
//                    images:[{image_id, patch1, patch2, b1, b2, foreground}]}],
//                    fallback_cluster, estimates}
//   hard_negatives  configs fields plus hard_negatives:[{image_id, foreground,
//                    negatives:[{box, kind, shrunk}]}]
//   model           {stage, negatives, dim, weights, bias, lambda, localizations}
//   metrics         {stage, corloc, ap, per_image}
//
// estimates: {"<image_id>": {box, pair:[p1,p2] | null}}

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "partconf/io.hpp"
#include "partconf/pipeline.hpp"
#include "partconf/synth.hpp"

namespace partconf {

inline void expect_stage(const json& j, const std::string& want) {
  if (!j.is_object() || !j.contains("stage")) {
    fail(ErrorKind::kSchema, "input has no 'stage' field; expected " + want + " output");
  }
  const auto got = field<std::string>(j, "stage");
  if (got != want) {
    fail(ErrorKind::kStageOrder, "expected " + want + " output, got " + got + " output");
  }
}

inline std::string stage_of(const json& j) {
  if (!j.is_object() || !j.contains("stage")) fail(ErrorKind::kSchema, "input has no 'stage' field");
  return field<std::string>(j, "stage");
}

namespace detail {

// Calls fn(key, value) for every member and rejects keys outside `known`.
template <typename Fn>
void for_known_keys(const json& j, std::initializer_list<const char*> known, const char* what,
                    Fn&& fn) {
  if (!j.is_object()) fail(ErrorKind::kSchema, std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(ErrorKind::kSchema, std::string("unknown ") + what + " key '" + key + "'");
    fn(key, value);
  }
}

template <typename T>
T as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::kSchema, "key '" + key + "' has the wrong type");
  }
}

// Non-negative integers only; json would otherwise wrap -1 into a huge count.
inline std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    fail(ErrorKind::kSchema, "key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace detail

// ---- configuration files -------------------------------------------------

inline json config_to_json(const PipelineConfig& c) {
  json j;
  j["k"] = c.k ? json(*c.k) : json(nullptr);
  j["theta"] = c.theta ? json(*c.theta) : json(nullptr);
  j["iou_min"] = c.iou_min;
  j["max_clusters"] = c.max_clusters ? json(*c.max_clusters) : json(nullptr);
  j["transform_widths"] = {c.widths.dx, c.widths.dy, c.widths.scale, c.widths.aspect};
  j["location_cell"] = c.location_cell;
  j["min_component"] = c.mining.min_component;
  j["alpha"] = c.mining.alpha;
  j["hardneg_max_ratio"] = c.hardneg_max_ratio;
  j["neighbor_max_iou"] = c.neighbor_max_iou;
  j["negatives"] = std::string(to_string(c.negatives));
  j["lambda"] = c.detector.train.lambda;
  j["epochs"] = c.detector.train.epochs;
  j["mining_margin"] = c.detector.mining_margin;
  j["mining_rounds"] = c.detector.mining_rounds;
  j["lsvm_rounds"] = c.detector.lsvm_rounds;
  j["nms_overlap"] = c.nms_overlap;
  j["seed"] = c.seed;
  return j;
}

// Missing keys keep their defaults; null clears an optional.
inline PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  auto opt_count = [](const json& v, const std::string& key) -> std::optional<std::size_t> {
    if (v.is_null()) return std::nullopt;
    return detail::as_count(v, key);
  };
  detail::for_known_keys(
      j,
      {"k", "theta", "iou_min", "max_clusters", "transform_widths", "location_cell",
       "min_component", "alpha", "hardneg_max_ratio", "neighbor_max_iou", "negatives", "lambda",
       "epochs", "mining_margin", "mining_rounds", "lsvm_rounds", "nms_overlap", "seed"},
      "config", [&](const std::string& key, const json& v) {
        if (key == "k") c.k = opt_count(v, key);
        else if (key == "theta") c.theta = opt_count(v, key);
        else if (key == "iou_min") c.iou_min = detail::as<double>(v, key);
        else if (key == "max_clusters") c.max_clusters = opt_count(v, key);
        else if (key == "transform_widths") {
          const auto w = detail::as<std::vector<double>>(v, key);
          if (w.size() != 4) fail(ErrorKind::kSchema, "transform_widths must have 4 entries");
          c.widths = TransformWidths{w[0], w[1], w[2], w[3]};
        } else if (key == "location_cell") c.location_cell = detail::as<double>(v, key);
        else if (key == "min_component") c.mining.min_component = detail::as_count(v, key);
        else if (key == "alpha") c.mining.alpha = detail::as<double>(v, key);
        else if (key == "hardneg_max_ratio") c.hardneg_max_ratio = detail::as<double>(v, key);
        else if (key == "neighbor_max_iou") c.neighbor_max_iou = detail::as<double>(v, key);
        else if (key == "negatives") c.negatives = negative_mode_from_name(detail::as<std::string>(v, key));
        else if (key == "lambda") c.detector.train.lambda = detail::as<double>(v, key);
        else if (key == "epochs") c.detector.train.epochs = detail::as_count(v, key);
        else if (key == "mining_margin") c.detector.mining_margin = detail::as<double>(v, key);
        else if (key == "mining_rounds") c.detector.mining_rounds = detail::as_count(v, key);
        else if (key == "lsvm_rounds") c.detector.lsvm_rounds = detail::as_count(v, key);
        else if (key == "nms_overlap") c.nms_overlap = detail::as<double>(v, key);
        else if (key == "seed") c.seed = detail::as<std::uint64_t>(v, key);
      });
  c.validate();
  return c;
}

inline json synth_spec_to_json(const SynthSpec& s) {
  return json{{"seed", s.seed},
              {"class_seed", s.class_seed},
              {"num_positive", s.num_positive},
              {"num_negative", s.num_negative},
              {"image_width", s.image_width},
              {"image_height", s.image_height},
              {"dim", s.dim},
              {"part_a", {s.part_a_width, s.part_a_height}},
              {"part_b", {s.part_b_width, s.part_b_height}},
              {"offset", {s.offset_x, s.offset_y}},
              {"offset_jitter", s.offset_jitter},
              {"scale_jitter", s.scale_jitter},
              {"feature_noise", s.feature_noise},
              {"clutter_scale", s.clutter_scale},
              {"background_bias", s.background_bias},
              {"decoy_fraction", s.decoy_fraction},
              {"num_distractors", s.num_distractors},
              {"num_proposals", s.num_proposals}};
}

inline SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  auto pair = [](const json& v, const std::string& key) {
    const auto p = detail::as<std::vector<double>>(v, key);
    if (p.size() != 2) fail(ErrorKind::kSchema, "key '" + key + "' must have 2 entries");
    return p;
  };
  detail::for_known_keys(
      j,
      {"seed", "class_seed", "num_positive", "num_negative", "image_width", "image_height", "dim",
       "part_a", "part_b", "offset", "offset_jitter", "scale_jitter", "feature_noise",
       "clutter_scale", "background_bias", "decoy_fraction", "num_distractors", "num_proposals"},
      "synth spec", [&](const std::string& key, const json& v) {
        if (key == "seed") s.seed = detail::as<std::uint64_t>(v, key);
        else if (key == "class_seed") s.class_seed = detail::as<std::uint64_t>(v, key);
        else if (key == "num_positive") s.num_positive = detail::as_count(v, key);
        else if (key == "num_negative") s.num_negative = detail::as_count(v, key);
        else if (key == "image_width") s.image_width = detail::as<double>(v, key);
        else if (key == "image_height") s.image_height = detail::as<double>(v, key);
        else if (key == "dim") s.dim = detail::as_count(v, key);
        else if (key == "part_a") {
          const auto p = pair(v, key);
          s.part_a_width = p[0];
          s.part_a_height = p[1];
        } else if (key == "part_b") {
          const auto p = pair(v, key);
          s.part_b_width = p[0];
          s.part_b_height = p[1];
        } else if (key == "offset") {
          const auto p = pair(v, key);
          s.offset_x = p[0];
          s.offset_y = p[1];
        } else if (key == "offset_jitter") s.offset_jitter = static_cast<std::int64_t>(detail::as_count(v, key));
        else if (key == "scale_jitter") s.scale_jitter = detail::as<double>(v, key);
        else if (key == "feature_noise") s.feature_noise = detail::as<double>(v, key);
        else if (key == "clutter_scale") s.clutter_scale = detail::as<double>(v, key);
        else if (key == "background_bias") s.background_bias = detail::as<double>(v, key);
        else if (key == "decoy_fraction") s.decoy_fraction = detail::as<double>(v, key);
        else if (key == "num_distractors") s.num_distractors = detail::as_count(v, key);
        else if (key == "num_proposals") s.num_proposals = detail::as_count(v, key);
      });
  return s;
}

// ---- discovery -----------------------------------------------------------

inline json clusters_to_json(const Discovery& disc) {
  json clusters = json::array();
  for (std::size_t i = 0; i < disc.clusters.size(); ++i) {
    const auto& c = disc.clusters[i];
    clusters.push_back({{"cluster_id", c.cluster_id},
                        {"rep_patch_id", c.representative},
                        {"members", c.members},
                        {"gain", disc.selection.gains[i]},
                        {"coverage", c.coverage}});
  }
  return json{{"stage", "clusters"},
              {"k", disc.k},
              {"theta", disc.theta},
              {"max_degree", disc.constraints.max_degree()},
              {"value", disc.selection.value},
              {"clusters", clusters}};
}

inline std::vector<Cluster> clusters_from_json(const json& j) {
  expect_stage(j, "clusters");
  std::vector<Cluster> out;
  for (const auto& c : field<json>(j, "clusters")) {
    Cluster cl;
    cl.cluster_id = field<ClusterId>(c, "cluster_id");
    cl.representative = field<PatchId>(c, "rep_patch_id");
    cl.members = field<std::vector<PatchId>>(c, "members");
    cl.coverage = field<std::size_t>(c, "coverage");
    out.push_back(std::move(cl));
  }
  return out;
}

// ---- configurations --------------------------------------------------------

inline json estimates_to_json(const std::map<ImageId, ForegroundEstimate>& est) {
  json j = json::object();
  for (const auto& [img, e] : est) {
    j[std::to_string(img)] = {
        {"box", box_to_json(e.box)},
        {"pair", e.pair ? json::array({e.pair->first, e.pair->second}) : json(nullptr)}};
  }
  return j;
}

inline std::map<ImageId, ForegroundEstimate> estimates_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::kSchema, "estimates must be an object");
  std::map<ImageId, ForegroundEstimate> out;
  for (const auto& [key, value] : j.items()) {
    ForegroundEstimate e;
    e.image_id = image_key(key);
    e.box = box_from_json(field<json>(value, "box"));
    const auto pair = field<json>(value, "pair");
    if (!pair.is_null()) {
      const auto p = detail::as<std::vector<PatchId>>(pair, "pair");
      if (p.size() != 2) fail(ErrorKind::kSchema, "pair must have 2 entries");
      e.pair = std::make_pair(p[0], p[1]);
    }
    out.emplace(e.image_id, e);
  }
  return out;
}

inline json mining_to_json(const ConfigMining& m) {
  json confs = json::array();
  for (const auto& c : m.result.configurations) {
    json images = json::array();
    for (const auto& im : c.images) {
      images.push_back({{"image_id", im.image_id},
                        {"patch1", im.patch1},
                        {"patch2", im.patch2},
                        {"b1", box_to_json(im.box1)},
                        {"b2", box_to_json(im.box2)},
                        {"foreground", box_to_json(im.foreground)}});
    }
    confs.push_back({{"label",
                      {{"ci", c.label.ci},
                       {"cj", c.label.cj},
                       {"loc_bin", {c.label.location[0], c.label.location[1]}}}},
                     {"score", c.score},
                     {"images", images}});
  }
  return json{{"stage", "configs"},
              {"edges", m.graph.edges.size()},
              {"configurations", confs},
              {"fallback_cluster", m.result.fallback_cluster ? json(*m.result.fallback_cluster)
                                                             : json(nullptr)},
              {"estimates", estimates_to_json(m.estimates)}};
}

// Extends a configs document with the strips generated from it.
inline json hard_negatives_to_json(json configs, const std::vector<ImageHardNegatives>& hn,
                                   const std::vector<ImageId>& skipped) {
  expect_stage(configs, "configs");
  configs["stage"] = "hard_negatives";
  json list = json::array();
  for (const auto& h : hn) {
    json negs = json::array();
    for (const auto& n : h.negatives) {
      negs.push_back({{"box", box_to_json(n.box)},
                      {"kind", std::string(to_string(n.kind))},
                      {"shrunk", n.shrunk}});
    }
    list.push_back({{"image_id", h.image_id},
                    {"foreground", box_to_json(h.foreground)},
                    {"negatives", negs}});
  }
  configs["hard_negatives"] = list;
  configs["skipped_images"] = skipped;
  return configs;
}

inline StripKind strip_kind_from_name(const std::string& s) {
  for (StripKind k : {StripKind::kLeft, StripKind::kRight, StripKind::kTop, StripKind::kBottom}) {
    if (s == to_string(k)) return k;
  }
  fail(ErrorKind::kSchema, "unknown strip kind '" + s + "'");
}

inline std::vector<ImageHardNegatives> hard_negatives_from_json(const json& j) {
  expect_stage(j, "hard_negatives");
  std::vector<ImageHardNegatives> out;
  for (const auto& h : field<json>(j, "hard_negatives")) {
    ImageHardNegatives ih;
    ih.image_id = field<ImageId>(h, "image_id");
    ih.foreground = box_from_json(field<json>(h, "foreground"));
    for (const auto& n : field<json>(h, "negatives")) {
      ih.negatives.push_back(HardNegative{box_from_json(field<json>(n, "box")),
                                          strip_kind_from_name(field<std::string>(n, "kind")),
                                          field<bool>(n, "shrunk")});
    }
    out.push_back(std::move(ih));
  }
  return out;
}

// ---- detector --------------------------------------------------------------

inline json model_to_json(const TrainingOutcome& t, NegativeMode mode) {
  json loc = json::object();
  for (const auto& [img, box] : t.localizations) loc[std::to_string(img)] = box_to_json(box);
  return json{{"stage", "model"},
              {"negatives", std::string(to_string(mode))},
              {"dim", t.model.weights.size()},
              {"weights", t.model.weights},
              {"bias", t.model.bias},
              {"lambda", t.model.lambda},
              {"localizations", loc}};
}

inline LinearModel model_from_json(const json& j) {
  expect_stage(j, "model");
  LinearModel m;
  m.weights = field<std::vector<double>>(j, "weights");
  m.bias = field<double>(j, "bias");
  m.lambda = field<double>(j, "lambda");
  if (m.weights.size() != field<std::size_t>(j, "dim")) {
    fail(ErrorKind::kSchema, "model weight count disagrees with dim");
  }
  return m;
}

inline std::string detections_to_jsonl(const std::vector<Detection>& dets) {
  std::string out;
  for (const auto& d : dets) {
    out += json{{"image_id", d.image_id},
                {"patch_id", d.patch_id},
                {"box", box_to_json(d.box)},
                {"score", d.score}}
               .dump();
    out += "\n";
  }
  return out;
}

// Localizations from any of: a plain {image_id: box} map, a configs or
// hard_negatives document (its estimates), or a model (its latent boxes).
inline std::map<ImageId, Box> localizations_from_json(const json& j) {
  if (!j.is_object() || !j.contains("stage")) return boxes_from_json(j);
  const auto stage = stage_of(j);
  if (stage == "configs" || stage == "hard_negatives") {
    std::map<ImageId, Box> out;
    for (const auto& [img, e] : estimates_from_json(field<json>(j, "estimates"))) out.emplace(img, e.box);
    return out;
  }
  if (stage == "model") return boxes_from_json(field<json>(j, "localizations"));
  fail(ErrorKind::kStageOrder, stage + " output holds no localizations");
}

inline json metrics_to_json(const std::optional<double>& corloc,
                            const std::vector<CorLocImage>& per_image,
                            const std::optional<double>& ap) {
  json rows = json::array();
  for (const auto& r : per_image) {
    rows.push_back({{"image_id", r.image_id}, {"iou", r.iou}, {"hit", r.hit}});
  }
  return json{{"stage", "metrics"},
              {"corloc", corloc ? json(*corloc) : json(nullptr)},
              {"ap", ap ? json(*ap) : json(nullptr)},
              {"per_image", rows}};
}

}  // namespace partconf
