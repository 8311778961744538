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

// partconf: file-based driver for the discovery and detection pipeline.
//
//   synth -> discover -> mine-configs -> hardneg -> train -> evaluate
//
// Failures print one JSON object {"error": kind, "message": text} on stderr.
// Exit codes: 1 other, 2 usage / invalid argument, 3 missing input,
// 4 schema, 5 stage order, 6 insufficient data, 7 numeric.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "partconf/benchmark.hpp"
#include "partconf/stages.hpp"

namespace fs = std::filesystem;
using namespace partconf;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kInvalidArgument: return 2;
    case ErrorKind::kMissingInput: return 3;
    case ErrorKind::kSchema: return 4;
    case ErrorKind::kStageOrder: return 5;
    case ErrorKind::kInsufficientData: return 6;
    case ErrorKind::kNumeric: return 7;
  }
  return 1;
}

void report(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

PipelineConfig load_config(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : config_from_json(read_json(c.config));
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void emit(const std::string& out, const json& j) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(out, j);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised part-configuration discovery and detection"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "pipeline configuration (JSON)");
  app.add_option("--seed", common.seed, "seed override");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_spec, synth_out;
  synth->add_option("--spec", synth_spec, "synthetic dataset spec (JSON)");
  synth->add_option("--out", synth_out, "output directory")->required();

  // discover
  auto* disc = app.add_subcommand("discover", "select discriminative clusters");
  std::string disc_in, disc_out;
  disc->add_option("--in", disc_in, "dataset manifest")->required();
  disc->add_option("--out", disc_out, "clusters JSON");

  // mine-configs
  auto* minec = app.add_subcommand("mine-configs", "mine cluster configurations");
  std::string mine_in, mine_clusters, mine_out;
  minec->add_option("--in", mine_in, "dataset manifest")->required();
  minec->add_option("--clusters", mine_clusters, "output of discover")->required();
  minec->add_option("--out", mine_out, "configs JSON");

  // hardneg
  auto* hneg = app.add_subcommand("hardneg", "generate mislocalized hard negatives");
  std::string hn_in, hn_configs, hn_out;
  hneg->add_option("--in", hn_in, "dataset manifest")->required();
  hneg->add_option("--configs", hn_configs, "output of mine-configs")->required();
  hneg->add_option("--out", hn_out, "hard negatives JSON");

  // train
  auto* train = app.add_subcommand("train", "train the detector");
  std::string tr_in, tr_from, tr_out, tr_negatives;
  train->add_option("--in", tr_in, "dataset manifest")->required();
  train->add_option("--from", tr_from, "output of hardneg (or mine-configs without discovered negatives)")
      ->required();
  train->add_option("--negatives", tr_negatives, "none | neighboring | discovered")
      ->check(CLI::IsMember({"none", "neighboring", "discovered"}));
  train->add_option("--out", tr_out, "model JSON");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "CorLoc of localizations and AP of a model");
  std::string ev_gt, ev_est, ev_model, ev_in, ev_dets, ev_out;
  eval->add_option("--ground-truth", ev_gt, "ground truth {image_id: box}")->required();
  eval->add_option("--estimates", ev_est, "box map, configs, hard negatives or model JSON");
  eval->add_option("--model", ev_model, "model JSON (AP over --in)");
  eval->add_option("--in", ev_in, "manifest of the images to detect on");
  eval->add_option("--detections", ev_dets, "write detections as JSON lines");
  eval->add_option("--out", ev_out, "metrics JSON");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "compare greedy selection with the exact optimum");
  std::string or_in, or_out;
  oracle->add_option("--in", or_in, "dataset manifest (at most 20 positive patches)")->required();
  oracle->add_option("--out", or_out, "report JSON");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "noisy synthetic benchmark over all negative modes");
  std::string bench_spec = "data/benchmark.json", bench_out;
  bench->add_option("--spec", bench_spec, "benchmark spec JSON");
  bench->add_option("--out", bench_out, "report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return 2;
  }

  try {
    if (*synth) {
      SynthSpec spec = synth_spec.empty() ? SynthSpec{} : synth_spec_from_json(read_json(synth_spec));
      if (common.seed) spec.seed = *common.seed;
      const auto out = generate(spec);
      const fs::path dir = synth_out;
      write_dataset(dir / "manifest.jsonl", out.dataset);
      write_json(dir / "ground_truth.json", boxes_to_json(out.ground_truth));
      json planted = json::array();
      for (const auto& p : out.planted) {
        planted.push_back({{"image_id", p.image_id}, {"part_a", p.part_a}, {"part_b", p.part_b}});
      }
      write_json(dir / "planted.json", planted);
      write_json(dir / "spec.json", synth_spec_to_json(spec));
    } else if (*disc) {
      const auto cfg = load_config(common);
      const auto d = read_dataset(disc_in);
      emit(disc_out, clusters_to_json(discover(d, cfg)));
    } else if (*minec) {
      const auto cfg = load_config(common);
      const auto d = read_dataset(mine_in);
      const auto clusters = clusters_from_json(read_json(mine_clusters));
      emit(mine_out, mining_to_json(mine(d, clusters, cfg)));
    } else if (*hneg) {
      const auto cfg = load_config(common);
      const auto d = read_dataset(hn_in);
      json configs = read_json(hn_configs);
      expect_stage(configs, "configs");
      const auto est = estimates_from_json(field<json>(configs, "estimates"));
      std::vector<ImageId> skipped;
      const auto hn = hard_negatives_for(est, d, cfg, &skipped);
      emit(hn_out, hard_negatives_to_json(std::move(configs), hn, skipped));
    } else if (*train) {
      auto cfg = load_config(common);
      if (!tr_negatives.empty()) cfg.negatives = negative_mode_from_name(tr_negatives);
      const auto d = read_dataset(tr_in);
      const json from = read_json(tr_from);
      const auto stage = stage_of(from);
      std::vector<ImageHardNegatives> hn;
      if (stage == "hard_negatives") {
        hn = hard_negatives_from_json(from);
      } else if (stage != "configs") {
        fail(ErrorKind::kStageOrder, "train needs hardneg or mine-configs output, got " + stage + " output");
      } else if (cfg.negatives == NegativeMode::kDiscovered) {
        fail(ErrorKind::kStageOrder, "discovered negatives need hardneg output, got configs output");
      }
      const auto est = estimates_from_json(field<json>(from, "estimates"));
      emit(tr_out, model_to_json(train_detector(d, est, hn, cfg), cfg.negatives));
    } else if (*eval) {
      const auto cfg = load_config(common);
      if (ev_est.empty() && ev_model.empty()) {
        fail(ErrorKind::kInvalidArgument, "evaluate needs --estimates, --model, or both");
      }
      if (!ev_model.empty() && ev_in.empty()) {
        fail(ErrorKind::kInvalidArgument, "--model needs --in with the images to detect on");
      }
      const auto gt = boxes_from_json(read_json(ev_gt));
      std::optional<double> corloc;
      std::vector<CorLocImage> per_image;
      if (!ev_est.empty()) {
        per_image = corloc_per_image(localizations_from_json(read_json(ev_est)), gt, cfg.iou_min);
        std::size_t hits = 0;
        for (const auto& r : per_image) hits += r.hit ? 1 : 0;
        corloc = static_cast<double>(hits) / static_cast<double>(per_image.size());
      }
      std::optional<double> ap;
      if (!ev_model.empty()) {
        const auto model = model_from_json(read_json(ev_model));
        const auto d = read_dataset(ev_in);
        std::vector<ImageId> images;
        for (const auto& im : d.images()) images.push_back(im.image_id);
        std::sort(images.begin(), images.end());
        const auto dets = detect(model, d, images, cfg.nms_overlap);
        if (!ev_dets.empty()) write_text(ev_dets, detections_to_jsonl(dets));
        ap = evaluate_ap(dets, ground_truth_list(gt), cfg.iou_min);
      }
      emit(ev_out, metrics_to_json(corloc, per_image, ap));
    } else if (*oracle) {
      const auto cfg = load_config(common);
      const auto d = read_dataset(or_in);
      const auto found = discover(d, cfg);
      const auto exact = brute_force_select(found.cover, found.constraints);
      const auto delta = found.constraints.max_degree();
      emit(or_out, json{{"stage", "oracle"},
                        {"greedy", found.selection.selected},
                        {"greedy_value", found.selection.value},
                        {"optimum", exact.selected},
                        {"optimum_value", exact.value},
                        {"max_degree", delta},
                        {"bound_holds", static_cast<double>(found.selection.value) * (delta + 2) >=
                                            static_cast<double>(exact.value)}});
    } else if (*bench) {
      auto spec = benchmark_spec_from_json(read_json(bench_spec));
      if (!common.config.empty()) spec.pipeline = load_config(common);
      emit(bench_out, benchmark_to_json(run_benchmark(spec)));
    }
  } catch (const Error& e) {
    report(std::string(to_string(e.kind())), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report("internal", e.what());
    return 1;
  }
  return 0;
}
