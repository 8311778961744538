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

// Noisy synthetic benchmark: for each seed, a training set and a held-out
// test set (seed + test_seed_offset, same object class) are generated, the
// pipeline runs once up to hard negatives, and one detector per negative mode
// is trained and scored.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "partconf/stages.hpp"

namespace partconf {

struct BenchmarkSpec {
  SynthSpec synth;
  PipelineConfig pipeline;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::uint64_t test_seed_offset = 1000;
};

inline BenchmarkSpec benchmark_spec_from_json(const json& j) {
  BenchmarkSpec b;
  detail::for_known_keys(j, {"synth", "pipeline", "seeds", "test_seed_offset", "regression"},
                         "benchmark", [&](const std::string& key, const json& v) {
                           if (key == "synth") b.synth = synth_spec_from_json(v);
                           else if (key == "pipeline") b.pipeline = config_from_json(v);
                           else if (key == "seeds") b.seeds = detail::as<std::vector<std::uint64_t>>(v, key);
                           else if (key == "test_seed_offset") b.test_seed_offset = detail::as<std::uint64_t>(v, key);
                         });
  if (b.seeds.empty()) fail(ErrorKind::kSchema, "benchmark needs at least one seed");
  return b;
}

inline constexpr std::array<NegativeMode, 3> kNegativeModes{
    NegativeMode::kNone, NegativeMode::kNeighboring, NegativeMode::kDiscovered};

struct BenchmarkRun {
  std::uint64_t seed = 0;
  std::size_t clusters = 0;
  std::size_t configurations = 0;
  std::size_t estimates = 0;
  double estimate_corloc = 0.0;
  // Indexed like kNegativeModes.
  std::array<double, 3> ap{};
  std::array<double, 3> latent_corloc{};
};

inline BenchmarkRun run_benchmark_seed(const BenchmarkSpec& spec, std::uint64_t seed) {
  SynthSpec train_spec = spec.synth;
  train_spec.seed = seed;
  SynthSpec test_spec = spec.synth;
  test_spec.seed = seed + spec.test_seed_offset;
  const auto train = generate(train_spec);
  const auto test = generate(test_spec);

  PipelineConfig cfg = spec.pipeline;
  const auto disc = discover(train.dataset, cfg);
  const auto mined = mine(train.dataset, disc.clusters, cfg);
  const auto hn = hard_negatives_for(mined.estimates, train.dataset, cfg);

  BenchmarkRun run;
  run.seed = seed;
  run.clusters = disc.clusters.size();
  run.configurations = mined.result.configurations.size();
  run.estimates = mined.estimates.size();
  std::map<ImageId, Box> est;
  for (const auto& [img, e] : mined.estimates) est.emplace(img, e.box);
  run.estimate_corloc = evaluate_corloc(est, train.ground_truth, cfg.iou_min);
  for (std::size_t m = 0; m < kNegativeModes.size(); ++m) {
    cfg.negatives = kNegativeModes[m];
    const auto out = train_detector(train.dataset, mined.estimates, hn, cfg);
    run.ap[m] = detection_ap(out.model, test.dataset, test.ground_truth, cfg);
    run.latent_corloc[m] = evaluate_corloc(out.localizations, train.ground_truth, cfg.iou_min);
  }
  return run;
}

struct BenchmarkSummary {
  std::vector<BenchmarkRun> runs;
  std::array<double, 3> mean_ap{};
};

inline BenchmarkSummary run_benchmark(const BenchmarkSpec& spec) {
  BenchmarkSummary s;
  for (std::uint64_t seed : spec.seeds) s.runs.push_back(run_benchmark_seed(spec, seed));
  for (const auto& r : s.runs) {
    for (std::size_t m = 0; m < 3; ++m) s.mean_ap[m] += r.ap[m];
  }
  for (auto& v : s.mean_ap) v /= static_cast<double>(s.runs.size());
  return s;
}

inline json benchmark_to_json(const BenchmarkSummary& s) {
  json runs = json::array();
  for (const auto& r : s.runs) {
    json ap = json::object();
    json cl = json::object();
    for (std::size_t m = 0; m < 3; ++m) {
      ap[std::string(to_string(kNegativeModes[m]))] = r.ap[m];
      cl[std::string(to_string(kNegativeModes[m]))] = r.latent_corloc[m];
    }
    runs.push_back({{"seed", r.seed},
                    {"clusters", r.clusters},
                    {"configurations", r.configurations},
                    {"estimates", r.estimates},
                    {"estimate_corloc", r.estimate_corloc},
                    {"ap", ap},
                    {"latent_corloc", cl}});
  }
  json mean = json::object();
  for (std::size_t m = 0; m < 3; ++m) mean[std::string(to_string(kNegativeModes[m]))] = s.mean_ap[m];
  return json{{"stage", "benchmark"}, {"runs", runs}, {"mean_ap", mean}};
}

}  // namespace partconf
