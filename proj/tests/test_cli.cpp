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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <set>

#include "partconf/stages.hpp"
#include "test_util.hpp"

using namespace partconf;
namespace fs = std::filesystem;
using testutil::DatasetBuilder;

namespace {

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const auto err = dir / "stderr.txt";
  const std::string cmd = env + " " + PARTCONF_CLI + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return Run{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(err)};
}

// synth -> discover -> mine-configs -> hardneg -> train -> evaluate in `dir`.
void run_chain(const fs::path& dir, const std::string& env = "") {
  const auto d = dir.string();
  write_json(dir / "spec.in.json", json{{"num_positive", 6}, {"num_negative", 6}});
  // K = |P| - 1 lets every neighborhood reach all other positive images.
  write_json(dir / "config.json", json{{"k", 5}});
  ASSERT_EQ(cli("synth --spec " + d + "/spec.in.json --out " + d + "/data", dir, env).code, 0);
  const std::string in = " --config " + d + "/config.json --in " + d + "/data/manifest.jsonl";
  ASSERT_EQ(cli("discover" + in + " --out " + d + "/clusters.json", dir, env).code, 0);
  ASSERT_EQ(cli("mine-configs" + in + " --clusters " + d + "/clusters.json --out " + d + "/configs.json", dir, env).code, 0);
  ASSERT_EQ(cli("hardneg" + in + " --configs " + d + "/configs.json --out " + d + "/hn.json", dir, env).code, 0);
  ASSERT_EQ(cli("train" + in + " --from " + d + "/hn.json --out " + d + "/model.json", dir, env).code, 0);
  ASSERT_EQ(cli("evaluate --ground-truth " + d + "/data/ground_truth.json --estimates " + d +
                    "/configs.json --model " + d + "/model.json" + in + " --detections " + d +
                    "/dets.jsonl --out " + d + "/metrics.json",
                dir, env)
                .code,
            0);
}

const char* kOutputs[] = {"data/manifest.jsonl", "data/features.bin", "data/ground_truth.json",
                          "clusters.json", "configs.json", "hn.json", "model.json",
                          "dets.jsonl", "metrics.json"};

TEST(Cli, NoiseFreeChainRecoversPlantedPair) {
  const auto dir = testutil::temp_dir("cli_chain");
  run_chain(dir);
  const auto configs = read_json(dir / "configs.json");
  ASSERT_EQ(configs.at("estimates").size(), 6u);
  ASSERT_FALSE(configs.at("configurations").empty());
  const auto planted = read_json(dir / "data/planted.json");
  const auto& top = configs.at("configurations")[0];
  EXPECT_EQ(top.at("images").size(), planted.size());
  for (const auto& im : top.at("images")) {
    bool ok = false;
    for (const auto& p : planted) {
      if (p.at("image_id") != im.at("image_id")) continue;
      ok = std::set<PatchId>{p.at("part_a"), p.at("part_b")} ==
           std::set<PatchId>{im.at("patch1"), im.at("patch2")};
    }
    EXPECT_TRUE(ok) << im.dump();
  }
  EXPECT_EQ(read_json(dir / "metrics.json").at("corloc"), 1.0);
}

TEST(Cli, EstimatesEqualToGroundTruthGiveFullCorLoc) {
  const auto dir = testutil::temp_dir("cli_gt");
  const auto d = dir.string();
  write_json(dir / "gt.json", boxes_to_json({{1, box_ltrb(0, 0, 5, 5)}, {2, box_ltrb(1, 1, 9, 9)}}));
  ASSERT_EQ(cli("evaluate --ground-truth " + d + "/gt.json --estimates " + d + "/gt.json --out " + d + "/m.json", dir).code, 0);
  EXPECT_EQ(read_json(dir / "m.json").at("corloc"), 1.0);
}

TEST(Cli, ErrorExitCodes) {
  const auto dir = testutil::temp_dir("cli_errors");
  const auto d = dir.string();
  run_chain(dir);

  // One image only.
  DatasetBuilder b;
  b.image(1, Label::kPositive);
  b.patch(1, 1, box_ltrb(0, 0, 5, 5), {1, 0});
  write_dataset(dir / "one/manifest.jsonl", b.build());
  auto r = cli("discover --in " + d + "/one/manifest.jsonl", dir);
  EXPECT_EQ(r.code, 6);
  EXPECT_NE(r.err.find("insufficient images"), std::string::npos) << r.err;

  r = cli("discover --in " + d + "/absent.jsonl", dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("\"error\":\"missing_input\""), std::string::npos) << r.err;

  write_json(dir / "bad_config.json", json{{"k", -1}});
  r = cli("--config " + d + "/bad_config.json discover --in " + d + "/data/manifest.jsonl", dir);
  EXPECT_EQ(r.code, 4);

  r = cli("hardneg --in " + d + "/data/manifest.jsonl --configs " + d + "/clusters.json", dir);
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.err.find("expected configs output, got clusters output"), std::string::npos) << r.err;

  r = cli("train --in " + d + "/data/manifest.jsonl --from " + d + "/configs.json --negatives discovered", dir);
  EXPECT_EQ(r.code, 5);
  EXPECT_EQ(cli("train --in " + d + "/data/manifest.jsonl --from " + d + "/configs.json --negatives none", dir).code, 0);

  EXPECT_EQ(cli("frobnicate", dir).code, 2);
}

TEST(Cli, RerunsAreByteIdenticalAcrossThreadCounts) {
  const auto a = testutil::temp_dir("cli_det_a");
  const auto b = testutil::temp_dir("cli_det_b");
  const auto c = testutil::temp_dir("cli_det_c");
  run_chain(a, "PARTCONF_THREADS=1");
  run_chain(b, "PARTCONF_THREADS=1");
  run_chain(c, "PARTCONF_THREADS=4");
  for (const char* f : kOutputs) {
    const auto ta = read_text(a / f);
    EXPECT_EQ(ta, read_text(b / f)) << f;
    EXPECT_EQ(ta, read_text(c / f)) << f;
  }
}

}  // namespace
