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

// Mislocalized hard negatives: the four strips of the foreground estimate
// that miss the overlap ("core") of the two configuration patches.

#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "partconf/error.hpp"
#include "partconf/geom.hpp"

namespace partconf {

enum class StripKind { kLeft, kRight, kTop, kBottom };

inline std::string_view to_string(StripKind k) {
  switch (k) {
    case StripKind::kLeft: return "left";
    case StripKind::kRight: return "right";
    case StripKind::kTop: return "top";
    case StripKind::kBottom: return "bottom";
  }
  return "left";
}

struct HardNegative {
  Box box;
  StripKind kind = StripKind::kLeft;
  bool shrunk = false;
  friend bool operator==(const HardNegative&, const HardNegative&) = default;
};

struct HardNegativeSet {
  Box foreground;
  Box core;
  std::vector<HardNegative> strips;  // left, right, top, bottom order; empty ones omitted
  friend bool operator==(const HardNegativeSet&, const HardNegativeSet&) = default;
};

// Strips of `fg` left of, right of, above and below the core
// [max lefts, min rights] x [max tops, min bottoms]. A strip covering more
// than max_ratio of fg is cut back to exactly max_ratio by moving its single
// boundary that lies inside fg.
inline HardNegativeSet generate_hard_negatives(const Box& b1, const Box& b2, const Box& fg,
                                               double max_ratio = 0.5) {
  if (fg.degenerate()) fail(ErrorKind::kInvalidArgument, "degenerate foreground");
  if (b1.degenerate() || b2.degenerate()) {
    fail(ErrorKind::kInvalidArgument, "configuration patches must have positive area");
  }
  if (!contains(fg, b1) || !contains(fg, b2)) {
    fail(ErrorKind::kInvalidArgument, "configuration patches must lie inside the foreground");
  }
  if (!(max_ratio > 0.0 && max_ratio <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "max_ratio must lie in (0, 1]");
  }
  const auto core = intersect(b1, b2);
  if (!core) fail(ErrorKind::kInvalidArgument, "configuration patches must overlap or abut");

  HardNegativeSet out;
  out.foreground = fg;
  out.core = *core;
  const double fg_w = fg.width();
  const double fg_h = fg.height();

  // Left/right strips span fg's height, so their area ratio is width / fg_w.
  Box left{fg.x_left, core->x_left, fg.y_top, fg.y_bottom};
  Box right{core->x_right, fg.x_right, fg.y_top, fg.y_bottom};
  Box top{fg.x_left, fg.x_right, fg.y_top, core->y_top};
  Box bottom{fg.x_left, fg.x_right, core->y_bottom, fg.y_bottom};

  auto emit = [&](Box box, StripKind kind) {
    bool shrunk = false;
    const double ratio = box.area() / fg.area();
    if (ratio > max_ratio) {
      shrunk = true;
      switch (kind) {
        case StripKind::kLeft: box.x_right = fg.x_left + max_ratio * fg_w; break;
        case StripKind::kRight: box.x_left = fg.x_right - max_ratio * fg_w; break;
        case StripKind::kTop: box.y_bottom = fg.y_top + max_ratio * fg_h; break;
        case StripKind::kBottom: box.y_top = fg.y_bottom - max_ratio * fg_h; break;
      }
    }
    if (box.degenerate()) return;
    out.strips.push_back(HardNegative{box, kind, shrunk});
  };
  emit(left, StripKind::kLeft);
  emit(right, StripKind::kRight);
  emit(top, StripKind::kTop);
  emit(bottom, StripKind::kBottom);
  return out;
}

// Candidates whose IoU with the foreground is below max_iou.
inline std::vector<Box> neighboring_negatives(const Box& fg, std::span<const Box> candidates,
                                              double max_iou = 0.3) {
  std::vector<Box> out;
  for (const auto& c : candidates) {
    if (iou(c, fg) < max_iou) out.push_back(c);
  }
  return out;
}

}  // namespace partconf
