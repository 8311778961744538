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

// Axis-aligned rectangles in real-valued pixel coordinates (y grows down).

#pragma once

#include <algorithm>
#include <optional>
#include <ostream>

namespace partconf {

struct Box {
  double x_left = 0.0;
  double x_right = 0.0;
  double y_top = 0.0;
  double y_bottom = 0.0;

  double width() const { return x_right - x_left; }
  double height() const { return y_bottom - y_top; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_left + x_right); }
  double center_y() const { return 0.5 * (y_top + y_bottom); }

  bool valid() const { return x_left <= x_right && y_top <= y_bottom; }
  bool degenerate() const { return !(area() > 0.0); }

  friend bool operator==(const Box&, const Box&) = default;
};

// Builds a box from the [left, top, right, bottom] order used in files.
inline Box box_ltrb(double left, double top, double right, double bottom) {
  return Box{left, right, top, bottom};
}

inline std::ostream& operator<<(std::ostream& os, const Box& b) {
  return os << "[l=" << b.x_left << " r=" << b.x_right << " t=" << b.y_top
            << " b=" << b.y_bottom << "]";
}

inline bool contains(const Box& outer, const Box& inner) {
  return outer.x_left <= inner.x_left && inner.x_right <= outer.x_right &&
         outer.y_top <= inner.y_top && inner.y_bottom <= outer.y_bottom;
}

// Smallest box containing both inputs.
inline Box union_bbox(const Box& a, const Box& b) {
  return Box{std::min(a.x_left, b.x_left), std::max(a.x_right, b.x_right),
             std::min(a.y_top, b.y_top), std::max(a.y_bottom, b.y_bottom)};
}

// Returns nullopt when the edges cross. Touching boxes give a zero-area box.
inline std::optional<Box> intersect(const Box& a, const Box& b) {
  Box r{std::max(a.x_left, b.x_left), std::min(a.x_right, b.x_right),
        std::max(a.y_top, b.y_top), std::min(a.y_bottom, b.y_bottom)};
  if (!r.valid()) return std::nullopt;
  return r;
}

inline double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x_right, b.x_right) - std::max(a.x_left, b.x_left);
  const double h = std::min(a.y_bottom, b.y_bottom) - std::max(a.y_top, b.y_top);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

// Intersection over union. Zero whenever either box has zero area.
inline double iou(const Box& a, const Box& b) {
  if (a.degenerate() || b.degenerate()) return 0.0;
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return inter / uni;
}

}  // namespace partconf
