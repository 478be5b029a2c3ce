// Copyright 2026 The camodet Authors. All Rights Reserved.
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

#pragma once

#include <iosfwd>

namespace camodet {

// Axis-aligned rectangle in continuous pixel coordinates. The min corner is
// inclusive and the max corner exclusive, so a pixel-aligned box covering
// columns [c0, c1] has x_min = c0 and x_max = c1 + 1 and the area is exact.
//
// Construction rejects non-finite coordinates and zero or negative extents,
// which lets every downstream operation assume a valid box.
class Box {
 public:
  Box(double x_min, double y_min, double x_max, double y_max);

  // Corner form from the COCO [x, y, width, height] layout.
  static Box from_xywh(double x, double y, double width, double height);

  double x_min() const noexcept { return x_min_; }
  double y_min() const noexcept { return y_min_; }
  double x_max() const noexcept { return x_max_; }
  double y_max() const noexcept { return y_max_; }
  double width() const noexcept { return x_max_ - x_min_; }
  double height() const noexcept { return y_max_ - y_min_; }
  double area() const noexcept { return width() * height(); }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double x_min_;
  double y_min_;
  double x_max_;
  double y_max_;
};

std::ostream& operator<<(std::ostream& os, const Box& b);

// Area of the intersection; zero when the boxes are disjoint or only touch.
double intersection_area(const Box& a, const Box& b) noexcept;

// Smallest box containing both arguments.
Box enclosing_box(const Box& a, const Box& b) noexcept;

double iou(const Box& a, const Box& b) noexcept;

// Generalized IoU: IoU minus the fraction of the enclosing box not covered by
// the union. Lies in (-1, 1].
double giou(const Box& a, const Box& b) noexcept;

// Per-axis affine map taking `source` onto `target`.
struct RectTransform {
  Box source;
  Box target;

  static RectTransform identity(const Box& b) { return {b, b}; }
  RectTransform inverse() const { return {target, source}; }
};

// Maps both corners of `b` through `t`. Throws Error(kInternal) if the result
// is degenerate, which cannot happen for valid inputs short of overflow.
Box transform_box(const RectTransform& t, const Box& b);

}  // namespace camodet
