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

#include "camodet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "camodet/error.hpp"

namespace camodet {

Box::Box(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  if (!std::isfinite(x_min) || !std::isfinite(y_min) || !std::isfinite(x_max) ||
      !std::isfinite(y_max)) {
    throw Error(ErrorCode::kInvalidBox, "box has non-finite coordinates");
  }
  if (!(x_min < x_max) || !(y_min < y_max)) {
    std::ostringstream os;
    os << "degenerate box [" << x_min << ", " << y_min << ", " << x_max << ", "
       << y_max << "]";
    throw Error(ErrorCode::kInvalidBox, os.str());
  }
}

Box Box::from_xywh(double x, double y, double width, double height) {
  return Box(x, y, x + width, y + height);
}

std::ostream& operator<<(std::ostream& os, const Box& b) {
  return os << "[" << b.x_min() << ", " << b.y_min() << ", " << b.x_max()
            << ", " << b.y_max() << "]";
}

double intersection_area(const Box& a, const Box& b) noexcept {
  const double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

Box enclosing_box(const Box& a, const Box& b) noexcept {
  return Box(std::min(a.x_min(), b.x_min()), std::min(a.y_min(), b.y_min()),
             std::max(a.x_max(), b.x_max()), std::max(a.y_max(), b.y_max()));
}

double iou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double giou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double hull = enclosing_box(a, b).area();
  // Penalty clamped at zero against rounding.
  return inter / uni - std::max(0.0, hull - uni) / hull;
}

namespace {

// Endpoints are mapped exactly so that source -> target holds bit for bit.
double map_coord(double v, double s0, double s1, double t0, double t1) {
  if (v == s0) return t0;
  if (v == s1) return t1;
  return t0 + (v - s0) * (t1 - t0) / (s1 - s0);
}

}  // namespace

Box transform_box(const RectTransform& t, const Box& b) {
  const Box& s = t.source;
  const Box& d = t.target;
  const double x0 = map_coord(b.x_min(), s.x_min(), s.x_max(), d.x_min(), d.x_max());
  const double x1 = map_coord(b.x_max(), s.x_min(), s.x_max(), d.x_min(), d.x_max());
  const double y0 = map_coord(b.y_min(), s.y_min(), s.y_max(), d.y_min(), d.y_max());
  const double y1 = map_coord(b.y_max(), s.y_min(), s.y_max(), d.y_min(), d.y_max());
  if (!(x0 < x1) || !(y0 < y1) || !std::isfinite(x0) || !std::isfinite(x1) ||
      !std::isfinite(y0) || !std::isfinite(y1)) {
    throw Error(ErrorCode::kInternal, "transform produced a degenerate box");
  }
  return Box(x0, y0, x1, y1);
}

}  // namespace camodet
