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

#include <cmath>
#include <sstream>

#include "camodet/error.hpp"
#include "camodet/geometry.hpp"
#include "camodet/rng.hpp"
#include "doctest.h"

using camodet::Box;

namespace {

// GIoU from primitive areas: inclusion-exclusion over the four corner
// coordinates without touching the library's helpers.
double giou_from_primitives(const Box& a, const Box& b) {
  const double ix0 = a.x_min() > b.x_min() ? a.x_min() : b.x_min();
  const double iy0 = a.y_min() > b.y_min() ? a.y_min() : b.y_min();
  const double ix1 = a.x_max() < b.x_max() ? a.x_max() : b.x_max();
  const double iy1 = a.y_max() < b.y_max() ? a.y_max() : b.y_max();
  const double inter = (ix1 > ix0 && iy1 > iy0) ? (ix1 - ix0) * (iy1 - iy0) : 0.0;
  const double area_a = (a.x_max() - a.x_min()) * (a.y_max() - a.y_min());
  const double area_b = (b.x_max() - b.x_min()) * (b.y_max() - b.y_min());
  const double uni = area_a + area_b - inter;
  const double cx0 = a.x_min() < b.x_min() ? a.x_min() : b.x_min();
  const double cy0 = a.y_min() < b.y_min() ? a.y_min() : b.y_min();
  const double cx1 = a.x_max() > b.x_max() ? a.x_max() : b.x_max();
  const double cy1 = a.y_max() > b.y_max() ? a.y_max() : b.y_max();
  const double hull = (cx1 - cx0) * (cy1 - cy0);
  return inter / uni - (hull - uni) / hull;
}

Box random_box(camodet::Rng& rng, double extent) {
  const double x0 = rng.uniform(0, extent - 1);
  const double y0 = rng.uniform(0, extent - 1);
  return Box(x0, y0, rng.uniform(x0 + 1e-3, extent), rng.uniform(y0 + 1e-3, extent));
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("box construction rejects degenerate and non-finite corners") {
  CHECK_NOTHROW(Box(0, 0, 1, 1));
  CHECK_THROWS_AS(Box(0, 0, 0, 1), camodet::Error);
  CHECK_THROWS_AS(Box(0, 0, 1, -1), camodet::Error);
  CHECK_THROWS_AS(Box(0, 0, NAN, 1), camodet::Error);
  CHECK_THROWS_AS(Box(0, 0, INFINITY, 1), camodet::Error);
  try {
    Box(3, 3, 2, 4);
  } catch (const camodet::Error& e) {
    CHECK(e.code() == camodet::ErrorCode::kInvalidBox);
  }
}

TEST_CASE("xywh conversion") {
  const Box b = Box::from_xywh(10, 20, 100, 200);
  CHECK(b == Box(10, 20, 110, 220));
  CHECK(b.width() == 100);
  CHECK(b.area() == 20000);
  std::ostringstream os;
  os << b;
  CHECK(!os.str().empty());
}

TEST_CASE("iou examples") {
  const Box a(0, 0, 2, 2), b(1, 1, 3, 3);
  CHECK(camodet::iou(a, a) == 1.0);
  CHECK(camodet::iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(camodet::iou(Box(0, 0, 1, 1), Box(2, 2, 3, 3)) == 0.0);
  CHECK(camodet::iou(Box(0, 0, 1, 1), Box(1, 0, 2, 1)) == 0.0);
}

TEST_CASE("giou examples") {
  CHECK(camodet::giou(Box(0, 0, 2, 2), Box(0, 0, 2, 2)) == 1.0);
  CHECK(camodet::giou(Box(0, 0, 2, 2), Box(1, 1, 3, 3)) == doctest::Approx(1.0 / 7 - 2.0 / 9).epsilon(1e-15));
  CHECK(camodet::giou(Box(0, 0, 1, 1), Box(2, 2, 3, 3)) == doctest::Approx(-7.0 / 9).epsilon(1e-15));
}

TEST_CASE("transform_box examples") {
  const Box b(3, 4, 9, 12);
  CHECK(camodet::transform_box(camodet::RectTransform::identity(Box(0, 0, 50, 50)), b) == b);
  const camodet::RectTransform t{Box(10, 20, 110, 220), Box(400, 0, 600, 200)};
  CHECK(camodet::transform_box(t, t.source) == Box(400, 0, 600, 200));
  const camodet::RectTransform s{Box(0, 0, 100, 100), Box(0, 0, 200, 200)};
  CHECK(camodet::transform_box(s, Box(10, 10, 20, 30)) == Box(20, 20, 40, 60));
}

TEST_CASE("iou and giou properties on random pairs") {
  camodet::Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Box a = random_box(rng, 512), b = random_box(rng, 512);
    const double v = camodet::iou(a, b);
    const double g = camodet::giou(a, b);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    REQUIRE(v == camodet::iou(b, a));
    REQUIRE(g <= v);
    REQUIRE(g > -1.0);
    REQUIRE(g < 1.0);
    REQUIRE(std::abs(g - giou_from_primitives(a, b)) <= 1e-12);
  }
}

TEST_CASE("transform_box inverse recovers the input") {
  camodet::Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    const camodet::RectTransform t{random_box(rng, 1000), random_box(rng, 1000)};
    const Box b = random_box(rng, 1000);
    const Box back = camodet::transform_box(t.inverse(), camodet::transform_box(t, b));
    REQUIRE(std::abs(back.x_min() - b.x_min()) <= 1e-9);
    REQUIRE(std::abs(back.y_min() - b.y_min()) <= 1e-9);
    REQUIRE(std::abs(back.x_max() - b.x_max()) <= 1e-9);
    REQUIRE(std::abs(back.y_max() - b.y_max()) <= 1e-9);
  }
}

}  // TEST_SUITE
