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

#include <algorithm>

#include <omp.h>

#include "camodet/error.hpp"
#include "camodet/eval.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles/eval_oracle.hpp"

using camodet::Box;
namespace eval = camodet::eval;

namespace {

camodet::DetectionDataset one_image(std::vector<camodet::LabeledBox> labels, int n_categories = 1) {
  camodet::DetectionDataset ds;
  for (int c = 1; c <= n_categories; ++c) ds.categories.push_back({c, "c" + std::to_string(c)});
  camodet::Sample s;
  s.image_id = 1;
  s.image_path = "a.png";
  s.width = 500;
  s.height = 500;
  s.labels = std::move(labels);
  ds.samples.push_back(s);
  return ds;
}

std::vector<eval::Detection> perfect(const camodet::DetectionDataset& ds) {
  std::vector<eval::Detection> out;
  for (const auto& s : ds.samples)
    for (const auto& l : s.labels) out.push_back({s.image_id, l.box, l.category_id, 1.0});
  return out;
}

void check_same(const std::optional<double>& a, const std::optional<double>& b) {
  REQUIRE(a.has_value() == b.has_value());
  if (a) REQUIRE(*a == *b);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("iou thresholds") {
  const auto& t = eval::iou_thresholds();
  CHECK(t.front() == 0.5);
  CHECK(t[5] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(t.back() == doctest::Approx(0.95).epsilon(1e-15));
}

TEST_CASE("match_detections examples") {
  const std::vector<Box> gt = {Box(0, 0, 10, 10)};
  const std::vector<eval::Detection> exact = {{1, Box(0, 0, 10, 10), 1, 0.9}};
  const auto m1 = eval::match_detections(exact, gt, 0.5);
  REQUIRE(m1.size() == 1);
  CHECK(m1[0].true_positive);

  const std::vector<eval::Detection> two = {{1, Box(0, 0, 10, 9), 1, 0.8}, {1, Box(0, 0, 10, 10), 1, 0.9}};
  const auto m2 = eval::match_detections(two, gt, 0.5);
  REQUIRE(m2.size() == 2);
  CHECK(m2[0].detection == 1);
  CHECK(m2[0].true_positive);
  CHECK_FALSE(m2[1].true_positive);

  // IoU 40 / 100 = 0.4
  const std::vector<eval::Detection> low = {{1, Box(0, 0, 4, 10), 1, 0.9}};
  CHECK_FALSE(eval::match_detections(low, gt, 0.5)[0].true_positive);
}

TEST_CASE("matching prefers the higher IoU and breaks ties by index") {
  const std::vector<Box> gt = {Box(0, 0, 10, 10), Box(0, 0, 10, 11)};
  const std::vector<eval::Detection> d = {{1, Box(0, 0, 10, 11), 1, 0.5}};
  CHECK(*eval::match_detections(d, gt, 0.5)[0].ground_truth == 1);
  const std::vector<Box> twins = {Box(0, 0, 10, 10), Box(0, 0, 10, 10)};
  const std::vector<eval::Detection> e = {{1, Box(0, 0, 10, 10), 1, 0.5}, {1, Box(0, 0, 10, 10), 1, 0.5}};
  const auto m = eval::match_detections(e, twins, 0.5);
  CHECK(*m[0].ground_truth == 0);
  CHECK(*m[1].ground_truth == 1);
}

TEST_CASE("average_precision examples") {
  const std::vector<eval::Outcome> tp = {{0.9, true, 0}};
  CHECK(*eval::average_precision(tp, 1) == 1.0);
  const std::vector<eval::Outcome> fp_then_tp = {{0.95, false, 0}, {0.9, true, 1}};
  CHECK(*eval::average_precision(fp_then_tp, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(*eval::average_precision({}, 3) == 0.0);
  CHECK_FALSE(eval::average_precision(tp, 0).has_value());
  // Recall 1/2 reached at precision 1, full recall at precision 2/3.
  const std::vector<eval::Outcome> mixed = {{0.9, true, 0}, {0.8, false, 1}, {0.7, true, 2}};
  CHECK(*eval::average_precision(mixed, 2) == doctest::Approx((51 * 1.0 + 50 * 2.0 / 3) / 101).epsilon(1e-15));
}

TEST_CASE("perfect detections score 100 on every metric") {
  const auto ds = one_image({{Box(0, 0, 50, 50), 1, false}, {Box(100, 100, 300, 300), 2, false},
                             {Box(10, 300, 20, 310), 1, false}}, 2);
  const auto r = eval::evaluate(perfect(ds), ds);
  CHECK(*r.map == 100.0);
  CHECK(*r.ap50 == 100.0);
  CHECK(*r.ap75 == 100.0);
  CHECK(*r.aps == 100.0);
  CHECK(*r.apm == 100.0);
  CHECK(*r.apl == 100.0);
  CHECK(*r.localization == 100.0);
}

TEST_CASE("area buckets") {
  const auto ds = one_image({{Box(0, 0, 50, 50), 1, false}});
  const auto r = eval::coco_metrics(perfect(ds), ds);
  CHECK_FALSE(r.aps.has_value());
  CHECK(*r.apm == 100.0);
  CHECK_FALSE(r.apl.has_value());
  CHECK(eval::kAreaMedium.contains(32.0 * 32.0));
  CHECK_FALSE(eval::kAreaMedium.contains(96.0 * 96.0));
  CHECK(eval::kAreaLarge.contains(96.0 * 96.0));
}

TEST_CASE("localization ignores labels") {
  const auto ds = one_image({{Box(0, 0, 50, 50), 1, false}, {Box(60, 60, 200, 200), 2, false}}, 2);
  auto dets = perfect(ds);
  for (auto& d : dets) d.category_id = d.category_id == 1 ? 2 : 1;
  const auto r = eval::evaluate(dets, ds);
  CHECK(*r.localization == 100.0);
  CHECK(*r.map == 0.0);
  CHECK(*eval::localization_score({}, ds) == 0.0);
}

TEST_CASE("coco_metrics and localization equal the brute-force evaluator") {
  camodet::Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = fixtures::random_eval_fixture(rng, 4, 5);
    const auto got = eval::evaluate(f.dets, f.gt);
    const auto want = oracle::evaluate(f.dets, f.gt);
    check_same(got.map, want.map);
    check_same(got.ap50, want.ap50);
    check_same(got.ap75, want.ap75);
    check_same(got.aps, want.aps);
    check_same(got.apm, want.apm);
    check_same(got.apl, want.apl);
    check_same(got.localization, want.localization);
    REQUIRE(eval::coco_metrics_serial(f.dets, f.gt) == eval::coco_metrics(f.dets, f.gt));
  }
}

TEST_CASE("max_detections truncation matches the oracle") {
  camodet::Rng rng(52);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = fixtures::random_eval_fixture(rng, 4, 8, 2, 1);
    eval::EvalConfig cfg;
    cfg.max_detections = 2;
    const auto got = eval::evaluate(f.dets, f.gt, cfg);
    const auto want = oracle::evaluate(f.dets, f.gt, 2);
    check_same(got.map, want.map);
    check_same(got.localization, want.localization);
  }
}

TEST_CASE("adding a false positive never raises AP") {
  camodet::Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    auto f = fixtures::random_eval_fixture(rng, 4, 5, 2, 1);
    const auto before = eval::coco_metrics(f.dets, f.gt);
    // Far outside every image: always unmatched.
    f.dets.push_back({f.gt.samples[0].image_id, Box(1000, 1000, 1040, 1040), 1, rng.uniform01()});
    const auto after = eval::coco_metrics(f.dets, f.gt);
    if (before.map) REQUIRE(*after.map <= *before.map);
    if (before.ap50) REQUIRE(*after.ap50 <= *before.ap50);
    if (before.apm) REQUIRE(*after.apm <= *before.apm);
  }
}

TEST_CASE("metrics depend only on score rank") {
  camodet::Rng rng(54);
  for (int trial = 0; trial < 50; ++trial) {
    auto f = fixtures::random_eval_fixture(rng, 4, 5);
    const auto before = eval::evaluate(f.dets, f.gt);
    for (auto& d : f.dets) d.score *= 0.37;
    REQUIRE(eval::evaluate(f.dets, f.gt) == before);
  }
}

TEST_CASE("AP is non-increasing in the IoU threshold") {
  camodet::Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = fixtures::random_eval_fixture(rng, 4, 5, 3, 1);
    const auto gts = oracle::to_gts(f.gt, false);
    const auto dets = oracle::to_dets(f.dets, false);
    double prev = 2;
    for (double t : eval::iou_thresholds()) {
      const auto ap = oracle::brute_ap(dets, gts, 0, 1e18, t, 100);
      if (!ap) break;
      REQUIRE(*ap <= prev);
      prev = *ap;
    }
    const auto r = eval::coco_metrics(f.dets, f.gt);
    if (r.ap50) REQUIRE(*r.ap75 <= *r.ap50);
  }
}

TEST_CASE("detections file round trip and validation") {
  const auto ds = one_image({{Box(0, 0, 50, 50), 1, false}});
  const std::vector<eval::Detection> dets = {{1, Box(1.5, 2.25, 40, 41), 1, 0.75}};
  const auto back = eval::detections_from_json(eval::detections_to_json(dets));
  REQUIRE(back.size() == 1);
  CHECK(back[0].box == dets[0].box);
  CHECK(back[0].score == 0.75);

  const std::vector<eval::Detection> bad_image = {{9, Box(0, 0, 1, 1), 1, 0.5}};
  CHECK_THROWS_AS(eval::coco_metrics(bad_image, ds), camodet::Error);
  const std::vector<eval::Detection> bad_cat = {{1, Box(0, 0, 1, 1), 4, 0.5}};
  CHECK_THROWS_AS(eval::coco_metrics(bad_cat, ds), camodet::Error);
  const std::vector<eval::Detection> bad_score = {{1, Box(0, 0, 1, 1), 1, 1.5}};
  CHECK_THROWS_AS(eval::coco_metrics(bad_score, ds), camodet::Error);
  CHECK_THROWS_AS(eval::detections_from_json("[{\"image_id\": 1}]"), camodet::Error);
}

TEST_CASE("report formats") {
  const auto ds = one_image({{Box(0, 0, 50, 50), 1, false}});
  const auto r = eval::evaluate(perfect(ds), ds);
  const std::string table = eval::report_table(r);
  for (const char* m : eval::kHeadlineMetrics) CHECK(table.find(m) != std::string::npos);
  const std::string js = eval::report_json(r);
  CHECK(js.find("\"mAP\"") != std::string::npos);
  CHECK(js.find("null") != std::string::npos);
}

}  // TEST_SUITE

TEST_SUITE("eval") {

TEST_CASE("report does not depend on the thread count") {
  camodet::Rng rng(56);
  const auto f = fixtures::random_eval_fixture(rng, 6, 9, 40, 3);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = eval::evaluate(f.dets, f.gt);
  omp_set_num_threads(3);
  const auto three = eval::evaluate(f.dets, f.gt);
  omp_set_num_threads(saved);
  CHECK(one == three);
  CHECK(one == eval::evaluate(f.dets, f.gt));
}

}  // TEST_SUITE
