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

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camodet/dataset.hpp"
#include "camodet/geometry.hpp"

// COCO-style box evaluation: 101-point interpolated AP averaged over the IoU
// thresholds .50:.05:.95, with fixed-threshold and object-size breakdowns.
namespace camodet::eval {

struct Detection {
  std::int64_t image_id = 0;
  Box box;
  int category_id = 0;
  double score = 0;
};

// 0.50, 0.55, ..., 0.95
const std::array<double, 10>& iou_thresholds();

inline constexpr int kRecallPoints = 101;

struct AreaRange {
  double lo = 0;
  double hi = std::numeric_limits<double>::infinity();  // exclusive

  bool contains(double area) const noexcept { return area >= lo && area < hi; }
};

inline constexpr AreaRange kAreaAll{};
inline constexpr AreaRange kAreaSmall{0.0, 32.0 * 32.0};
inline constexpr AreaRange kAreaMedium{32.0 * 32.0, 96.0 * 96.0};
inline constexpr AreaRange kAreaLarge{96.0 * 96.0, std::numeric_limits<double>::infinity()};

struct Match {
  std::size_t detection = 0;  // index into the input span
  bool true_positive = false;
  std::optional<std::size_t> ground_truth;
};

// Greedy matching for one image and category. Detections are visited by
// descending score (ties: input order); each takes the still-unmatched ground
// truth with the highest IoU >= threshold (ties: lowest index). Result is in
// visiting order.
std::vector<Match> match_detections(std::span<const Detection> detections,
                                    std::span<const Box> ground_truths, double iou_threshold);

struct Outcome {
  double score = 0;
  bool true_positive = false;
  std::size_t order = 0;  // tie-break key for equal scores
};

// 101-point interpolated AP in [0, 1]; nullopt when n_ground_truth == 0.
std::optional<double> average_precision(std::span<const Outcome> outcomes,
                                        std::size_t n_ground_truth);

struct EvalConfig {
  std::size_t max_detections = 100;  // per image and category
};

// All metrics are percentages; nullopt marks "no ground truth" buckets.
struct EvalReport {
  std::optional<double> map;
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> aps;
  std::optional<double> apm;
  std::optional<double> apl;
  std::optional<double> localization;
  std::map<int, std::optional<double>> per_category;  // threshold-averaged AP

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Class-aware metrics over every sample of `ground_truth`. Per (image,
// category) matching runs in parallel; reductions are in a fixed order.
EvalReport coco_metrics(std::span<const Detection> detections, const DetectionDataset& ground_truth,
                        const EvalConfig& cfg = {});

// Serial reference for coco_metrics.
EvalReport coco_metrics_serial(std::span<const Detection> detections,
                               const DetectionDataset& ground_truth, const EvalConfig& cfg = {});

// Class-agnostic localization: labels are ignored and the threshold-averaged
// AP over .50:.05:.95 is reported.
std::optional<double> localization_score(std::span<const Detection> detections,
                                         const DetectionDataset& ground_truth,
                                         const EvalConfig& cfg = {});

// coco_metrics plus localization_score.
EvalReport evaluate(std::span<const Detection> detections, const DetectionDataset& ground_truth,
                    const EvalConfig& cfg = {});

// Detections file: JSON list of {image_id, category_id, bbox [x, y, w, h], score}.
std::vector<Detection> detections_from_json(const std::string& text);
std::vector<Detection> read_detections(const std::filesystem::path& path);
std::string detections_to_json(std::span<const Detection> detections);

// Detections that reference images or categories absent from the ground
// truth, or scores outside [0, 1], raise Error.
void validate_detections(std::span<const Detection> detections, const DetectionDataset& ground_truth);

inline constexpr std::array<const char*, 5> kHeadlineMetrics = {"mAP", "AP50", "AP75", "APm", "APl"};

std::string report_json(const EvalReport& report);
// Aligned table: mAP AP50 AP75 APm APl, then the localization score.
std::string report_table(const EvalReport& report);

}  // namespace camodet::eval
