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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "camodet/geometry.hpp"
#include "camodet/image.hpp"

namespace camodet {

struct Category {
  int id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

// category_id 0 means "not yet assigned" (fresh output of mask_to_boxes).
struct LabeledBox {
  Box box;
  int category_id = 0;
  bool review = false;

  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

enum class Split { kTrain, kTest };

const char* split_name(Split s) noexcept;

struct Sample {
  std::int64_t image_id = 0;
  std::string image_path;
  int width = 0;
  int height = 0;
  std::vector<LabeledBox> labels;
  Split split = Split::kTrain;
  // In-memory raster for samples that never touch disk (online pseudo-images,
  // synthetic data). Not serialized and not part of equality.
  std::shared_ptr<const Image> pixels;

  friend bool operator==(const Sample& a, const Sample& b) {
    return a.image_id == b.image_id && a.image_path == b.image_path &&
           a.width == b.width && a.height == b.height && a.labels == b.labels &&
           a.split == b.split;
  }
};

struct DetectionDataset {
  std::vector<Category> categories;
  std::vector<Sample> samples;

  const Category* find_category(int id) const noexcept;

  friend bool operator==(const DetectionDataset&, const DetectionDataset&) = default;
};

// Throws Error on duplicate ids, unknown categories, or out-of-image boxes.
void validate(const DetectionDataset& ds);

// Returns sample.pixels when present, otherwise reads image_root/image_path.
Image load_sample_image(const Sample& sample, const std::filesystem::path& image_root);

// ---- mask conversion -------------------------------------------------------

inline constexpr int kDefaultMaskThreshold = 128;

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// 8-connected components of {p : mask(p) >= threshold}, ordered by each
// component's first pixel in row-major order. Pixels within a component are in
// discovery order. Multi-channel masks are converted to luma first.
std::vector<std::vector<Pixel>> connected_components(const Image& mask,
                                                     int threshold = kDefaultMaskThreshold);

// One tight box per component. When the mask splits into more than one
// component every box is flagged for review.
std::vector<LabeledBox> mask_to_boxes(const Image& mask, int threshold = kDefaultMaskThreshold);

// Chebyshev gap between two boxes: the larger of the per-axis gaps, zero when
// they touch or overlap.
double box_gap(const Box& a, const Box& b) noexcept;

// Repeatedly merges boxes whose gap is <= max_gap into their joint extent
// until no pair qualifies. Merged boxes get review = true and the category of
// their earliest member. Output is ordered by earliest member index.
std::vector<LabeledBox> merge_boxes(const std::vector<LabeledBox>& boxes, double max_gap);

// ---- serialization ---------------------------------------------------------

// COCO-flavored JSON: images / annotations / categories with bbox as
// [x, y, width, height]. Images carry an extra "split" key.
std::string annotations_to_json(const DetectionDataset& ds);
DetectionDataset annotations_from_json(const std::string& text);

DetectionDataset read_annotations(const std::filesystem::path& path);
void write_annotations(const DetectionDataset& ds, const std::filesystem::path& path);

// ---- statistics ------------------------------------------------------------

struct DatasetSummary {
  std::size_t categories = 0;
  std::size_t train_images = 0;
  std::size_t test_images = 0;
  std::size_t boxes = 0;
  std::map<int, std::size_t> boxes_per_category;

  friend bool operator==(const DatasetSummary&, const DatasetSummary&) = default;
};

DatasetSummary dataset_summary(const DetectionDataset& ds);

// Reference category / train / test counts of the three box-annotated
// camouflage datasets, for checking a locally converted copy.
struct ReferenceCounts {
  const char* name;
  std::size_t categories;
  std::size_t train_images;
  std::size_t test_images;
};

inline constexpr ReferenceCounts kReferenceCounts[] = {
    {"COD10K-D", 68, 6000, 4000},
    {"NC4K-D", 37, 2863, 1227},
    {"CAMO-D", 43, 744, 497},
};

// Case-insensitive lookup; nullptr when unknown.
const ReferenceCounts* find_reference_counts(std::string_view name) noexcept;

bool matches_reference(const DatasetSummary& s, const ReferenceCounts& ref) noexcept;

// Plain-text table: one row of totals and the per-category histogram.
std::string format_summary(const DatasetSummary& s, const DetectionDataset& ds);

}  // namespace camodet
