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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camodet/dataset.hpp"
#include "camodet/geometry.hpp"
#include "camodet/image.hpp"
#include "camodet/rng.hpp"

// Sparse feature refinement: every labeled box is cut out to a fixed-size
// patch, and pools of patches are tiled onto black g x g canvases whose cells
// become the new labels.
namespace camodet::sfr {

inline constexpr int kDefaultCropSize = 200;
inline constexpr int kDefaultCanvasSize = 800;
inline constexpr int kDefaultPoolSize = 16;
inline constexpr int kMinBoxSide = 2;
inline constexpr std::int64_t kBlackCell = -1;

struct CropPatch {
  Image pixels;  // RGB, exactly out_w x out_h
  std::int64_t crop_id = 0;
  std::int64_t source_image_id = 0;
  Box source_box;
  int category_id = 0;
};

struct GridSpec {
  int g = 4;
  int canvas_size = kDefaultCanvasSize;

  int cell_size() const noexcept { return canvas_size / g; }
  int cells() const noexcept { return g * g; }
  Box cell_box(int cell) const;  // row-major cell index
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct MosaicCanvas {
  Image pixels;  // RGB, canvas_size x canvas_size
  std::vector<LabeledBox> labels;
  std::vector<int> label_cells;  // cell index of each label
  GridSpec grid;
  std::vector<std::int64_t> cell_source;  // per cell: crop_id or kBlackCell
  std::int64_t canvas_index = 0;
  std::size_t pool_index = 0;
};

struct SfrConfig {
  std::vector<int> grids = {2, 3, 4};
  int pool_size = kDefaultPoolSize;
  int crop_width = kDefaultCropSize;
  int crop_height = kDefaultCropSize;
  int canvas_size = kDefaultCanvasSize;
  std::uint64_t seed = 0;

  void validate() const;
};

// Nearest-neighbour resample: output (u, v) reads source
// (floor((u + 0.5) * w / out_w), floor((v + 0.5) * h / out_h)). Computed in
// integer arithmetic, so the result is exact and platform independent.
Image resample_nearest(const Image& src, int out_w, int out_h);

// Same, restricted to the pixel rectangle [x0, x0 + w) x [y0, y0 + h).
Image resample_region(const Image& src, int x0, int y0, int w, int h, int out_w, int out_h);

// Crops the pixel region of `box` (its corners rounded outwards to the pixel
// grid) and resamples it to out_w x out_h. Returns nullopt, the skip signal,
// when the region is narrower or shorter than kMinBoxSide. Throws
// Error(kBoxOutOfImage) when the box leaves the image.
std::optional<CropPatch> crop_region(const Image& image, const Box& box, int out_w, int out_h);

struct PoolPartition {
  std::size_t canvases = 0;
  std::size_t black_cells = 0;

  friend bool operator==(const PoolPartition&, const PoolPartition&) = default;
};

// ceil(n / g^2) canvases and the black cells left over on the last one.
PoolPartition partition_pool(std::size_t n_boxes, int g);

// Places 1..g^2 crops onto one canvas at cells drawn by a uniform random
// permutation of the g^2 positions. Crop i goes to cell perm[i].
MosaicCanvas assemble_canvas(std::span<const CropPatch> crops, const GridSpec& grid, Rng& rng);

// One canvas to build: a contiguous run of the shuffled crop sequence.
struct CanvasJob {
  std::size_t first_crop = 0;
  std::size_t crop_count = 0;
  GridSpec grid;
  std::size_t pool_index = 0;
  std::int64_t canvas_index = 0;
};

// Consumes crops in pools of pool_size and, for every pool, lays out each
// requested grid once. Canvas k draws its permutation from Rng(seed + k).
std::vector<CanvasJob> plan_canvases(std::size_t n_crops, const SfrConfig& cfg);

// OpenMP-parallel over canvases. Output is independent of thread count.
std::vector<MosaicCanvas> build_canvases(std::span<const CropPatch> crops,
                                         std::span<const CanvasJob> jobs, std::uint64_t seed);

// Serial reference for build_canvases.
std::vector<MosaicCanvas> build_canvases_serial(std::span<const CropPatch> crops,
                                                std::span<const CanvasJob> jobs,
                                                std::uint64_t seed);

using ImageLoader = std::function<Image(const Sample&)>;

struct CropCollection {
  std::vector<CropPatch> crops;  // crop_id = position in this vector
  std::size_t skipped = 0;       // boxes below kMinBoxSide
};

// Crops every label of `samples` (in sample then label order) and then
// shuffles the sequence once with a stream derived from cfg.seed.
CropCollection collect_shuffled_crops(std::span<const Sample> samples, const ImageLoader& load,
                                      const SfrConfig& cfg);

struct OfflineResult {
  std::vector<MosaicCanvas> canvases;
  DetectionDataset pseudo;  // one train Sample per canvas, image_ids from 1
  std::size_t usable_boxes = 0;
  std::size_t skipped_boxes = 0;
};

// Whole-dataset generation from the train split, in memory.
OfflineResult generate_offline(const DetectionDataset& ds, const ImageLoader& load,
                               const SfrConfig& cfg);

// Runs generate_offline and writes images/canvas_NNNNNN.png,
// annotations.json and manifest.json under out_dir.
OfflineResult generate_offline(const DetectionDataset& ds, const ImageLoader& load,
                               const SfrConfig& cfg, const std::filesystem::path& out_dir);

std::string manifest_json(const OfflineResult& result, const SfrConfig& cfg);

struct OnlineResult {
  std::vector<Sample> samples;  // originals first, then pseudo-samples
  std::vector<MosaicCanvas> canvases;
  std::vector<std::string> warnings;
};

// The batch-level variant: the batch's boxes are pooled exactly as
// generate_offline pools a dataset, and the pseudo-samples (pixels held in
// memory) are appended to the original batch.
OnlineResult augment_batch_online(std::span<const Sample> batch, const ImageLoader& load,
                                  const SfrConfig& cfg);

}  // namespace camodet::sfr
