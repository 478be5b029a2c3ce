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

#include "camodet/sfr.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "camodet/atomic_file.hpp"
#include "camodet/error.hpp"
#include "json.hpp"

namespace camodet::sfr {

Box GridSpec::cell_box(int cell) const {
  const int cs = cell_size();
  const int r = cell / g;
  const int c = cell % g;
  return Box(c * cs, r * cs, (c + 1) * cs, (r + 1) * cs);
}

void GridSpec::validate() const {
  if (g < 2) throw Error(ErrorCode::kInvalidArgument, "grid dimension must be >= 2");
  if (canvas_size < g) throw Error(ErrorCode::kInvalidArgument, "canvas size must be >= grid dimension");
}

void SfrConfig::validate() const {
  if (grids.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one grid is required");
  for (int g : grids) GridSpec{g, canvas_size}.validate();
  if (pool_size < 1) throw Error(ErrorCode::kInvalidArgument, "pool size must be >= 1");
  if (crop_width < 1 || crop_height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "crop size must be >= 1");
  }
}

Image resample_region(const Image& src, int x0, int y0, int w, int h, int out_w, int out_h) {
  Image out(out_w, out_h, src.channels());
  const int ch = src.channels();
  std::vector<int> xs(static_cast<std::size_t>(out_w));
  for (int u = 0; u < out_w; ++u) {
    xs[static_cast<std::size_t>(u)] =
        x0 + static_cast<int>((static_cast<std::int64_t>(2 * u + 1) * w) / (2LL * out_w));
  }
  for (int v = 0; v < out_h; ++v) {
    const int sy = y0 + static_cast<int>((static_cast<std::int64_t>(2 * v + 1) * h) / (2LL * out_h));
    const auto src_row = src.row(sy);
    auto dst_row = out.row(v);
    for (int u = 0; u < out_w; ++u) {
      const auto sx = static_cast<std::size_t>(xs[static_cast<std::size_t>(u)]);
      for (int c = 0; c < ch; ++c) {
        dst_row[static_cast<std::size_t>(u * ch + c)] = src_row[sx * ch + static_cast<std::size_t>(c)];
      }
    }
  }
  return out;
}

Image resample_nearest(const Image& src, int out_w, int out_h) {
  return resample_region(src, 0, 0, src.width(), src.height(), out_w, out_h);
}

std::optional<CropPatch> crop_region(const Image& image, const Box& box, int out_w, int out_h) {
  if (box.x_min() < 0 || box.y_min() < 0 || box.x_max() > image.width() ||
      box.y_max() > image.height()) {
    std::ostringstream os;
    os << "crop box " << box << " outside " << image.width() << "x" << image.height() << " image";
    throw Error(ErrorCode::kBoxOutOfImage, os.str());
  }
  const int x0 = static_cast<int>(std::floor(box.x_min()));
  const int y0 = static_cast<int>(std::floor(box.y_min()));
  const int w = static_cast<int>(std::ceil(box.x_max())) - x0;
  const int h = static_cast<int>(std::ceil(box.y_max())) - y0;
  if (w < kMinBoxSide || h < kMinBoxSide) return std::nullopt;
  CropPatch patch{to_rgb(resample_region(image, x0, y0, w, h, out_w, out_h)), 0, 0, box, 0};
  return patch;
}

PoolPartition partition_pool(std::size_t n_boxes, int g) {
  if (n_boxes < 1) throw Error(ErrorCode::kInvalidArgument, "partition_pool needs at least one box");
  if (g < 1) throw Error(ErrorCode::kInvalidArgument, "grid dimension must be >= 1");
  const auto cells = static_cast<std::size_t>(g) * static_cast<std::size_t>(g);
  const std::size_t canvases = (n_boxes + cells - 1) / cells;
  return {canvases, canvases * cells - n_boxes};
}

MosaicCanvas assemble_canvas(std::span<const CropPatch> crops, const GridSpec& grid, Rng& rng) {
  grid.validate();
  const int n_cells = grid.cells();
  if (crops.empty()) throw Error(ErrorCode::kInvalidArgument, "assemble_canvas needs at least one crop");
  if (crops.size() > static_cast<std::size_t>(n_cells)) {
    throw Error(ErrorCode::kTooManyCrops, std::to_string(crops.size()) + " crops do not fit a " +
                                              std::to_string(grid.g) + "x" +
                                              std::to_string(grid.g) + " grid");
  }
  std::vector<int> perm(static_cast<std::size_t>(n_cells));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<int>(perm));

  MosaicCanvas canvas;
  canvas.grid = grid;
  canvas.pixels = Image(grid.canvas_size, grid.canvas_size, 3);
  canvas.cell_source.assign(static_cast<std::size_t>(n_cells), kBlackCell);
  const int cs = grid.cell_size();
  for (std::size_t i = 0; i < crops.size(); ++i) {
    const int cell = perm[i];
    const Image resized = to_rgb(resample_nearest(crops[i].pixels, cs, cs));
    const int ox = (cell % grid.g) * cs;
    const int oy = (cell / grid.g) * cs;
    for (int y = 0; y < cs; ++y) {
      const auto src = resized.row(y);
      auto dst = canvas.pixels.row(oy + y).subspan(static_cast<std::size_t>(ox) * 3, src.size());
      std::copy(src.begin(), src.end(), dst.begin());
    }
    canvas.labels.push_back({grid.cell_box(cell), crops[i].category_id, false});
    canvas.label_cells.push_back(cell);
    canvas.cell_source[static_cast<std::size_t>(cell)] = crops[i].crop_id;
  }
  return canvas;
}

std::vector<CanvasJob> plan_canvases(std::size_t n_crops, const SfrConfig& cfg) {
  cfg.validate();
  std::vector<CanvasJob> jobs;
  std::int64_t canvas_index = 0;
  const auto pool = static_cast<std::size_t>(cfg.pool_size);
  for (std::size_t start = 0, p = 0; start < n_crops; start += pool, ++p) {
    const std::size_t pool_n = std::min(pool, n_crops - start);
    for (int g : cfg.grids) {
      const GridSpec grid{g, cfg.canvas_size};
      const auto cells = static_cast<std::size_t>(grid.cells());
      for (std::size_t off = 0; off < pool_n; off += cells) {
        jobs.push_back({start + off, std::min(cells, pool_n - off), grid, p, canvas_index++});
      }
    }
  }
  return jobs;
}

namespace {

MosaicCanvas build_one(std::span<const CropPatch> crops, const CanvasJob& job, std::uint64_t seed) {
  Rng rng(seed + static_cast<std::uint64_t>(job.canvas_index));
  MosaicCanvas c = assemble_canvas(crops.subspan(job.first_crop, job.crop_count), job.grid, rng);
  c.canvas_index = job.canvas_index;
  c.pool_index = job.pool_index;
  return c;
}

// Decorrelates the pool shuffle from the per-canvas streams seed + k.
std::uint64_t shuffle_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<MosaicCanvas> build_canvases(std::span<const CropPatch> crops,
                                         std::span<const CanvasJob> jobs, std::uint64_t seed) {
  std::vector<MosaicCanvas> out(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
  // Exceptions must not escape an OpenMP region; the first one is rethrown.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = build_one(crops, jobs[static_cast<std::size_t>(i)], seed);
    } catch (...) {
#pragma omp critical(camodet_sfr_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<MosaicCanvas> build_canvases_serial(std::span<const CropPatch> crops,
                                                std::span<const CanvasJob> jobs,
                                                std::uint64_t seed) {
  std::vector<MosaicCanvas> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(build_one(crops, job, seed));
  return out;
}

CropCollection collect_shuffled_crops(std::span<const Sample> samples, const ImageLoader& load,
                                      const SfrConfig& cfg) {
  cfg.validate();
  CropCollection out;
  for (const auto& s : samples) {
    if (s.labels.empty()) continue;
    const Image img = load(s);
    for (const auto& l : s.labels) {
      auto patch = crop_region(img, l.box, cfg.crop_width, cfg.crop_height);
      if (!patch) {
        ++out.skipped;
        continue;
      }
      patch->source_image_id = s.image_id;
      patch->category_id = l.category_id;
      out.crops.push_back(std::move(*patch));
    }
  }
  Rng rng(shuffle_seed(cfg.seed));
  rng.shuffle(std::span<CropPatch>(out.crops));
  for (std::size_t i = 0; i < out.crops.size(); ++i) {
    out.crops[i].crop_id = static_cast<std::int64_t>(i);
  }
  return out;
}

namespace {

std::string canvas_file_name(std::int64_t canvas_index) {
  std::ostringstream os;
  os << "canvas_" << std::setw(6) << std::setfill('0') << canvas_index << ".png";
  return os.str();
}

OfflineResult run_pools(std::vector<CropPatch> crops, std::size_t skipped,
                        const std::vector<Category>& categories, const SfrConfig& cfg) {
  const auto jobs = plan_canvases(crops.size(), cfg);
  OfflineResult res;
  res.usable_boxes = crops.size();
  res.skipped_boxes = skipped;
  res.canvases = build_canvases(crops, jobs, cfg.seed);
  res.pseudo.categories = categories;
  for (const auto& c : res.canvases) {
    Sample s;
    s.image_id = c.canvas_index + 1;
    s.image_path = "images/" + canvas_file_name(c.canvas_index);
    s.width = c.grid.canvas_size;
    s.height = c.grid.canvas_size;
    s.labels = c.labels;
    s.split = Split::kTrain;
    res.pseudo.samples.push_back(std::move(s));
  }
  return res;
}

}  // namespace

OfflineResult generate_offline(const DetectionDataset& ds, const ImageLoader& load,
                               const SfrConfig& cfg) {
  std::vector<Sample> train;
  for (const auto& s : ds.samples) {
    if (s.split == Split::kTrain) train.push_back(s);
  }
  auto collected = collect_shuffled_crops(train, load, cfg);
  if (collected.crops.empty()) {
    throw Error(ErrorCode::kEmptyPool, "no usable boxes in the train split");
  }
  return run_pools(std::move(collected.crops), collected.skipped, ds.categories, cfg);
}

std::string manifest_json(const OfflineResult& result, const SfrConfig& cfg) {
  using nlohmann::json;
  json m;
  m["seed"] = cfg.seed;
  m["grids"] = cfg.grids;
  m["pool_size"] = cfg.pool_size;
  m["crop"] = {cfg.crop_width, cfg.crop_height};
  m["canvas_size"] = cfg.canvas_size;
  m["usable_boxes"] = result.usable_boxes;
  m["skipped_boxes"] = result.skipped_boxes;
  json canvases = json::array();
  for (std::size_t i = 0; i < result.canvases.size(); ++i) {
    const auto& c = result.canvases[i];
    json cells = json::array();
    for (std::int64_t src : c.cell_source) {
      cells.push_back(src == kBlackCell ? json(nullptr) : json(src));
    }
    canvases.push_back({{"image_id", result.pseudo.samples[i].image_id},
                        {"file_name", result.pseudo.samples[i].image_path},
                        {"canvas_index", c.canvas_index},
                        {"pool_index", c.pool_index},
                        {"grid", c.grid.g},
                        {"cell_size", c.grid.cell_size()},
                        {"cells", std::move(cells)}});
  }
  m["canvases"] = std::move(canvases);
  return m.dump(1) + "\n";
}

OfflineResult generate_offline(const DetectionDataset& ds, const ImageLoader& load,
                               const SfrConfig& cfg, const std::filesystem::path& out_dir) {
  OfflineResult res = generate_offline(ds, load, cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create " + (out_dir / "images").string() + ": " + ec.message());
  }
  // Single writer: images first, then the files that reference them.
  for (std::size_t i = 0; i < res.canvases.size(); ++i) {
    write_image(res.canvases[i].pixels, out_dir / res.pseudo.samples[i].image_path);
  }
  write_annotations(res.pseudo, out_dir / "annotations.json");
  write_file_atomic(out_dir / "manifest.json", manifest_json(res, cfg));
  return res;
}

OnlineResult augment_batch_online(std::span<const Sample> batch, const ImageLoader& load,
                                  const SfrConfig& cfg) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "online augmentation needs a non-empty batch");
  OnlineResult out;
  out.samples.assign(batch.begin(), batch.end());
  auto collected = collect_shuffled_crops(batch, load, cfg);
  if (collected.skipped > 0) {
    out.warnings.push_back(std::to_string(collected.skipped) + " boxes below the minimum crop size skipped");
  }
  if (collected.crops.empty()) {
    out.warnings.push_back("batch has no usable boxes; returned unchanged");
    return out;
  }
  const auto jobs = plan_canvases(collected.crops.size(), cfg);
  out.canvases = build_canvases(collected.crops, jobs, cfg.seed);
  std::int64_t next_id = 0;
  for (const auto& s : batch) next_id = std::max(next_id, s.image_id);
  for (const auto& c : out.canvases) {
    Sample s;
    s.image_id = ++next_id;
    s.image_path = "<online>/" + canvas_file_name(c.canvas_index);
    s.width = c.grid.canvas_size;
    s.height = c.grid.canvas_size;
    s.labels = c.labels;
    s.split = Split::kTrain;
    s.pixels = std::make_shared<const Image>(c.pixels);
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace camodet::sfr
