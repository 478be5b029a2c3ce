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

#include "camodet/train.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

#include "camodet/atomic_file.hpp"
#include "camodet/error.hpp"
#include "json.hpp"

namespace camodet::agp {

using nlohmann::json;

std::vector<double> featurize(const Image& image, int side) {
  const Image gray = to_grayscale(image);
  const int w = gray.width();
  const int h = gray.height();
  std::vector<double> out(static_cast<std::size_t>(side) * side);
  for (int gy = 0; gy < side; ++gy) {
    const int y0 = gy * h / side;
    const int y1 = std::max(y0 + 1, (gy + 1) * h / side);
    for (int gx = 0; gx < side; ++gx) {
      const int x0 = gx * w / side;
      const int x1 = std::max(x0 + 1, (gx + 1) * w / side);
      std::uint64_t sum = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) sum += gray.at(x, y);
      }
      const auto count = static_cast<double>((y1 - y0) * (x1 - x0));
      out[static_cast<std::size_t>(gy * side + gx)] = static_cast<double>(sum) / count / 255.0;
    }
  }
  return out;
}

std::vector<RegionInput> regions_from_sample(const Sample& sample, const Image& image,
                                             const std::vector<Category>& categories) {
  std::vector<RegionInput> out;
  if (sample.labels.empty()) return out;
  const auto feat = featurize(image);
  const double w = sample.width;
  const double h = sample.height;
  for (const auto& l : sample.labels) {
    auto it = std::find_if(categories.begin(), categories.end(),
                           [&](const Category& c) { return c.id == l.category_id; });
    if (it == categories.end()) {
      throw Error(ErrorCode::kUnknownCategory,
                  "image " + std::to_string(sample.image_id) + ": unknown category " +
                      std::to_string(l.category_id));
    }
    const Box norm(l.box.x_min() / w, l.box.y_min() / h, l.box.x_max() / w, l.box.y_max() / h);
    out.push_back({feat, norm, static_cast<int>(it - categories.begin())});
  }
  return out;
}

DetectionDataset make_synthetic_dataset(std::size_t n_images, std::uint64_t seed) {
  constexpr int kSide = 64;
  // Luma roughly 90, 154 and 218 against a background below 32.
  constexpr std::uint8_t kColours[3][3] = {{230, 30, 30}, {60, 220, 60}, {200, 220, 255}};
  DetectionDataset ds;
  ds.categories = {{1, "red"}, {2, "green"}, {3, "pale_blue"}};
  Rng rng(seed);
  for (std::size_t i = 0; i < n_images; ++i) {
    Image img(kSide, kSide, 3);
    for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(rng.uniform_index(32));
    const int cls = static_cast<int>(rng.uniform_index(3));
    const int side = 12 + static_cast<int>(rng.uniform_index(17));
    const int x0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(kSide - side + 1)));
    const int y0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(kSide - side + 1)));
    for (int y = y0; y < y0 + side; ++y) {
      for (int x = x0; x < x0 + side; ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = kColours[cls][c];
      }
    }
    Sample s;
    s.image_id = static_cast<std::int64_t>(i) + 1;
    s.image_path = "synthetic/" + std::to_string(i) + ".png";
    s.width = kSide;
    s.height = kSide;
    s.labels.push_back({Box(x0, y0, x0 + side, y0 + side), cls + 1, false});
    s.pixels = std::make_shared<const Image>(std::move(img));
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  adamw.validate();
  restriction.validate();
  loss.validate();
  if (online_sfr) sfr.validate();
}

namespace {

using BatchBuilder = std::function<std::vector<RegionInput>(std::span<const std::size_t>, std::int64_t)>;

TrainResult run_loop(std::size_t n_items, const BatchBuilder& build,
                     const std::vector<RegionInput>& eval_regions, StagedParams params,
                     const TrainConfig& cfg, Rng& rng) {
  TrainResult res;
  res.initial_loss = detection_loss(params, eval_regions, cfg.loss).total;
  AdamW adamw(params.size(), cfg.adamw);
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < n_items; start += bs) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(bs, n_items - start));
      const auto batch = build(idx, res.iterations);
      if (batch.empty()) continue;
      const GradientResult gr = backward_restricted(params, batch, cfg.restriction, cfg.loss);
      if (cfg.stepper == Stepper::kAdamW) {
        adamw.step(params.values(), gr.grad.values());
      } else {
        sgd_step(params.values(), gr.grad.values(), cfg.adamw.lr);
      }
      rec.loss.total += gr.loss.total;
      rec.loss.bbox += gr.loss.bbox;
      rec.loss.contrastive += gr.loss.contrastive;
      rec.loss.cls += gr.loss.cls;
      ++rec.iterations;
      ++res.iterations;
    }
    if (rec.iterations > 0) {
      const auto n = static_cast<double>(rec.iterations);
      rec.loss.total /= n;
      rec.loss.bbox /= n;
      rec.loss.contrastive /= n;
      rec.loss.cls /= n;
    }
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(rec);
  }
  res.final_loss = detection_loss(params, eval_regions, cfg.loss).total;
  res.params = std::move(params);
  return res;
}

}  // namespace

TrainResult train_toy(const DetectionDataset& ds, const sfr::ImageLoader& load,
                      const TrainConfig& cfg) {
  cfg.validate();
  std::vector<Sample> train;
  for (const auto& s : ds.samples) {
    if (s.split == Split::kTrain && !s.labels.empty()) train.push_back(s);
  }
  if (train.empty() || ds.categories.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no labeled training images");
  }

  // Base regions per sample, computed once.
  std::vector<std::vector<RegionInput>> per_sample;
  std::vector<RegionInput> all;
  for (const auto& s : train) {
    per_sample.push_back(regions_from_sample(s, load(s), ds.categories));
    all.insert(all.end(), per_sample.back().begin(), per_sample.back().end());
  }

  ModelDims dims = cfg.hidden;
  dims.input = kFeatureSide * kFeatureSide;
  dims.classes = static_cast<int>(ds.categories.size());
  Rng rng(cfg.seed);
  StagedParams params = init_params(dims, rng);

  BatchBuilder build = [&](std::span<const std::size_t> idx, std::int64_t iteration) {
    std::vector<RegionInput> batch;
    for (std::size_t i : idx) batch.insert(batch.end(), per_sample[i].begin(), per_sample[i].end());
    if (cfg.online_sfr) {
      std::vector<Sample> samples;
      for (std::size_t i : idx) samples.push_back(train[i]);
      sfr::SfrConfig scfg = cfg.sfr;
      scfg.seed = cfg.sfr.seed + static_cast<std::uint64_t>(iteration) * 0x10000ULL;
      const auto aug = sfr::augment_batch_online(samples, load, scfg);
      for (std::size_t k = samples.size(); k < aug.samples.size(); ++k) {
        const auto extra = regions_from_sample(aug.samples[k], *aug.samples[k].pixels, ds.categories);
        batch.insert(batch.end(), extra.begin(), extra.end());
      }
    }
    return batch;
  };
  return run_loop(train.size(), build, all, std::move(params), cfg, rng);
}

TrainResult train_regions(const std::vector<RegionInput>& regions, StagedParams init,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (regions.empty()) throw Error(ErrorCode::kEmptyDataset, "no training regions");
  Rng rng(cfg.seed);
  BatchBuilder build = [&](std::span<const std::size_t> idx, std::int64_t) {
    std::vector<RegionInput> batch;
    for (std::size_t i : idx) batch.push_back(regions[i]);
    return batch;
  };
  return run_loop(regions.size(), build, regions, std::move(init), cfg, rng);
}

std::string training_log_jsonl(const TrainResult& result, const TrainConfig& cfg,
                               bool include_wall_time) {
  std::string out;
  const bool boundary = cfg.restriction.mode == RestrictionMode::kBoundary;
  for (const auto& r : result.log) {
    json j = {{"epoch", r.epoch},
              {"iterations", r.iterations},
              {"loss", r.loss.total},
              {"loss_bbox", r.loss.bbox},
              {"loss_contrastive", r.loss.contrastive},
              {"loss_cls", r.loss.cls},
              {"restriction_mode", boundary ? "boundary" : "update"}};
    if (boundary) {
      j["lambda_head_to_neck"] = cfg.restriction.head_to_neck;
      j["lambda_neck_to_backbone"] = cfg.restriction.neck_to_backbone;
    } else {
      j["lambda"] = cfg.restriction.uniform;
    }
    if (include_wall_time) j["wall_time_s"] = r.wall_time_s;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string checkpoint_json(const StagedParams& params) {
  const ModelDims& d = params.dims();
  json root;
  root["format"] = "camodet-checkpoint-v1";
  root["dims"] = {{"input", d.input},
                  {"backbone", d.backbone},
                  {"neck", d.neck},
                  {"classes", d.classes},
                  {"embed", d.embed}};
  root["blocks"] = json::array();
  for (Block b : kAllBlocks) {
    const BlockShape s = params.shape(b);
    const auto v = params.block(b);
    root["blocks"].push_back({{"name", block_name(b)},
                              {"shape", {s.rows, s.cols}},
                              {"values", std::vector<double>(v.begin(), v.end())}});
  }
  return root.dump() + "\n";
}

StagedParams checkpoint_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("checkpoint: ") + e.what());
  }
  try {
    const json& d = root.at("dims");
    ModelDims dims{d.at("input").get<int>(), d.at("backbone").get<int>(), d.at("neck").get<int>(),
                   d.at("classes").get<int>(), d.at("embed").get<int>()};
    StagedParams p(dims);
    const json& blocks = root.at("blocks");
    if (!blocks.is_array() || blocks.size() != kAllBlocks.size()) {
      throw Error(ErrorCode::kMalformedJson, "checkpoint: wrong number of blocks");
    }
    for (std::size_t i = 0; i < kAllBlocks.size(); ++i) {
      const Block b = kAllBlocks[i];
      const json& jb = blocks[i];
      if (jb.at("name").get<std::string>() != block_name(b)) {
        throw Error(ErrorCode::kMalformedJson, std::string("checkpoint: expected block ") + block_name(b));
      }
      const auto shape = jb.at("shape").get<std::vector<int>>();
      const BlockShape s = p.shape(b);
      if (shape.size() != 2 || shape[0] != s.rows || shape[1] != s.cols) {
        throw Error(ErrorCode::kMalformedJson, std::string("checkpoint: shape mismatch in ") + block_name(b));
      }
      const auto values = jb.at("values").get<std::vector<double>>();
      if (values.size() != s.size()) {
        throw Error(ErrorCode::kMalformedJson, std::string("checkpoint: size mismatch in ") + block_name(b));
      }
      std::copy(values.begin(), values.end(), p.block(b).begin());
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const StagedParams& params, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_json(params));
}

StagedParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return checkpoint_from_json({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

}  // namespace camodet::agp
