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
#include <optional>
#include <string>
#include <vector>

#include "camodet/agp.hpp"
#include "camodet/dataset.hpp"
#include "camodet/optim.hpp"
#include "camodet/sfr.hpp"

namespace camodet::agp {

inline constexpr int kFeatureSide = 16;

// Mean-pools the grayscale image into a side x side grid and scales to [0, 1].
std::vector<double> featurize(const Image& image, int side = kFeatureSide);

// One RegionInput per label: the whole-image feature, the label box
// normalized by the image size and the label's category mapped to its index
// in `categories`.
std::vector<RegionInput> regions_from_sample(const Sample& sample, const Image& image,
                                             const std::vector<Category>& categories);

// Separable three-class toy task: one solid square of a class-specific colour
// on a dark noisy 64x64 background per image. Pixels are held in memory.
DetectionDataset make_synthetic_dataset(std::size_t n_images, std::uint64_t seed);

enum class Stepper { kAdamW, kSgd };

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  std::uint64_t seed = 0;
  Stepper stepper = Stepper::kAdamW;
  AdamWConfig adamw;  // lr is also the SGD step size
  RestrictionConfig restriction;
  LossConfig loss;
  ModelDims hidden;   // input and classes are overwritten from the data
  bool online_sfr = false;
  sfr::SfrConfig sfr;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;  // mean over the epoch's batches
  std::int64_t iterations = 0;
  double wall_time_s = 0;
};

struct TrainResult {
  StagedParams params;
  std::vector<EpochRecord> log;
  double initial_loss = 0;  // full training set, before the first step
  double final_loss = 0;    // full training set, after the last step
  std::int64_t iterations = 0;
};

// Mini-batch loop: optional online SFR per batch, detection_loss,
// backward_restricted, then an AdamW (or SGD) step. Deterministic for a seed.
TrainResult train_toy(const DetectionDataset& ds, const sfr::ImageLoader& load,
                      const TrainConfig& cfg);

// Same loop over prepared regions, starting from `init`.
TrainResult train_regions(const std::vector<RegionInput>& regions, StagedParams init,
                          const TrainConfig& cfg);

// JSON-lines, one record per epoch.
std::string training_log_jsonl(const TrainResult& result, const TrainConfig& cfg,
                               bool include_wall_time = true);

// JSON with the model dims and every block's name, shape and values. Doubles
// are written in shortest round-trip form, so reading back is exact.
std::string checkpoint_json(const StagedParams& params);
StagedParams checkpoint_from_json(const std::string& text);
void save_checkpoint(const StagedParams& params, const std::filesystem::path& path);
StagedParams load_checkpoint(const std::filesystem::path& path);

}  // namespace camodet::agp
