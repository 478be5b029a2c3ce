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
#include <span>
#include <string>
#include <vector>

#include "camodet/geometry.hpp"
#include "camodet/rng.hpp"

// Adaptive gradient propagation on a small three-stage detector
// (backbone -> neck -> head). The gradient reaching each stage boundary can be
// damped by a restriction factor.
namespace camodet::agp {

inline constexpr double kDefaultRestriction = 0.08;

struct ModelDims {
  int input = 256;    // D: 16x16 grayscale region feature
  int backbone = 64;  // H1
  int neck = 32;      // H2
  int classes = 3;    // C
  int embed = 32;     // E

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

enum class Stage { kBackbone, kNeck, kHead };

enum class Block {
  kBackboneW,  // H1 x D
  kBackboneB,  // H1
  kNeckW,      // H2 x H1
  kNeckB,      // H2
  kBoxW,       // 4 x H2, outputs (cx, cy, w, h) before the sigmoid
  kBoxB,       // 4
  kClsW,       // C x H2
  kClsB,       // C
  kEmbW,       // E x H2, region embedding projection
  kEmbB,       // E
  kClassEmb,   // C x E, one learned embedding per class
};

inline constexpr std::array<Block, 11> kAllBlocks = {
    Block::kBackboneW, Block::kBackboneB, Block::kNeckW, Block::kNeckB,
    Block::kBoxW,      Block::kBoxB,      Block::kClsW,  Block::kClsB,
    Block::kEmbW,      Block::kEmbB,      Block::kClassEmb};

const char* block_name(Block b) noexcept;
Stage block_stage(Block b) noexcept;

struct BlockShape {
  int rows = 0;
  int cols = 1;
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows) * cols; }
};

// All parameters of the model in one flat vector; gradients use the same type.
class StagedParams {
 public:
  StagedParams() = default;
  explicit StagedParams(const ModelDims& dims);  // all zeros

  const ModelDims& dims() const noexcept { return dims_; }
  BlockShape shape(Block b) const noexcept;
  std::size_t offset(Block b) const noexcept { return offsets_[static_cast<std::size_t>(b)]; }

  std::span<double> block(Block b) noexcept;
  std::span<const double> block(Block b) const noexcept;
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  bool all_finite() const noexcept;

  friend bool operator==(const StagedParams&, const StagedParams&) = default;

 private:
  ModelDims dims_;
  std::array<std::size_t, kAllBlocks.size() + 1> offsets_{};
  std::vector<double> values_;
};

// Weights ~ N(0, 1/fan_in), biases zero, class embeddings ~ N(0, 1).
StagedParams init_params(const ModelDims& dims, Rng& rng);

// A normalized box, target class index in [0, C) and the region feature.
struct RegionInput {
  std::vector<double> features;
  Box target;
  int target_class = 0;
};

struct ForwardOutput {
  std::array<double, 4> corners{};  // normalized x_min, y_min, x_max, y_max
  std::array<double, 4> box_cxcywh{};
  std::vector<double> logits;
  std::vector<double> embedding;

  Box pred_box() const { return Box(corners[0], corners[1], corners[2], corners[3]); }
};

ForwardOutput forward_staged(const StagedParams& params, std::span<const double> features);

// ---- losses ----------------------------------------------------------------

struct LossConfig {
  double gamma = 2.0;     // focal focusing
  double alpha = 0.25;    // focal weight
  double tau = 0.07;      // contrastive temperature
  double w_bbox = 1.0;
  double w_contrastive = 1.0;
  double w_cls = 1.0;

  void validate() const;
};

// -alpha (1 - p_t)^gamma log p_t with p_t the softmax probability of the
// target; p_t is clamped to >= 1e-12 before the log.
double focal_loss(std::span<const double> logits, int target, double gamma, double alpha);

double giou_loss(const Box& pred, const Box& target);

// Cross-entropy over cosine similarities / tau between the region embedding
// and each row of class_embeddings (C x E, row-major).
double contrastive_loss(std::span<const double> region, std::span<const double> class_embeddings,
                        int target, double tau);

struct LossBreakdown {
  double total = 0;
  double bbox = 0;
  double contrastive = 0;
  double cls = 0;
};

// Mean over regions of w_bbox * GIoU + w_c * contrastive + w_cls * focal.
LossBreakdown detection_loss(const StagedParams& params, std::span<const RegionInput> batch,
                             const LossConfig& cfg);

// ---- restricted backward ---------------------------------------------------

enum class RestrictionMode {
  kBoundary,  // damp the signal crossing head->neck and neck->backbone
  kUpdate,    // scale every stage's gradient by one factor
};

struct RestrictionConfig {
  RestrictionMode mode = RestrictionMode::kBoundary;
  double head_to_neck = kDefaultRestriction;
  double neck_to_backbone = kDefaultRestriction;
  double uniform = kDefaultRestriction;

  static RestrictionConfig unrestricted() {
    return {RestrictionMode::kBoundary, 1.0, 1.0, 1.0};
  }
  void validate() const;
};

struct GradientResult {
  StagedParams grad;
  LossBreakdown loss;
};

// Reverse-mode gradient of detection_loss under the restriction rule.
// Per-region gradients are computed in parallel and summed in batch order, so
// the result does not depend on the thread count.
GradientResult backward_restricted(const StagedParams& params, std::span<const RegionInput> batch,
                                   const RestrictionConfig& rcfg, const LossConfig& lcfg);

// Single-threaded reference; bit-identical to backward_restricted.
GradientResult backward_restricted_serial(const StagedParams& params,
                                          std::span<const RegionInput> batch,
                                          const RestrictionConfig& rcfg, const LossConfig& lcfg);

// ---- finite-difference oracle ----------------------------------------------

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckFloor = 1e-6;

// Central differences of detection_loss over every parameter.
StagedParams numeric_gradient(const StagedParams& params, std::span<const RegionInput> batch,
                              const LossConfig& cfg, double step = kGradCheckStep);

// |a - n| / max(|a|, |n|, floor), maximised over entries.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor = kGradCheckFloor);

struct GradCheckReport {
  double max_relative_error = 0;
  std::array<double, kAllBlocks.size()> per_block{};
  std::size_t parameters = 0;
};

// Random model of the given dims plus a random batch, unrestricted gradient
// against central differences.
GradCheckReport gradient_check(const ModelDims& dims, std::size_t batch_size, std::uint64_t seed,
                               const LossConfig& cfg = {});

std::vector<RegionInput> random_regions(const ModelDims& dims, std::size_t n, Rng& rng);

}  // namespace camodet::agp
