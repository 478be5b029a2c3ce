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
#include <span>
#include <vector>

namespace camodet::agp {

inline constexpr double kDefaultLearningRate = 3e-4;
inline constexpr double kDefaultWeightDecay = 0.05;

struct AdamWConfig {
  double lr = kDefaultLearningRate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = kDefaultWeightDecay;

  void validate() const;
};

// Bias-corrected Adam with decoupled weight decay:
//   theta <- theta * (1 - lr * wd)
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  AdamW(std::size_t n_params, const AdamWConfig& cfg);

  void step(std::span<double> params, std::span<const double> grad);

  std::int64_t steps() const noexcept { return t_; }
  const AdamWConfig& config() const noexcept { return cfg_; }
  std::span<const double> first_moment() const noexcept { return m_; }
  std::span<const double> second_moment() const noexcept { return v_; }

 private:
  AdamWConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

// theta <- theta - lr * grad
void sgd_step(std::span<double> params, std::span<const double> grad, double lr);

}  // namespace camodet::agp
