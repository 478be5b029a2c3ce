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

#include "camodet/optim.hpp"

#include <cmath>

#include "camodet/error.hpp"

namespace camodet::agp {

void AdamWConfig::validate() const {
  if (!(lr > 0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "Adam betas must be in [0, 1)");
  }
  if (!(eps > 0)) throw Error(ErrorCode::kInvalidArgument, "Adam epsilon must be > 0");
  if (!(weight_decay >= 0)) throw Error(ErrorCode::kInvalidArgument, "weight decay must be >= 0");
}

AdamW::AdamW(std::size_t n_params, const AdamWConfig& cfg)
    : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {
  cfg.validate();
}

void AdamW::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "optimizer state does not match parameter count");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double decay = 1.0 - cfg_.lr * cfg_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] *= decay;
    params[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
  }
}

void sgd_step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != grad.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient does not match parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
}

}  // namespace camodet::agp
