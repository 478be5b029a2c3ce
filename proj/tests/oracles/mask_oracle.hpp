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

#include <algorithm>
#include <array>
#include <map>
#include <vector>

#include "camodet/image.hpp"

// Component labelling by repeated label propagation: every foreground pixel
// starts with its own label and takes the minimum over its 8-neighbourhood
// until nothing changes. Slow and obviously correct.
namespace oracle {

struct ScanBox {
  int x0, y0, x1, y1;  // inclusive pixel extremes
  int pixels;
};

inline std::vector<int> propagate_labels(const camodet::Image& gray, int threshold) {
  const int w = gray.width();
  const int h = gray.height();
  std::vector<int> label(static_cast<std::size_t>(w * h), -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (gray.at(x, y) >= threshold) label[static_cast<std::size_t>(y * w + x)] = y * w + x;
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int& l = label[static_cast<std::size_t>(y * w + x)];
        if (l < 0) continue;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const int o = label[static_cast<std::size_t>(ny * w + nx)];
            if (o >= 0 && o < l) {
              l = o;
              changed = true;
            }
          }
        }
      }
    }
  }
  return label;
}

// Extremal scan per component, ordered by the component's first pixel in
// row-major order (its minimum label).
inline std::vector<ScanBox> extremal_scan(const camodet::Image& gray, int threshold) {
  const auto label = propagate_labels(gray, threshold);
  std::map<int, ScanBox> boxes;
  const int w = gray.width();
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = label[static_cast<std::size_t>(y * w + x)];
      if (l < 0) continue;
      auto it = boxes.find(l);
      if (it == boxes.end()) {
        boxes[l] = {x, y, x, y, 1};
      } else {
        auto& b = it->second;
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
        ++b.pixels;
      }
    }
  }
  std::vector<ScanBox> out;
  for (const auto& [l, b] : boxes) out.push_back(b);
  return out;
}

}  // namespace oracle
