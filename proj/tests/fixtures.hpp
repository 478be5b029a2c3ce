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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "camodet/dataset.hpp"
#include "camodet/eval.hpp"
#include "camodet/image.hpp"
#include "camodet/rng.hpp"

namespace fixtures {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("camodet_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Random RGB image with every pixel drawn independently.
inline camodet::Image noise_image(int w, int h, camodet::Rng& rng) {
  camodet::Image img(w, h, 3);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.uniform_index(256));
  return img;
}

// Random binary mask with roughly `density` foreground pixels.
inline camodet::Image random_mask(int w, int h, double density, camodet::Rng& rng) {
  camodet::Image m(w, h, 1);
  for (auto& b : m.bytes()) b = rng.uniform01() < density ? 255 : 0;
  return m;
}

inline int randint(camodet::Rng& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Integer box of side >= min_side inside a w x h image.
inline camodet::Box random_box(camodet::Rng& rng, int w, int h, int min_side = 1) {
  const int bw = randint(rng, min_side, w);
  const int bh = randint(rng, min_side, h);
  const int x = randint(rng, 0, w - bw);
  const int y = randint(rng, 0, h - bh);
  return camodet::Box(x, y, x + bw, y + bh);
}

// In-memory dataset of `n_images` noise images with `boxes_per_image` labels,
// all in the train split.
inline camodet::DetectionDataset pixel_dataset(camodet::Rng& rng, int n_images, int boxes_per_image,
                                               int w = 96, int h = 80, int n_categories = 3) {
  camodet::DetectionDataset ds;
  for (int c = 1; c <= n_categories; ++c) ds.categories.push_back({c, "class" + std::to_string(c)});
  for (int i = 0; i < n_images; ++i) {
    camodet::Sample s;
    s.image_id = i + 1;
    s.image_path = "img_" + std::to_string(i) + ".png";
    s.width = w;
    s.height = h;
    auto img = std::make_shared<camodet::Image>(noise_image(w, h, rng));
    s.pixels = img;
    for (int k = 0; k < boxes_per_image; ++k) {
      s.labels.push_back({random_box(rng, w, h, 2), randint(rng, 1, n_categories), false});
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline camodet::Image load_pixels(const camodet::Sample& s) { return *s.pixels; }

// Ground truth and detections for evaluator comparisons: up to max_gt boxes
// and max_det detections per image, detections often near a ground truth.
struct EvalFixture {
  camodet::DetectionDataset gt;
  std::vector<camodet::eval::Detection> dets;
};

inline EvalFixture random_eval_fixture(camodet::Rng& rng, int max_gt, int max_det, int n_images = 3,
                                       int n_categories = 2, int side = 200) {
  EvalFixture f;
  for (int c = 1; c <= n_categories; ++c) f.gt.categories.push_back({c, "c" + std::to_string(c)});
  for (int i = 0; i < n_images; ++i) {
    camodet::Sample s;
    s.image_id = 10 + i;
    s.image_path = "e" + std::to_string(i) + ".png";
    s.width = side;
    s.height = side;
    const int n_gt = randint(rng, 0, max_gt);
    for (int k = 0; k < n_gt; ++k) {
      s.labels.push_back({random_box(rng, side, side, 4), randint(rng, 1, n_categories), false});
    }
    const int n_det = randint(rng, 0, max_det);
    for (int k = 0; k < n_det; ++k) {
      camodet::Box b = random_box(rng, side, side, 4);
      if (!s.labels.empty() && rng.uniform01() < 0.7) {
        const auto& g = s.labels[rng.uniform_index(s.labels.size())].box;
        const double j = rng.uniform(0, 8);
        b = camodet::Box(g.x_min() + rng.uniform(-j, j), g.y_min() + rng.uniform(-j, j),
                         g.x_max() + rng.uniform(-j, j) + 2 * j, g.y_max() + rng.uniform(-j, j) + 2 * j);
      }
      // Coarse scores, so ties are frequent.
      const double score = static_cast<double>(randint(rng, 1, 8)) / 8.0;
      f.dets.push_back({s.image_id, b, randint(rng, 1, n_categories), score});
    }
    f.gt.samples.push_back(std::move(s));
  }
  return f;
}

}  // namespace fixtures
