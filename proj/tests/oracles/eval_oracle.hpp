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
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "camodet/dataset.hpp"
#include "camodet/eval.hpp"

// Brute-force COCO-style evaluator written without the library's matching or
// AP code. Every quantity is recomputed from scratch per (key, area,
// threshold); interpolated precision at each recall level is a direct maximum
// over all ranked prefixes.
namespace oracle {

struct Det {
  std::int64_t image;
  double x0, y0, x1, y1;
  int cat;
  double score;
  std::size_t index;
};

struct Gt {
  std::int64_t image;
  double x0, y0, x1, y1;
  int cat;
};

inline double area(double x0, double y0, double x1, double y1) { return (x1 - x0) * (y1 - y0); }

inline double overlap(const Det& d, const Gt& g) {
  const double w = std::min(d.x1, g.x1) - std::max(d.x0, g.x0);
  const double h = std::min(d.y1, g.y1) - std::max(d.y0, g.y0);
  const double inter = (w > 0 && h > 0) ? w * h : 0.0;
  const double uni = area(d.x0, d.y0, d.x1, d.y1) + area(g.x0, g.y0, g.x1, g.y1) - inter;
  return inter / uni;
}

inline bool ranks_before(const Det& a, const Det& b) {
  return a.score > b.score || (a.score == b.score && a.index < b.index);
}

// AP for one key, area bucket and threshold; nullopt without ground truth.
inline std::optional<double> brute_ap(const std::vector<Det>& dets, const std::vector<Gt>& gts,
                                      double lo, double hi, double t, std::size_t max_dets) {
  std::vector<Det> kept;
  std::size_t n_gt = 0;
  std::map<std::int64_t, bool> images;
  for (const auto& d : dets) images[d.image] = true;
  for (const auto& g : gts) images[g.image] = true;
  std::vector<std::pair<Det, bool>> ranked;
  for (const auto& [image, unused] : images) {
    std::vector<Det> mine;
    for (const auto& d : dets) {
      if (d.image == image) mine.push_back(d);
    }
    std::sort(mine.begin(), mine.end(), ranks_before);
    if (mine.size() > max_dets) mine.resize(max_dets);
    std::vector<Det> in_range;
    for (const auto& d : mine) {
      const double a = area(d.x0, d.y0, d.x1, d.y1);
      if (a >= lo && a < hi) in_range.push_back(d);
    }
    std::vector<Gt> targets;
    for (const auto& g : gts) {
      const double a = area(g.x0, g.y0, g.x1, g.y1);
      if (g.image == image && a >= lo && a < hi) targets.push_back(g);
    }
    n_gt += targets.size();
    std::vector<bool> used(targets.size(), false);
    for (const auto& d : in_range) {
      int pick = -1;
      double best = -1;
      for (std::size_t j = 0; j < targets.size(); ++j) {
        if (used[j]) continue;
        const double v = overlap(d, targets[j]);
        if (v >= t && v > best) {
          best = v;
          pick = static_cast<int>(j);
        }
      }
      if (pick >= 0) used[static_cast<std::size_t>(pick)] = true;
      ranked.push_back({d, pick >= 0});
    }
  }
  if (n_gt == 0) return std::nullopt;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return ranks_before(a.first, b.first); });
  double sum = 0;
  for (int r = 0; r <= 100; ++r) {
    const double level = static_cast<double>(r) / 100;
    double best = 0;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      if (ranked[k].second) ++tp;
      const double rec = static_cast<double>(tp) / static_cast<double>(n_gt);
      const double prec = static_cast<double>(tp) / static_cast<double>(k + 1);
      if (rec >= level) best = std::max(best, prec);
    }
    sum += best;
  }
  return sum / 101;
}

struct Report {
  std::optional<double> map, ap50, ap75, aps, apm, apl, localization;
};

inline std::vector<Det> to_dets(const std::vector<camodet::eval::Detection>& in, bool agnostic) {
  std::vector<Det> out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto& d = in[i];
    out.push_back({d.image_id, d.box.x_min(), d.box.y_min(), d.box.x_max(), d.box.y_max(),
                   agnostic ? 0 : d.category_id, d.score, i});
  }
  return out;
}

inline std::vector<Gt> to_gts(const camodet::DetectionDataset& ds, bool agnostic) {
  std::vector<Gt> out;
  for (const auto& s : ds.samples) {
    for (const auto& l : s.labels) {
      out.push_back({s.image_id, l.box.x_min(), l.box.y_min(), l.box.x_max(), l.box.y_max(),
                     agnostic ? 0 : l.category_id});
    }
  }
  return out;
}

// Mean over keys with ground truth of f(per-threshold AP list), as a percentage.
template <typename F>
std::optional<double> key_mean(const std::vector<Det>& dets, const std::vector<Gt>& gts,
                               const std::vector<int>& keys, double lo, double hi,
                               std::size_t max_dets, F f) {
  double sum = 0;
  int n = 0;
  for (int key : keys) {
    std::vector<Det> kd;
    std::vector<Gt> kg;
    for (const auto& d : dets) {
      if (d.cat == key) kd.push_back(d);
    }
    for (const auto& g : gts) {
      if (g.cat == key) kg.push_back(g);
    }
    std::array<double, 10> aps{};
    bool defined = true;
    for (int i = 0; i < 10; ++i) {
      const auto ap = brute_ap(kd, kg, lo, hi, 0.5 + 0.05 * i, max_dets);
      if (!ap) {
        defined = false;
        break;
      }
      aps[static_cast<std::size_t>(i)] = *ap;
    }
    if (!defined) continue;
    sum += f(aps);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return 100.0 * (sum / n);
}

inline double mean10(const std::array<double, 10>& a) {
  double s = 0;
  for (double v : a) s += v;
  return s / 10;
}

inline Report evaluate(const std::vector<camodet::eval::Detection>& dets,
                       const camodet::DetectionDataset& ds, std::size_t max_dets = 100) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<int> keys;
  for (const auto& c : ds.categories) keys.push_back(c.id);
  const auto d = to_dets(dets, false);
  const auto g = to_gts(ds, false);
  Report r;
  r.map = key_mean(d, g, keys, 0, inf, max_dets, mean10);
  r.ap50 = key_mean(d, g, keys, 0, inf, max_dets, [](const auto& a) { return a[0]; });
  r.ap75 = key_mean(d, g, keys, 0, inf, max_dets, [](const auto& a) { return a[5]; });
  r.aps = key_mean(d, g, keys, 0, 32.0 * 32.0, max_dets, mean10);
  r.apm = key_mean(d, g, keys, 32.0 * 32.0, 96.0 * 96.0, max_dets, mean10);
  r.apl = key_mean(d, g, keys, 96.0 * 96.0, inf, max_dets, mean10);
  r.localization = key_mean(to_dets(dets, true), to_gts(ds, true), {0}, 0, inf, max_dets, mean10);
  return r;
}

}  // namespace oracle
