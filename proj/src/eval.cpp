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

#include "camodet/eval.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "camodet/error.hpp"
#include "json.hpp"

namespace camodet::eval {

using nlohmann::json;

const std::array<double, 10>& iou_thresholds() {
  static const std::array<double, 10> kThresholds = [] {
    std::array<double, 10> t{};
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.5 + 0.05 * static_cast<double>(i);
    return t;
  }();
  return kThresholds;
}

namespace {

// Descending score, ties by ascending key.
template <typename T, typename Score, typename Key>
void sort_by_score(std::vector<T>& v, Score score, Key key) {
  std::sort(v.begin(), v.end(), [&](const T& a, const T& b) {
    if (score(a) != score(b)) return score(a) > score(b);
    return key(a) < key(b);
  });
}

}  // namespace

std::vector<Match> match_detections(std::span<const Detection> detections,
                                    std::span<const Box> ground_truths, double iou_threshold) {
  if (!(iou_threshold > 0 && iou_threshold <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "IoU threshold must be in (0, 1]");
  }
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  sort_by_score(order, [&](std::size_t i) { return detections[i].score; },
                [](std::size_t i) { return i; });

  std::vector<bool> taken(ground_truths.size(), false);
  std::vector<Match> out;
  out.reserve(order.size());
  for (std::size_t d : order) {
    Match m{d, false, std::nullopt};
    double best = iou_threshold;
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(detections[d].box, ground_truths[g]);
      if (v >= best && (!m.ground_truth || v > best)) {
        best = v;
        m.ground_truth = g;
      }
    }
    if (m.ground_truth) {
      taken[*m.ground_truth] = true;
      m.true_positive = true;
    }
    out.push_back(m);
  }
  return out;
}

std::optional<double> average_precision(std::span<const Outcome> outcomes,
                                        std::size_t n_ground_truth) {
  if (n_ground_truth == 0) return std::nullopt;
  std::vector<Outcome> sorted(outcomes.begin(), outcomes.end());
  sort_by_score(sorted, [](const Outcome& o) { return o.score; },
                [](const Outcome& o) { return o.order; });

  const std::size_t n = sorted.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (sorted[i].true_positive ? tp : fp)++;
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_ground_truth);
    precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  // Precision envelope: max over all points at the same or higher recall.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double sum = 0;
  std::size_t k = 0;
  for (int r = 0; r < kRecallPoints; ++r) {
    const double level = static_cast<double>(r) / (kRecallPoints - 1);
    while (k < n && recall[k] < level) ++k;
    if (k < n) sum += precision[k];
  }
  return sum / kRecallPoints;
}

void validate_detections(std::span<const Detection> detections, const DetectionDataset& gt) {
  std::set<std::int64_t> images;
  for (const auto& s : gt.samples) images.insert(s.image_id);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& d = detections[i];
    const std::string where = "detection " + std::to_string(i);
    if (!images.contains(d.image_id)) {
      throw Error(ErrorCode::kInvalidArgument, where + ": unknown image " + std::to_string(d.image_id));
    }
    if (gt.find_category(d.category_id) == nullptr) {
      throw Error(ErrorCode::kUnknownCategory, where + ": unknown category " + std::to_string(d.category_id));
    }
    if (!(d.score >= 0 && d.score <= 1)) {
      throw Error(ErrorCode::kInvalidArgument, where + ": score must be in [0, 1]");
    }
  }
}

namespace {

constexpr std::size_t kNumThresholds = 10;
constexpr std::array<AreaRange, 4> kAreas = {kAreaAll, kAreaSmall, kAreaMedium, kAreaLarge};

// Outcomes of one (category key, image) cell, per area range and threshold.
struct CellResult {
  std::array<std::array<std::vector<Outcome>, kNumThresholds>, kAreas.size()> outcomes;
  std::array<std::size_t, kAreas.size()> n_gt{};
};

struct Job {
  std::size_t key = 0;
  std::size_t sample = 0;
};

struct Prepared {
  std::vector<int> keys;  // category ids, or {0} when class-agnostic
  std::vector<Job> jobs;
  // detection indices per sample
  std::vector<std::vector<std::size_t>> dets_by_sample;
};

Prepared prepare(std::span<const Detection> dets, const DetectionDataset& gt, bool agnostic) {
  validate_detections(dets, gt);
  Prepared p;
  if (agnostic) {
    p.keys = {0};
  } else {
    for (const auto& c : gt.categories) p.keys.push_back(c.id);
  }
  std::unordered_map<std::int64_t, std::size_t> sample_of;
  for (std::size_t i = 0; i < gt.samples.size(); ++i) sample_of[gt.samples[i].image_id] = i;
  p.dets_by_sample.resize(gt.samples.size());
  for (std::size_t i = 0; i < dets.size(); ++i) p.dets_by_sample[sample_of[dets[i].image_id]].push_back(i);
  for (std::size_t k = 0; k < p.keys.size(); ++k) {
    for (std::size_t s = 0; s < gt.samples.size(); ++s) p.jobs.push_back({k, s});
  }
  return p;
}

CellResult evaluate_cell(std::span<const Detection> dets, const DetectionDataset& gt,
                         const Prepared& p, const Job& job, bool agnostic, std::size_t n_areas,
                         const EvalConfig& cfg) {
  const int key = p.keys[job.key];
  const Sample& sample = gt.samples[job.sample];
  std::vector<Box> gts;
  for (const auto& l : sample.labels) {
    if (agnostic || l.category_id == key) gts.push_back(l.box);
  }
  std::vector<std::size_t> cand;
  for (std::size_t i : p.dets_by_sample[job.sample]) {
    if (agnostic || dets[i].category_id == key) cand.push_back(i);
  }
  sort_by_score(cand, [&](std::size_t i) { return dets[i].score; }, [](std::size_t i) { return i; });
  if (cand.size() > cfg.max_detections) cand.resize(cfg.max_detections);

  CellResult res;
  for (std::size_t a = 0; a < n_areas; ++a) {
    std::vector<Box> area_gts;
    for (const auto& b : gts) {
      if (kAreas[a].contains(b.area())) area_gts.push_back(b);
    }
    std::vector<Detection> area_dets;
    std::vector<std::size_t> area_idx;
    for (std::size_t i : cand) {
      if (kAreas[a].contains(dets[i].box.area())) {
        area_dets.push_back(dets[i]);
        area_idx.push_back(i);
      }
    }
    res.n_gt[a] = area_gts.size();
    for (std::size_t t = 0; t < kNumThresholds; ++t) {
      for (const Match& m : match_detections(area_dets, area_gts, iou_thresholds()[t])) {
        res.outcomes[a][t].push_back({area_dets[m.detection].score, m.true_positive, area_idx[m.detection]});
      }
    }
  }
  return res;
}

// ap[key][area] = threshold-indexed AP values, or nullopt without ground truth.
using ApTable = std::vector<std::array<std::optional<std::array<double, kNumThresholds>>, kAreas.size()>>;

ApTable reduce(const Prepared& p, const std::vector<CellResult>& cells, std::size_t n_samples,
               std::size_t n_areas) {
  ApTable table(p.keys.size());
  for (std::size_t k = 0; k < p.keys.size(); ++k) {
    for (std::size_t a = 0; a < n_areas; ++a) {
      std::size_t n_gt = 0;
      for (std::size_t s = 0; s < n_samples; ++s) n_gt += cells[k * n_samples + s].n_gt[a];
      if (n_gt == 0) continue;
      std::array<double, kNumThresholds> aps{};
      for (std::size_t t = 0; t < kNumThresholds; ++t) {
        std::vector<Outcome> all;
        for (std::size_t s = 0; s < n_samples; ++s) {
          const auto& o = cells[k * n_samples + s].outcomes[a][t];
          all.insert(all.end(), o.begin(), o.end());
        }
        aps[t] = *average_precision(all, n_gt);
      }
      table[k][a] = aps;
    }
  }
  return table;
}

ApTable compute_table(std::span<const Detection> dets, const DetectionDataset& gt, bool agnostic,
                      bool parallel, const EvalConfig& cfg) {
  const Prepared p = prepare(dets, gt, agnostic);
  const std::size_t n_areas = agnostic ? 1 : kAreas.size();
  std::vector<CellResult> cells(p.jobs.size());
  if (parallel) {
    std::exception_ptr failure;
    const auto n = static_cast<std::ptrdiff_t>(p.jobs.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(i);
      try {
        cells[j] = evaluate_cell(dets, gt, p, p.jobs[j], agnostic, n_areas, cfg);
      } catch (...) {
#pragma omp critical(camodet_eval_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t j = 0; j < p.jobs.size(); ++j) {
      cells[j] = evaluate_cell(dets, gt, p, p.jobs[j], agnostic, n_areas, cfg);
    }
  }
  return reduce(p, cells, gt.samples.size(), n_areas);
}

double mean_over_thresholds(const std::array<double, kNumThresholds>& aps) {
  double s = 0;
  for (double v : aps) s += v;
  return s / static_cast<double>(kNumThresholds);
}

// Mean over keys that have ground truth, as a percentage.
template <typename F>
std::optional<double> mean_over_keys(const ApTable& table, std::size_t area, F&& pick) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& row : table) {
    if (!row[area]) continue;
    sum += pick(*row[area]);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return 100.0 * (sum / static_cast<double>(n));
}

EvalReport report_from_table(const ApTable& table, const DetectionDataset& gt) {
  EvalReport r;
  auto avg = [](const std::array<double, kNumThresholds>& a) { return mean_over_thresholds(a); };
  r.map = mean_over_keys(table, 0, avg);
  r.ap50 = mean_over_keys(table, 0, [](const auto& a) { return a[0]; });
  r.ap75 = mean_over_keys(table, 0, [](const auto& a) { return a[5]; });
  r.aps = mean_over_keys(table, 1, avg);
  r.apm = mean_over_keys(table, 2, avg);
  r.apl = mean_over_keys(table, 3, avg);
  for (std::size_t k = 0; k < gt.categories.size(); ++k) {
    const auto& row = table[k][0];
    r.per_category[gt.categories[k].id] =
        row ? std::optional<double>(100.0 * mean_over_thresholds(*row)) : std::nullopt;
  }
  return r;
}

}  // namespace

EvalReport coco_metrics(std::span<const Detection> detections, const DetectionDataset& ground_truth,
                        const EvalConfig& cfg) {
  return report_from_table(compute_table(detections, ground_truth, false, true, cfg), ground_truth);
}

EvalReport coco_metrics_serial(std::span<const Detection> detections,
                               const DetectionDataset& ground_truth, const EvalConfig& cfg) {
  return report_from_table(compute_table(detections, ground_truth, false, false, cfg), ground_truth);
}

std::optional<double> localization_score(std::span<const Detection> detections,
                                         const DetectionDataset& ground_truth,
                                         const EvalConfig& cfg) {
  const ApTable table = compute_table(detections, ground_truth, true, true, cfg);
  return mean_over_keys(table, 0, [](const auto& a) { return mean_over_thresholds(a); });
}

EvalReport evaluate(std::span<const Detection> detections, const DetectionDataset& ground_truth,
                    const EvalConfig& cfg) {
  EvalReport r = coco_metrics(detections, ground_truth, cfg);
  r.localization = localization_score(detections, ground_truth, cfg);
  return r;
}

// ---- files -----------------------------------------------------------------

std::vector<Detection> detections_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("detections file: ") + e.what());
  }
  if (!root.is_array()) throw Error(ErrorCode::kMalformedJson, "detections file: expected a JSON list");
  std::vector<Detection> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& d = root[i];
    const std::string where = "detections[" + std::to_string(i) + "]";
    if (!d.is_object()) throw Error(ErrorCode::kMalformedJson, where + ": expected an object");
    for (const char* key : {"image_id", "category_id", "bbox", "score"}) {
      if (!d.contains(key)) {
        throw Error(ErrorCode::kMissingField, where + ": missing field '" + key + "'");
      }
    }
    try {
      const auto bbox = d["bbox"].get<std::vector<double>>();
      if (bbox.size() != 4) throw Error(ErrorCode::kMalformedJson, where + ": bbox must have 4 numbers");
      out.push_back({d["image_id"].get<std::int64_t>(), Box::from_xywh(bbox[0], bbox[1], bbox[2], bbox[3]),
                     d["category_id"].get<int>(), d["score"].get<double>()});
    } catch (const json::exception&) {
      throw Error(ErrorCode::kMalformedJson, where + ": field has the wrong type");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidBox) throw Error(ErrorCode::kInvalidBox, where + ": " + e.what());
      throw;
    }
  }
  return out;
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return detections_from_json({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::string detections_to_json(std::span<const Detection> detections) {
  json root = json::array();
  for (const auto& d : detections) {
    root.push_back({{"image_id", d.image_id},
                    {"category_id", d.category_id},
                    {"bbox", {d.box.x_min(), d.box.y_min(), d.box.width(), d.box.height()}},
                    {"score", d.score}});
  }
  return root.dump(1) + "\n";
}

namespace {

json metric(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << *v;
  return os.str();
}

}  // namespace

std::string report_json(const EvalReport& r) {
  json j;
  j["mAP"] = metric(r.map);
  j["AP50"] = metric(r.ap50);
  j["AP75"] = metric(r.ap75);
  j["APs"] = metric(r.aps);
  j["APm"] = metric(r.apm);
  j["APl"] = metric(r.apl);
  j["localization"] = metric(r.localization);
  json per = json::object();
  for (const auto& [id, v] : r.per_category) per[std::to_string(id)] = metric(v);
  j["per_category_AP"] = per;
  return j.dump(1) + "\n";
}

std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  const std::array<std::optional<double>, 5> vals = {r.map, r.ap50, r.ap75, r.apm, r.apl};
  for (const char* name : kHeadlineMetrics) os << std::setw(8) << name;
  os << std::setw(8) << "Loc" << "\n";
  for (const auto& v : vals) os << std::setw(8) << cell(v);
  os << std::setw(8) << cell(r.localization) << "\n";
  return os.str();
}

}  // namespace camodet::eval
