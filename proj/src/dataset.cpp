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

#include "camodet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

#include "camodet/atomic_file.hpp"
#include "camodet/error.hpp"
#include "json.hpp"

namespace camodet {

using nlohmann::json;

const char* split_name(Split s) noexcept { return s == Split::kTrain ? "train" : "test"; }

const Category* DetectionDataset::find_category(int id) const noexcept {
  for (const auto& c : categories) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

void validate(const DetectionDataset& ds) {
  std::set<int> cat_ids;
  std::set<std::string> cat_names;
  for (const auto& c : ds.categories) {
    if (c.id < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "category " + std::to_string(c.id) + ": id must be >= 1");
    }
    if (c.name.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "category " + std::to_string(c.id) + ": empty name");
    }
    if (!cat_ids.insert(c.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate category id " + std::to_string(c.id));
    }
    if (!cat_names.insert(c.name).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate category name '" + c.name + "'");
    }
  }
  std::set<std::int64_t> image_ids;
  for (const auto& s : ds.samples) {
    const std::string where = "image " + std::to_string(s.image_id);
    if (!image_ids.insert(s.image_id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate " + where);
    }
    if (s.width < 1 || s.height < 1) {
      throw Error(ErrorCode::kInvalidArgument, where + ": width and height must be >= 1");
    }
    for (const auto& l : s.labels) {
      if (!cat_ids.contains(l.category_id)) {
        throw Error(ErrorCode::kUnknownCategory,
                    where + ": unknown category " + std::to_string(l.category_id));
      }
      if (l.box.x_min() < 0 || l.box.y_min() < 0 || l.box.x_max() > s.width ||
          l.box.y_max() > s.height) {
        std::ostringstream os;
        os << where << ": box " << l.box << " lies outside " << s.width << "x" << s.height;
        throw Error(ErrorCode::kBoxOutOfImage, os.str());
      }
    }
  }
}

Image load_sample_image(const Sample& sample, const std::filesystem::path& image_root) {
  if (sample.pixels) return *sample.pixels;
  return read_image(image_root / sample.image_path);
}

// ---- mask conversion -------------------------------------------------------

std::vector<std::vector<Pixel>> connected_components(const Image& mask, int threshold) {
  if (threshold < 1 || threshold > 255) {
    throw Error(ErrorCode::kInvalidArgument, "mask threshold must be in [1, 255]");
  }
  const Image gray = to_grayscale(mask);
  const int w = gray.width();
  const int h = gray.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  auto fg = [&](int x, int y) { return gray.at(x, y) >= threshold; };

  std::vector<std::vector<Pixel>> comps;
  std::vector<Pixel> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (seen[idx] || !fg(x, y)) continue;
      std::vector<Pixel> comp;
      seen[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        comp.push_back(p);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
            if (seen[n] || !fg(nx, ny)) continue;
            seen[n] = 1;
            stack.push_back({nx, ny});
          }
        }
      }
      comps.push_back(std::move(comp));
    }
  }
  return comps;
}

std::vector<LabeledBox> mask_to_boxes(const Image& mask, int threshold) {
  const auto comps = connected_components(mask, threshold);
  std::vector<LabeledBox> boxes;
  boxes.reserve(comps.size());
  const bool review = comps.size() > 1;
  for (const auto& comp : comps) {
    int x0 = comp.front().x, x1 = x0, y0 = comp.front().y, y1 = y0;
    for (const auto& p : comp) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    boxes.push_back({Box(x0, y0, x1 + 1, y1 + 1), 0, review});
  }
  return boxes;
}

double box_gap(const Box& a, const Box& b) noexcept {
  const double gx = std::max(a.x_min(), b.x_min()) - std::min(a.x_max(), b.x_max());
  const double gy = std::max(a.y_min(), b.y_min()) - std::min(a.y_max(), b.y_max());
  return std::max({0.0, gx, gy});
}

std::vector<LabeledBox> merge_boxes(const std::vector<LabeledBox>& boxes, double max_gap) {
  if (!(max_gap >= 0)) throw Error(ErrorCode::kInvalidArgument, "max_gap must be >= 0");
  std::vector<LabeledBox> current = boxes;
  // Each pass takes the transitive closure of "within max_gap" and replaces
  // every cluster by its extent. A grown box may reach new neighbours, so
  // repeat until a pass merges nothing; that makes the result idempotent.
  for (;;) {
    const std::size_t n = current.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    bool merged_any = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (box_gap(current[i].box, current[j].box) <= max_gap) {
          const std::size_t ri = find(i), rj = find(j);
          if (ri != rj) {
            parent[std::max(ri, rj)] = std::min(ri, rj);
            merged_any = true;
          }
        }
      }
    }
    if (!merged_any) return current;

    std::vector<LabeledBox> next;
    std::vector<std::ptrdiff_t> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = find(i);
      if (slot[r] < 0) {
        slot[r] = static_cast<std::ptrdiff_t>(next.size());
        next.push_back(current[i]);
        continue;
      }
      LabeledBox& acc = next[static_cast<std::size_t>(slot[r])];
      acc.box = enclosing_box(acc.box, current[i].box);
      acc.review = true;
    }
    current = std::move(next);
  }
}

// ---- serialization ---------------------------------------------------------

namespace {

// Width w such that x0 + w == x1 exactly in double arithmetic, so that the
// corner -> xywh -> corner round trip is lossless. x1 - x0 is exact in most
// cases; otherwise a neighbouring representable value usually is.
double lossless_extent(double x0, double x1) {
  double w = x1 - x0;
  if (x0 + w == x1) return w;
  double lo = w, hi = w;
  for (int i = 0; i < 8; ++i) {
    lo = std::nextafter(lo, -HUGE_VAL);
    hi = std::nextafter(hi, HUGE_VAL);
    if (x0 + lo == x1) return lo;
    if (x0 + hi == x1) return hi;
  }
  return w;
}

[[noreturn]] void missing(const std::string& where, const char* key) {
  throw Error(ErrorCode::kMissingField, where + ": missing field '" + key + "'");
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kMalformedJson, where + ": expected an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) missing(where, key);
  return *it;
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kMalformedJson, where + ": field '" + key + "' has the wrong type");
  }
}

const json& array_field(const json& root, const char* key) {
  const json& v = field(root, key, "annotation file");
  if (!v.is_array()) {
    throw Error(ErrorCode::kMalformedJson, std::string("annotation file: '") + key +
                                               "' must be an array");
  }
  return v;
}

}  // namespace

std::string annotations_to_json(const DetectionDataset& ds) {
  json root;
  root["images"] = json::array();
  root["annotations"] = json::array();
  root["categories"] = json::array();
  std::int64_t ann_id = 1;
  for (const auto& s : ds.samples) {
    root["images"].push_back({{"id", s.image_id},
                              {"file_name", s.image_path},
                              {"width", s.width},
                              {"height", s.height},
                              {"split", split_name(s.split)}});
    for (const auto& l : s.labels) {
      root["annotations"].push_back(
          {{"id", ann_id++},
           {"image_id", s.image_id},
           {"category_id", l.category_id},
           {"bbox",
            {l.box.x_min(), l.box.y_min(), lossless_extent(l.box.x_min(), l.box.x_max()),
             lossless_extent(l.box.y_min(), l.box.y_max())}},
           {"area", l.box.area()},
           {"iscrowd", 0},
           {"review", l.review}});
    }
  }
  for (const auto& c : ds.categories) {
    root["categories"].push_back({{"id", c.id}, {"name", c.name}});
  }
  return root.dump(1) + "\n";
}

DetectionDataset annotations_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("annotation file: ") + e.what());
  }
  if (!root.is_object()) {
    throw Error(ErrorCode::kMalformedJson, "annotation file: top level must be an object");
  }

  DetectionDataset ds;
  const json& cats = array_field(root, "categories");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string where = "categories[" + std::to_string(i) + "]";
    ds.categories.push_back(
        {get_as<int>(cats[i], "id", where), get_as<std::string>(cats[i], "name", where)});
  }

  std::map<std::int64_t, std::size_t> index_of;
  const json& images = array_field(root, "images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    Sample s;
    s.image_id = get_as<std::int64_t>(images[i], "id", where);
    s.image_path = get_as<std::string>(images[i], "file_name", where);
    s.width = get_as<int>(images[i], "width", where);
    s.height = get_as<int>(images[i], "height", where);
    if (images[i].contains("split")) {
      const auto split = get_as<std::string>(images[i], "split", where);
      if (split == "train") {
        s.split = Split::kTrain;
      } else if (split == "test") {
        s.split = Split::kTest;
      } else {
        throw Error(ErrorCode::kMalformedJson, where + ": split must be 'train' or 'test'");
      }
    }
    if (!index_of.emplace(s.image_id, ds.samples.size()).second) {
      throw Error(ErrorCode::kDuplicateId, where + ": duplicate image id " +
                                               std::to_string(s.image_id));
    }
    ds.samples.push_back(std::move(s));
  }

  const json& anns = array_field(root, "annotations");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const json& a = anns[i];
    std::string where = "annotations[" + std::to_string(i) + "]";
    if (a.is_object() && a.contains("id") && a["id"].is_number_integer()) {
      where = "annotation " + std::to_string(a["id"].get<std::int64_t>());
    }
    const auto image_id = get_as<std::int64_t>(a, "image_id", where);
    const auto category_id = get_as<int>(a, "category_id", where);
    const auto bbox = get_as<std::vector<double>>(a, "bbox", where);
    if (bbox.size() != 4) {
      throw Error(ErrorCode::kMalformedJson, where + ": bbox must have 4 numbers");
    }
    const bool review = a.contains("review") ? get_as<bool>(a, "review", where) : false;

    auto it = index_of.find(image_id);
    if (it == index_of.end()) {
      throw Error(ErrorCode::kMissingField,
                  where + ": references missing image " + std::to_string(image_id));
    }
    if (ds.find_category(category_id) == nullptr) {
      throw Error(ErrorCode::kUnknownCategory,
                  where + ": unknown category " + std::to_string(category_id));
    }
    std::optional<Box> box;
    try {
      box = Box::from_xywh(bbox[0], bbox[1], bbox[2], bbox[3]);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidBox, where + ": " + e.what());
    }
    Sample& s = ds.samples[it->second];
    if (box->x_min() < 0 || box->y_min() < 0 || box->x_max() > s.width ||
        box->y_max() > s.height) {
      throw Error(ErrorCode::kBoxOutOfImage,
                  where + ": bbox lies outside image " + std::to_string(image_id));
    }
    s.labels.push_back({*box, category_id, review});
  }
  validate(ds);
  return ds;
}

DetectionDataset read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return annotations_from_json(text);
}

void write_annotations(const DetectionDataset& ds, const std::filesystem::path& path) {
  validate(ds);
  write_file_atomic(path, annotations_to_json(ds));
}

// ---- statistics ------------------------------------------------------------

DatasetSummary dataset_summary(const DetectionDataset& ds) {
  DatasetSummary out;
  out.categories = ds.categories.size();
  for (const auto& c : ds.categories) out.boxes_per_category[c.id] = 0;
  for (const auto& s : ds.samples) {
    (s.split == Split::kTrain ? out.train_images : out.test_images)++;
    out.boxes += s.labels.size();
    for (const auto& l : s.labels) out.boxes_per_category[l.category_id]++;
  }
  return out;
}

const ReferenceCounts* find_reference_counts(std::string_view name) noexcept {
  auto lower = [](std::string_view v) {
    std::string o(v);
    std::transform(o.begin(), o.end(), o.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return o;
  };
  const std::string want = lower(name);
  for (const auto& r : kReferenceCounts) {
    if (lower(r.name) == want) return &r;
  }
  return nullptr;
}

bool matches_reference(const DatasetSummary& s, const ReferenceCounts& ref) noexcept {
  return s.categories == ref.categories && s.train_images == ref.train_images &&
         s.test_images == ref.test_images;
}

std::string format_summary(const DatasetSummary& s, const DetectionDataset& ds) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "categories" << std::setw(8) << "train"
     << std::setw(8) << "test" << "boxes\n"
     << std::setw(12) << s.categories << std::setw(8) << s.train_images << std::setw(8)
     << s.test_images << s.boxes << "\n";
  if (!s.boxes_per_category.empty()) {
    os << "\n" << std::setw(6) << "id" << std::setw(24) << "name" << "boxes\n";
    for (const auto& [id, n] : s.boxes_per_category) {
      const Category* c = ds.find_category(id);
      os << std::setw(6) << id << std::setw(24) << (c ? c->name : "?") << n << "\n";
    }
  }
  return os.str();
}

}  // namespace camodet
