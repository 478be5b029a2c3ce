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

// Serial reference vs OpenMP kernels: canvas assembly, restricted backward
// pass and COCO-style evaluation.

#include <benchmark/benchmark.h>

#include "camodet/agp.hpp"
#include "camodet/eval.hpp"
#include "camodet/rng.hpp"
#include "camodet/sfr.hpp"

namespace {

namespace agp = camodet::agp;
namespace sfr = camodet::sfr;
namespace eval = camodet::eval;
using camodet::Box;

std::vector<sfr::CropPatch> make_crops(int n) {
  camodet::Rng rng(1);
  std::vector<sfr::CropPatch> crops;
  for (int i = 0; i < n; ++i) {
    camodet::Image img(sfr::kDefaultCropSize, sfr::kDefaultCropSize, 3);
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.uniform_index(256));
    crops.push_back({std::move(img), i, 1, Box(0, 0, 200, 200), 1});
  }
  return crops;
}

void BM_CanvasesSerial(benchmark::State& state) {
  const auto crops = make_crops(static_cast<int>(state.range(0)));
  const sfr::SfrConfig cfg;
  const auto jobs = sfr::plan_canvases(crops.size(), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(sfr::build_canvases_serial(crops, jobs, 7));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(jobs.size()));
}

void BM_CanvasesParallel(benchmark::State& state) {
  const auto crops = make_crops(static_cast<int>(state.range(0)));
  const sfr::SfrConfig cfg;
  const auto jobs = sfr::plan_canvases(crops.size(), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(sfr::build_canvases(crops, jobs, 7));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(jobs.size()));
}

struct BackwardFixture {
  agp::StagedParams params;
  std::vector<agp::RegionInput> batch;

  explicit BackwardFixture(std::size_t n) {
    camodet::Rng rng(2);
    const agp::ModelDims dims;
    params = agp::init_params(dims, rng);
    batch = agp::random_regions(dims, n, rng);
  }
};

void BM_BackwardSerial(benchmark::State& state) {
  const BackwardFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(agp::backward_restricted_serial(f.params, f.batch, {}, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BackwardParallel(benchmark::State& state) {
  const BackwardFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(agp::backward_restricted(f.params, f.batch, {}, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct EvalFixture {
  camodet::DetectionDataset gt;
  std::vector<eval::Detection> dets;

  explicit EvalFixture(int n_images) {
    camodet::Rng rng(3);
    for (int c = 1; c <= 5; ++c) gt.categories.push_back({c, "c" + std::to_string(c)});
    for (int i = 0; i < n_images; ++i) {
      camodet::Sample s;
      s.image_id = i + 1;
      s.width = s.height = 640;
      for (int k = 0; k < 8; ++k) {
        const double x = rng.uniform(0, 500), y = rng.uniform(0, 500);
        const Box b(x, y, x + rng.uniform(10, 140), y + rng.uniform(10, 140));
        const int cat = 1 + static_cast<int>(rng.uniform_index(5));
        s.labels.push_back({b, cat, false});
        dets.push_back({s.image_id, Box(b.x_min() + rng.uniform(-4, 4), b.y_min(), b.x_max(), b.y_max() + 3), cat,
                        rng.uniform01()});
        dets.push_back({s.image_id, Box(x, y, x + 30, y + 30), 1 + static_cast<int>(rng.uniform_index(5)),
                        rng.uniform01()});
      }
      gt.samples.push_back(std::move(s));
    }
  }
};

void BM_EvalSerial(benchmark::State& state) {
  const EvalFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::coco_metrics_serial(f.dets, f.gt));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EvalParallel(benchmark::State& state) {
  const EvalFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::coco_metrics(f.dets, f.gt));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_CanvasesSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CanvasesParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardSerial)->Arg(16)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BackwardParallel)->Arg(16)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EvalSerial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvalParallel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
