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

#include "camodet/agp.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "camodet/error.hpp"

namespace camodet::agp {

void ModelDims::validate() const {
  if (input < 1 || backbone < 1 || neck < 1 || classes < 1 || embed < 1) {
    throw Error(ErrorCode::kInvalidArgument, "model dimensions must be >= 1");
  }
}

const char* block_name(Block b) noexcept {
  switch (b) {
    case Block::kBackboneW: return "backbone.weight";
    case Block::kBackboneB: return "backbone.bias";
    case Block::kNeckW: return "neck.weight";
    case Block::kNeckB: return "neck.bias";
    case Block::kBoxW: return "head.box.weight";
    case Block::kBoxB: return "head.box.bias";
    case Block::kClsW: return "head.cls.weight";
    case Block::kClsB: return "head.cls.bias";
    case Block::kEmbW: return "head.embed.weight";
    case Block::kEmbB: return "head.embed.bias";
    case Block::kClassEmb: return "head.class_embeddings";
  }
  return "?";
}

Stage block_stage(Block b) noexcept {
  switch (b) {
    case Block::kBackboneW:
    case Block::kBackboneB: return Stage::kBackbone;
    case Block::kNeckW:
    case Block::kNeckB: return Stage::kNeck;
    default: return Stage::kHead;
  }
}

StagedParams::StagedParams(const ModelDims& dims) : dims_(dims) {
  dims.validate();
  std::size_t off = 0;
  for (std::size_t i = 0; i < kAllBlocks.size(); ++i) {
    offsets_[i] = off;
    off += shape(kAllBlocks[i]).size();
  }
  offsets_[kAllBlocks.size()] = off;
  values_.assign(off, 0.0);
}

BlockShape StagedParams::shape(Block b) const noexcept {
  const ModelDims& d = dims_;
  switch (b) {
    case Block::kBackboneW: return {d.backbone, d.input};
    case Block::kBackboneB: return {d.backbone, 1};
    case Block::kNeckW: return {d.neck, d.backbone};
    case Block::kNeckB: return {d.neck, 1};
    case Block::kBoxW: return {4, d.neck};
    case Block::kBoxB: return {4, 1};
    case Block::kClsW: return {d.classes, d.neck};
    case Block::kClsB: return {d.classes, 1};
    case Block::kEmbW: return {d.embed, d.neck};
    case Block::kEmbB: return {d.embed, 1};
    case Block::kClassEmb: return {d.classes, d.embed};
  }
  return {};
}

std::span<double> StagedParams::block(Block b) noexcept {
  const auto i = static_cast<std::size_t>(b);
  return std::span<double>(values_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

std::span<const double> StagedParams::block(Block b) const noexcept {
  const auto i = static_cast<std::size_t>(b);
  return std::span<const double>(values_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

bool StagedParams::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

StagedParams init_params(const ModelDims& dims, Rng& rng) {
  StagedParams p(dims);
  for (Block b : kAllBlocks) {
    const BlockShape s = p.shape(b);
    auto v = p.block(b);
    switch (b) {
      case Block::kBackboneB:
      case Block::kNeckB:
      case Block::kBoxB:
      case Block::kClsB:
      case Block::kEmbB:
        break;
      case Block::kClassEmb:
        for (auto& x : v) x = rng.normal();
        break;
      default: {
        const double scale = 1.0 / std::sqrt(static_cast<double>(s.cols));
        for (auto& x : v) x = scale * rng.normal();
      }
    }
  }
  return p;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out = W in + b, W rows x cols row-major.
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> in,
            std::span<double> out) {
  const std::size_t cols = in.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = b[r];
    const double* row = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
    out[r] = acc;
  }
}

// dW += g in^T, db += g, and optionally din += W^T g.
void affine_backward(std::span<const double> w, std::span<const double> in,
                     std::span<const double> g, std::span<double> dw, std::span<double> db,
                     std::span<double> din) {
  const std::size_t cols = in.size();
  for (std::size_t r = 0; r < g.size(); ++r) {
    const double gr = g[r];
    db[r] += gr;
    double* drow = dw.data() + r * cols;
    const double* wrow = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) drow[c] += gr * in[c];
    if (!din.empty()) {
      for (std::size_t c = 0; c < cols; ++c) din[c] += gr * wrow[c];
    }
  }
}

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

constexpr double kMinProb = 1e-12;
constexpr double kNormEps = 1e-12;

double focal_with_grad(std::span<const double> z, int target, double gamma, double alpha,
                       std::span<double> dz) {
  const double lse = log_sum_exp(z);
  const auto t = static_cast<std::size_t>(target);
  double log_p = z[t] - lse;
  const double p = std::exp(log_p);
  const bool clamped = log_p < std::log(kMinProb);
  if (clamped) log_p = std::log(kMinProb);
  const double q = 1.0 - p;
  const double loss = -alpha * std::pow(q, gamma) * log_p;
  if (dz.empty()) return loss;
  // dL/dz_j = -alpha (delta_jt - p_j) [ q^gamma * [unclamped] - gamma log_p p q^(gamma-1) ]
  double factor = 0.0;
  if (q > 0.0) {
    factor = clamped ? 0.0 : std::pow(q, gamma);
    if (gamma != 0.0) factor -= gamma * log_p * p * std::pow(q, gamma - 1.0);
  }
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double pj = std::exp(z[j] - lse);
    const double delta = j == t ? 1.0 : 0.0;
    dz[j] = -alpha * (delta - pj) * factor;
  }
  return loss;
}

// 1 - GIoU on raw corners; dp (optional) receives d loss / d pred corners.
double giou_loss_with_grad(const std::array<double, 4>& p, const std::array<double, 4>& t,
                           std::span<double> dp) {
  const double iw_raw = std::min(p[2], t[2]) - std::max(p[0], t[0]);
  const double ih_raw = std::min(p[3], t[3]) - std::max(p[1], t[1]);
  const bool overlap = iw_raw > 0.0 && ih_raw > 0.0;
  const double iw = overlap ? iw_raw : 0.0;
  const double ih = overlap ? ih_raw : 0.0;
  const double inter = iw * ih;
  const double pw = p[2] - p[0];
  const double ph = p[3] - p[1];
  const double area_p = pw * ph;
  const double area_t = (t[2] - t[0]) * (t[3] - t[1]);
  const double uni = area_p + area_t - inter;
  const double cw = std::max(p[2], t[2]) - std::min(p[0], t[0]);
  const double chh = std::max(p[3], t[3]) - std::min(p[1], t[1]);
  const double hull = cw * chh;
  // loss = 2 - I/U - U/C
  const double loss = 2.0 - inter / uni - uni / hull;
  if (dp.empty()) return loss;

  const double dl_du = inter / (uni * uni) - 1.0 / hull;
  const double dl_di = -1.0 / uni - dl_du;  // U depends on I with slope -1
  const double dl_dc = uni / (hull * hull);
  const double dl_dap = dl_du;

  std::array<double, 4> g{};
  // area of pred
  g[0] += dl_dap * -ph;
  g[2] += dl_dap * ph;
  g[1] += dl_dap * -pw;
  g[3] += dl_dap * pw;
  if (overlap) {
    if (p[2] < t[2]) g[2] += dl_di * ih;
    if (p[0] > t[0]) g[0] -= dl_di * ih;
    if (p[3] < t[3]) g[3] += dl_di * iw;
    if (p[1] > t[1]) g[1] -= dl_di * iw;
  }
  if (p[2] > t[2]) g[2] += dl_dc * chh;
  if (p[0] < t[0]) g[0] -= dl_dc * chh;
  if (p[3] > t[3]) g[3] += dl_dc * cw;
  if (p[1] < t[1]) g[1] -= dl_dc * cw;
  std::copy(g.begin(), g.end(), dp.begin());
  return loss;
}

double contrastive_with_grad(std::span<const double> r, std::span<const double> emb, int target,
                             double tau, std::span<double> dr, std::span<double> demb) {
  const std::size_t e = r.size();
  const std::size_t c = emb.size() / e;
  double rr = 0;
  for (double v : r) rr += v * v;
  const double rn = std::sqrt(rr + kNormEps);
  std::vector<double> dots(c), norms(c), logits(c);
  for (std::size_t k = 0; k < c; ++k) {
    const double* row = emb.data() + k * e;
    double d = 0, n = 0;
    for (std::size_t i = 0; i < e; ++i) {
      d += r[i] * row[i];
      n += row[i] * row[i];
    }
    dots[k] = d;
    norms[k] = std::sqrt(n + kNormEps);
    logits[k] = d / (rn * norms[k]) / tau;
  }
  const double lse = log_sum_exp(logits);
  const auto t = static_cast<std::size_t>(target);
  const double loss = lse - logits[t];
  if (dr.empty()) return loss;

  for (std::size_t k = 0; k < c; ++k) {
    const double pk = std::exp(logits[k] - lse);
    const double ds = (pk - (k == t ? 1.0 : 0.0)) / tau;  // d loss / d cos_k
    const double cosk = dots[k] / (rn * norms[k]);
    const double* row = emb.data() + k * e;
    double* drow = demb.data() + k * e;
    const double inv = 1.0 / (rn * norms[k]);
    for (std::size_t i = 0; i < e; ++i) {
      dr[i] += ds * (row[i] * inv - cosk * r[i] / (rn * rn));
      drow[i] += ds * (r[i] * inv - cosk * row[i] / (norms[k] * norms[k]));
    }
  }
  return loss;
}

struct Trace {
  std::vector<double> h1, h2, s, logits, emb;
  std::array<double, 4> corners{};
};

Trace trace_forward(const StagedParams& p, std::span<const double> x) {
  const ModelDims& d = p.dims();
  if (static_cast<int>(x.size()) != d.input) {
    throw Error(ErrorCode::kInvalidArgument, "feature length does not match model input");
  }
  Trace tr;
  tr.h1.resize(static_cast<std::size_t>(d.backbone));
  tr.h2.resize(static_cast<std::size_t>(d.neck));
  tr.s.resize(4);
  tr.logits.resize(static_cast<std::size_t>(d.classes));
  tr.emb.resize(static_cast<std::size_t>(d.embed));
  affine(p.block(Block::kBackboneW), p.block(Block::kBackboneB), x, tr.h1);
  for (auto& v : tr.h1) v = std::tanh(v);
  affine(p.block(Block::kNeckW), p.block(Block::kNeckB), tr.h1, tr.h2);
  for (auto& v : tr.h2) v = std::tanh(v);
  affine(p.block(Block::kBoxW), p.block(Block::kBoxB), tr.h2, tr.s);
  for (auto& v : tr.s) v = sigmoid(v);
  affine(p.block(Block::kClsW), p.block(Block::kClsB), tr.h2, tr.logits);
  affine(p.block(Block::kEmbW), p.block(Block::kEmbB), tr.h2, tr.emb);
  const double cx = tr.s[0], cy = tr.s[1], w = tr.s[2], h = tr.s[3];
  tr.corners = {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  return tr;
}

std::array<double, 4> corners_of(const Box& b) { return {b.x_min(), b.y_min(), b.x_max(), b.y_max()}; }

void check_target(const StagedParams& p, const RegionInput& r) {
  if (r.target_class < 0 || r.target_class >= p.dims().classes) {
    throw Error(ErrorCode::kInvalidArgument, "target class out of range");
  }
}

struct RegionTerms {
  double bbox = 0, contrastive = 0, cls = 0;
};

RegionTerms region_terms(const StagedParams& p, const RegionInput& r, const LossConfig& cfg) {
  check_target(p, r);
  const Trace tr = trace_forward(p, r.features);
  RegionTerms t;
  t.bbox = giou_loss_with_grad(tr.corners, corners_of(r.target), {});
  t.contrastive = contrastive_with_grad(tr.emb, p.block(Block::kClassEmb), r.target_class, cfg.tau, {}, {});
  t.cls = focal_with_grad(tr.logits, r.target_class, cfg.gamma, cfg.alpha, {});
  return t;
}

// Unrestricted, unnormalized gradient of one region's weighted loss.
RegionTerms region_backward(const StagedParams& p, const RegionInput& r, const LossConfig& cfg,
                            StagedParams& g) {
  check_target(p, r);
  const ModelDims& d = p.dims();
  const Trace tr = trace_forward(p, r.features);
  RegionTerms t;

  std::vector<double> g2(static_cast<std::size_t>(d.neck), 0.0);

  // box head
  std::array<double, 4> dc{};
  t.bbox = giou_loss_with_grad(tr.corners, corners_of(r.target), dc);
  for (auto& v : dc) v *= cfg.w_bbox;
  std::array<double, 4> da{dc[0] + dc[2], dc[1] + dc[3], 0.5 * (dc[2] - dc[0]), 0.5 * (dc[3] - dc[1])};
  for (std::size_t i = 0; i < 4; ++i) da[i] *= tr.s[i] * (1.0 - tr.s[i]);
  affine_backward(p.block(Block::kBoxW), tr.h2, da, g.block(Block::kBoxW), g.block(Block::kBoxB), g2);

  // class head
  std::vector<double> dz(static_cast<std::size_t>(d.classes));
  t.cls = focal_with_grad(tr.logits, r.target_class, cfg.gamma, cfg.alpha, dz);
  for (auto& v : dz) v *= cfg.w_cls;
  affine_backward(p.block(Block::kClsW), tr.h2, dz, g.block(Block::kClsW), g.block(Block::kClsB), g2);

  // contrastive head
  std::vector<double> dr(static_cast<std::size_t>(d.embed), 0.0);
  std::vector<double> demb(g.block(Block::kClassEmb).size(), 0.0);
  t.contrastive = contrastive_with_grad(tr.emb, p.block(Block::kClassEmb), r.target_class, cfg.tau, dr, demb);
  for (auto& v : dr) v *= cfg.w_contrastive;
  auto gce = g.block(Block::kClassEmb);
  for (std::size_t i = 0; i < demb.size(); ++i) gce[i] += cfg.w_contrastive * demb[i];
  affine_backward(p.block(Block::kEmbW), tr.h2, dr, g.block(Block::kEmbW), g.block(Block::kEmbB), g2);

  // neck
  for (std::size_t i = 0; i < g2.size(); ++i) g2[i] *= 1.0 - tr.h2[i] * tr.h2[i];
  std::vector<double> g1(static_cast<std::size_t>(d.backbone), 0.0);
  affine_backward(p.block(Block::kNeckW), tr.h1, g2, g.block(Block::kNeckW), g.block(Block::kNeckB), g1);

  // backbone
  for (std::size_t i = 0; i < g1.size(); ++i) g1[i] *= 1.0 - tr.h1[i] * tr.h1[i];
  affine_backward(p.block(Block::kBackboneW), r.features, g1, g.block(Block::kBackboneW),
                  g.block(Block::kBackboneB), {});
  return t;
}

void scale_stage(StagedParams& g, Stage stage, double factor) {
  for (Block b : kAllBlocks) {
    if (block_stage(b) != stage) continue;
    for (auto& v : g.block(b)) v *= factor;
  }
}

// Backprop below a boundary is linear in the signal crossing it, so the
// factor is applied to the finished blocks: grad(lambda) == lambda * grad(1)
// holds exactly, and lambda = 0 yields exact zeros.
void apply_restriction(StagedParams& g, const RestrictionConfig& rcfg) {
  if (rcfg.mode == RestrictionMode::kBoundary) {
    scale_stage(g, Stage::kNeck, rcfg.head_to_neck);
    scale_stage(g, Stage::kBackbone, rcfg.head_to_neck);
    scale_stage(g, Stage::kBackbone, rcfg.neck_to_backbone);
  } else {
    for (auto& v : g.values()) v *= rcfg.uniform;
  }
}

GradientResult finish(const StagedParams& params, std::span<const StagedParams> per_region,
                      std::span<const RegionTerms> terms, const RestrictionConfig& rcfg,
                      const LossConfig& lcfg) {
  GradientResult out{StagedParams(params.dims()), {}};
  auto total = out.grad.values();
  for (const auto& g : per_region) {
    const auto v = g.values();
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += v[i];
  }
  const auto n = static_cast<double>(terms.size());
  for (auto& v : total) v /= n;
  for (const auto& t : terms) {
    out.loss.bbox += t.bbox;
    out.loss.contrastive += t.contrastive;
    out.loss.cls += t.cls;
    out.loss.total += lcfg.w_bbox * t.bbox + lcfg.w_contrastive * t.contrastive + lcfg.w_cls * t.cls;
  }
  out.loss.bbox /= n;
  out.loss.contrastive /= n;
  out.loss.cls /= n;
  out.loss.total /= n;
  apply_restriction(out.grad, rcfg);
  return out;
}

void check_batch(std::span<const RegionInput> batch) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
}

}  // namespace

ForwardOutput forward_staged(const StagedParams& params, std::span<const double> features) {
  Trace tr = trace_forward(params, features);
  ForwardOutput out;
  out.corners = tr.corners;
  std::copy(tr.s.begin(), tr.s.end(), out.box_cxcywh.begin());
  out.logits = std::move(tr.logits);
  out.embedding = std::move(tr.emb);
  return out;
}

void LossConfig::validate() const {
  if (!(gamma >= 0)) throw Error(ErrorCode::kInvalidArgument, "focal gamma must be >= 0");
  if (!(alpha > 0 && alpha <= 1)) throw Error(ErrorCode::kInvalidArgument, "focal alpha must be in (0, 1]");
  if (!(tau > 0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  if (!(w_bbox >= 0 && w_contrastive >= 0 && w_cls >= 0)) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be >= 0");
  }
}

void RestrictionConfig::validate() const {
  for (double f : {head_to_neck, neck_to_backbone, uniform}) {
    if (!(f >= 0 && f <= 1)) throw Error(ErrorCode::kInvalidArgument, "restriction factors must be in [0, 1]");
  }
}

double focal_loss(std::span<const double> logits, int target, double gamma, double alpha) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw Error(ErrorCode::kInvalidArgument, "target class out of range");
  }
  return focal_with_grad(logits, target, gamma, alpha, {});
}

double giou_loss(const Box& pred, const Box& target) { return 1.0 - giou(pred, target); }

double contrastive_loss(std::span<const double> region, std::span<const double> class_embeddings,
                        int target, double tau) {
  if (region.empty() || class_embeddings.size() % region.size() != 0) {
    throw Error(ErrorCode::kInvalidArgument, "class embedding table does not match region embedding");
  }
  if (target < 0 || static_cast<std::size_t>(target) >= class_embeddings.size() / region.size()) {
    throw Error(ErrorCode::kInvalidArgument, "target class out of range");
  }
  return contrastive_with_grad(region, class_embeddings, target, tau, {}, {});
}

LossBreakdown detection_loss(const StagedParams& params, std::span<const RegionInput> batch,
                             const LossConfig& cfg) {
  check_batch(batch);
  LossBreakdown out;
  for (const auto& r : batch) {
    const RegionTerms t = region_terms(params, r, cfg);
    out.bbox += t.bbox;
    out.contrastive += t.contrastive;
    out.cls += t.cls;
    out.total += cfg.w_bbox * t.bbox + cfg.w_contrastive * t.contrastive + cfg.w_cls * t.cls;
  }
  const auto n = static_cast<double>(batch.size());
  out.bbox /= n;
  out.contrastive /= n;
  out.cls /= n;
  out.total /= n;
  return out;
}

GradientResult backward_restricted(const StagedParams& params, std::span<const RegionInput> batch,
                                   const RestrictionConfig& rcfg, const LossConfig& lcfg) {
  check_batch(batch);
  rcfg.validate();
  std::vector<StagedParams> per_region(batch.size(), StagedParams(params.dims()));
  std::vector<RegionTerms> terms(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      terms[k] = region_backward(params, batch[k], lcfg, per_region[k]);
    } catch (...) {
#pragma omp critical(camodet_agp_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return finish(params, per_region, terms, rcfg, lcfg);
}

GradientResult backward_restricted_serial(const StagedParams& params,
                                          std::span<const RegionInput> batch,
                                          const RestrictionConfig& rcfg, const LossConfig& lcfg) {
  check_batch(batch);
  rcfg.validate();
  std::vector<StagedParams> per_region;
  std::vector<RegionTerms> terms;
  per_region.reserve(batch.size());
  for (const auto& r : batch) {
    per_region.emplace_back(params.dims());
    terms.push_back(region_backward(params, r, lcfg, per_region.back()));
  }
  return finish(params, per_region, terms, rcfg, lcfg);
}

StagedParams numeric_gradient(const StagedParams& params, std::span<const RegionInput> batch,
                              const LossConfig& cfg, double step) {
  StagedParams out(params.dims());
  const auto n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel
  {
    StagedParams probe = params;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double orig = probe.values()[k];
      probe.values()[k] = orig + step;
      const double up = detection_loss(probe, batch, cfg).total;
      probe.values()[k] = orig - step;
      const double down = detection_loss(probe, batch, cfg).total;
      probe.values()[k] = orig;
      out.values()[k] = (up - down) / (2.0 * step);
    }
  }
  return out;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor) {
  if (analytic.size() != numeric.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient sizes differ");
  }
  double worst = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

std::vector<RegionInput> random_regions(const ModelDims& dims, std::size_t n, Rng& rng) {
  std::vector<RegionInput> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(static_cast<std::size_t>(dims.input));
    for (auto& v : f) v = rng.uniform01();
    const double x0 = rng.uniform(0.0, 0.6), y0 = rng.uniform(0.0, 0.6);
    const double w = rng.uniform(0.1, 0.4), h = rng.uniform(0.1, 0.4);
    const int cls = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(dims.classes)));
    out.push_back({std::move(f), Box(x0, y0, x0 + w, y0 + h), cls});
  }
  return out;
}

GradCheckReport gradient_check(const ModelDims& dims, std::size_t batch_size, std::uint64_t seed,
                               const LossConfig& cfg) {
  Rng rng(seed);
  const StagedParams params = init_params(dims, rng);
  const auto batch = random_regions(dims, batch_size, rng);
  const auto analytic = backward_restricted(params, batch, RestrictionConfig::unrestricted(), cfg).grad;
  const auto numeric = numeric_gradient(params, batch, cfg);
  GradCheckReport rep;
  rep.parameters = params.size();
  for (std::size_t i = 0; i < kAllBlocks.size(); ++i) {
    rep.per_block[i] = max_relative_error(analytic.block(kAllBlocks[i]), numeric.block(kAllBlocks[i]));
    rep.max_relative_error = std::max(rep.max_relative_error, rep.per_block[i]);
  }
  return rep;
}

}  // namespace camodet::agp
