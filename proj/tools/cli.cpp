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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "camodet/agp.hpp"
#include "camodet/atomic_file.hpp"
#include "camodet/dataset.hpp"
#include "camodet/error.hpp"
#include "camodet/eval.hpp"
#include "camodet/sfr.hpp"
#include "camodet/train.hpp"
#include "json.hpp"

namespace camodet::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// JSON config files: one object per subcommand, keys are long option names.
//   {"sfr-offline": {"seed": 7, "grids": [2, 3, 4]}}
class ConfigJson : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return to_json(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file: top level must be an object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, "", {}, items);
    return items;
  }

 private:
  static json to_json(const CLI::App* app, bool default_also) {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (name == "help" || name == "config" || name == "print-config") continue;
      if (opt->get_type_size() == 0) {
        if (opt->count() > 0) j[name] = true;
        else if (default_also) j[name] = false;
      } else if (opt->count() > 0) {
        const auto& r = opt->results();
        if (r.size() == 1 && opt->get_expected_max() <= 1) {
          j[name] = typed(r[0]);
        } else {
          json arr = json::array();
          for (const auto& v : r) arr.push_back(typed(v));
          j[name] = std::move(arr);
        }
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = typed(opt->get_default_str());
      } else if (default_also) {
        j[name] = nullptr;
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) j[sub->get_name()] = to_json(sub, default_also);
    return j;
  }

  // Numbers and lists come back as JSON values, everything else as a string.
  static json typed(const std::string& text) {
    if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
      json arr = json::array();
      std::stringstream ss(text.substr(1, text.size() - 2));
      for (std::string item; std::getline(ss, item, ',');) arr.push_back(typed(item));
      return arr;
    }
    const json j = json::parse(text, nullptr, false);
    return j.is_number() || j.is_boolean() ? j : json(text);
  }

  static void flatten(const json& j, const std::string& name, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& out) {
    if (j.is_object()) {
      if (!name.empty()) parents.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it) flatten(*it, it.key(), parents, out);
      return;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = std::move(parents);
    auto scalar = [](const json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      if (v.is_number()) return v.dump();
      throw CLI::ConversionError("config file: unsupported value " + v.dump());
    };
    if (j.is_null()) return;
    if (j.is_array()) {
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(j));
    }
    out.push_back(std::move(item));
  }
};

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

fs::path image_root_for(const std::string& images, const std::string& annotations) {
  if (!images.empty()) return images;
  const fs::path p(annotations);
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

sfr::ImageLoader loader_for(const fs::path& root) {
  return [root](const Sample& s) { return load_sample_image(s, root); };
}

// ---- options ---------------------------------------------------------------

struct ConvertOpts {
  std::string masks;
  std::string out = "annotations.json";
  int threshold = kDefaultMaskThreshold;
  std::string category = "object";
  std::string split = "train";
  std::string image_ext;
  double merge_gap = -1;
};

struct SummarizeOpts {
  std::string annotations;
  std::string reference;
};

struct SfrOpts {
  std::string annotations;
  std::string images;
  std::string out = "sfr_out";
  std::vector<int> grids = {2, 3, 4};
  int pool_size = sfr::kDefaultPoolSize;
  int crop = sfr::kDefaultCropSize;
  int canvas = sfr::kDefaultCanvasSize;
  std::optional<std::uint64_t> seed;
};

struct TrainOpts {
  std::string annotations;
  std::string images;
  std::size_t synthetic = 160;
  int epochs = 50;
  int batch_size = 16;
  std::optional<std::uint64_t> seed;
  std::string mode = "boundary";
  double lambda = agp::kDefaultRestriction;
  std::optional<double> lambda_hn;
  std::optional<double> lambda_nb;
  double lr = agp::kDefaultLearningRate;
  double momentum = agp::kDefaultWeightDecay;
  std::string momentum_as = "weight-decay";
  std::optional<double> weight_decay;
  std::string stepper = "adamw";
  double gamma = 2.0;
  double alpha = 0.25;
  double tau = 0.07;
  double w_bbox = 1.0;
  double w_contrastive = 1.0;
  double w_cls = 1.0;
  int backbone_dim = 64;
  int neck_dim = 32;
  int embed_dim = 32;
  bool online_sfr = false;
  std::vector<int> grids = {2, 3, 4};
  int pool_size = sfr::kDefaultPoolSize;
  int crop = sfr::kDefaultCropSize;
  int canvas = sfr::kDefaultCanvasSize;
  std::string log = "train_log.jsonl";
  std::string checkpoint = "checkpoint.json";
  bool no_wall_time = false;
};

struct EvalOpts {
  std::string annotations;
  std::string detections;
  std::string out = "report.json";
  std::size_t max_dets = 100;
  std::vector<std::string> metrics = {"mAP", "AP50", "AP75", "APm", "APl"};
};

struct GradOpts {
  std::uint64_t seed = 0;
  int trials = 1;
  std::size_t batch = 4;
  int input = 8;
  int backbone = 6;
  int neck = 4;
  int classes = 3;
  int embed = 5;
  double tolerance = 1e-4;
};

// ---- subcommands -----------------------------------------------------------

int do_convert(const ConvertOpts& o, std::ostream& out) {
  if (o.masks.empty()) fail(ErrorCode::kInvalidArgument, "--masks is required");
  if (o.split != "train" && o.split != "test") fail(ErrorCode::kInvalidArgument, "--split must be train or test");
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(o.masks, ec)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm") files.push_back(e.path());
  }
  if (ec) fail(ErrorCode::kIo, "cannot list " + o.masks + ": " + ec.message());
  std::sort(files.begin(), files.end());

  DetectionDataset ds;
  ds.categories = {{1, o.category}};
  std::size_t boxes = 0, flagged = 0, split_masks = 0;
  std::int64_t next_id = 1;
  for (const auto& f : files) {
    const Image mask = read_image(f);
    auto labels = mask_to_boxes(mask, o.threshold);
    if (o.merge_gap >= 0) labels = merge_boxes(labels, o.merge_gap);
    for (auto& l : labels) l.category_id = 1;
    Sample s;
    s.image_id = next_id++;
    fs::path name = f.filename();
    if (!o.image_ext.empty()) name.replace_extension(o.image_ext);
    s.image_path = name.string();
    s.width = mask.width();
    s.height = mask.height();
    s.split = o.split == "train" ? Split::kTrain : Split::kTest;
    boxes += labels.size();
    if (labels.size() > 1) ++split_masks;
    for (const auto& l : labels) flagged += l.review ? 1 : 0;
    s.labels = std::move(labels);
    ds.samples.push_back(std::move(s));
  }
  write_annotations(ds, o.out);
  out << "images " << ds.samples.size() << "\nboxes " << boxes << "\nreview_flagged " << flagged
      << "\nmulti_component_masks " << split_masks << "\n";
  return 0;
}

int do_summarize(const SummarizeOpts& o, std::ostream& out) {
  if (o.annotations.empty()) fail(ErrorCode::kInvalidArgument, "--annotations is required");
  const DetectionDataset ds = read_annotations(o.annotations);
  const DatasetSummary s = dataset_summary(ds);
  out << format_summary(s, ds);
  if (!o.reference.empty()) {
    const ReferenceCounts* ref = find_reference_counts(o.reference);
    if (ref == nullptr) fail(ErrorCode::kInvalidArgument, "unknown reference dataset '" + o.reference + "'");
    const bool ok = matches_reference(s, *ref);
    out << "\nreference " << ref->name << ": categories " << ref->categories << ", train "
        << ref->train_images << ", test " << ref->test_images << " -> " << (ok ? "match" : "MISMATCH")
        << "\n";
    return ok ? 0 : 3;
  }
  return 0;
}

int do_sfr(const SfrOpts& o, std::ostream& out) {
  if (o.annotations.empty()) fail(ErrorCode::kInvalidArgument, "--annotations is required");
  if (!o.seed) fail(ErrorCode::kInvalidArgument, "--seed is required");
  sfr::SfrConfig cfg;
  cfg.grids = o.grids;
  cfg.pool_size = o.pool_size;
  cfg.crop_width = o.crop;
  cfg.crop_height = o.crop;
  cfg.canvas_size = o.canvas;
  cfg.seed = *o.seed;
  cfg.validate();
  const DetectionDataset ds = read_annotations(o.annotations);
  const auto res = sfr::generate_offline(ds, loader_for(image_root_for(o.images, o.annotations)), cfg, o.out);
  out << "pseudo_images " << res.canvases.size() << "\nusable_boxes " << res.usable_boxes
      << "\nskipped_boxes " << res.skipped_boxes << "\n";
  for (int g : cfg.grids) {
    std::size_t n = 0;
    for (const auto& c : res.canvases) n += c.grid.g == g ? 1 : 0;
    out << "grid " << g << "x" << g << " " << n << "\n";
  }
  return 0;
}

int do_train(const TrainOpts& o, std::ostream& out) {
  if (!o.seed) fail(ErrorCode::kInvalidArgument, "--seed is required");
  agp::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.seed = *o.seed;
  cfg.stepper = o.stepper == "sgd" ? agp::Stepper::kSgd : agp::Stepper::kAdamW;
  cfg.adamw.lr = o.lr;
  if (o.momentum_as == "beta1") {
    cfg.adamw.beta1 = o.momentum;
    cfg.adamw.weight_decay = 0.0;
  } else {
    cfg.adamw.weight_decay = o.momentum;
  }
  if (o.weight_decay) cfg.adamw.weight_decay = *o.weight_decay;
  cfg.restriction.mode = o.mode == "update" ? agp::RestrictionMode::kUpdate : agp::RestrictionMode::kBoundary;
  cfg.restriction.uniform = o.lambda;
  cfg.restriction.head_to_neck = o.lambda_hn.value_or(o.lambda);
  cfg.restriction.neck_to_backbone = o.lambda_nb.value_or(o.lambda);
  cfg.loss = {o.gamma, o.alpha, o.tau, o.w_bbox, o.w_contrastive, o.w_cls};
  cfg.hidden.backbone = o.backbone_dim;
  cfg.hidden.neck = o.neck_dim;
  cfg.hidden.embed = o.embed_dim;
  cfg.online_sfr = o.online_sfr;
  cfg.sfr.grids = o.grids;
  cfg.sfr.pool_size = o.pool_size;
  cfg.sfr.crop_width = o.crop;
  cfg.sfr.crop_height = o.crop;
  cfg.sfr.canvas_size = o.canvas;
  cfg.sfr.seed = *o.seed;
  cfg.validate();

  DetectionDataset ds;
  fs::path root = ".";
  if (!o.annotations.empty()) {
    ds = read_annotations(o.annotations);
    root = image_root_for(o.images, o.annotations);
  } else {
    if (o.synthetic < 1) fail(ErrorCode::kEmptyDataset, "--synthetic must be >= 1");
    ds = agp::make_synthetic_dataset(o.synthetic, *o.seed);
  }
  const auto res = agp::train_toy(ds, loader_for(root), cfg);
  write_file_atomic(o.log, agp::training_log_jsonl(res, cfg, !o.no_wall_time));
  agp::save_checkpoint(res.params, o.checkpoint);
  out << "iterations " << res.iterations << "\ninitial_loss " << res.initial_loss << "\nfinal_loss "
      << res.final_loss << "\n";
  return 0;
}

int do_evaluate(const EvalOpts& o, std::ostream& out) {
  if (o.annotations.empty() || o.detections.empty()) {
    fail(ErrorCode::kInvalidArgument, "--annotations and --detections are required");
  }
  for (const auto& m : o.metrics) {
    if (std::find_if(eval::kHeadlineMetrics.begin(), eval::kHeadlineMetrics.end(),
                     [&](const char* n) { return m == n; }) == eval::kHeadlineMetrics.end()) {
      fail(ErrorCode::kInvalidArgument, "unknown metric '" + m + "'");
    }
  }
  const DetectionDataset gt = read_annotations(o.annotations);
  const auto dets = eval::read_detections(o.detections);
  eval::EvalConfig cfg;
  cfg.max_detections = o.max_dets;
  const eval::EvalReport rep = eval::evaluate(dets, gt, cfg);
  write_file_atomic(o.out, eval::report_json(rep));
  out << eval::report_table(rep);
  return 0;
}

int do_gradcheck(const GradOpts& o, std::ostream& out) {
  const agp::ModelDims dims{o.input, o.backbone, o.neck, o.classes, o.embed};
  dims.validate();
  double worst = 0;
  for (int t = 0; t < o.trials; ++t) {
    const auto rep = agp::gradient_check(dims, o.batch, o.seed + static_cast<std::uint64_t>(t));
    worst = std::max(worst, rep.max_relative_error);
    out << "trial " << t << " parameters " << rep.parameters << " max_rel_error "
        << rep.max_relative_error << "\n";
  }
  out << "max_rel_error " << worst << " tolerance " << o.tolerance << " "
      << (worst <= o.tolerance ? "ok" : "FAIL") << "\n";
  return worst <= o.tolerance ? 0 : 4;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"camodet: box annotation, mosaic augmentation, restricted-gradient training and "
               "COCO-style evaluation for camouflaged object detection"};
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<ConfigJson>());
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  app.require_subcommand(0, 1);
  app.failure_message(CLI::FailureMessage::help);
  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "Print every option with its default as a JSON config and exit");

  const std::vector<std::string> grid_help_names = {"2", "3", "4"};

  ConvertOpts conv;
  auto* c_conv = app.add_subcommand("convert-masks", "Convert a directory of mask images to box annotations");
  c_conv->add_option("--masks", conv.masks, "Directory of PNG/PGM/PPM masks");
  c_conv->add_option("--out", conv.out, "Output annotation file");
  c_conv->add_option("--threshold", conv.threshold, "Foreground threshold on grayscale")->check(CLI::Range(1, 255));
  c_conv->add_option("--category-name", conv.category, "Name of the single category assigned to every box");
  c_conv->add_option("--split", conv.split, "Split of the converted images")->check(CLI::IsMember({"train", "test"}));
  c_conv->add_option("--image-ext", conv.image_ext, "Replace the mask extension in file_name (e.g. .jpg)");
  c_conv->add_option("--merge-gap", conv.merge_gap, "Merge boxes within this gap in pixels (negative: off)");

  SummarizeOpts summ;
  auto* c_summ = app.add_subcommand("summarize", "Print category, train, test and box counts");
  c_summ->add_option("--annotations", summ.annotations, "Annotation file");
  c_summ->add_option("--reference", summ.reference, "Compare with published counts: COD10K-D, NC4K-D or CAMO-D");

  SfrOpts sfro;
  auto* c_sfr = app.add_subcommand("sfr-offline", "Generate mosaic pseudo-images from every train box");
  c_sfr->add_option("--annotations", sfro.annotations, "Annotation file");
  c_sfr->add_option("--images", sfro.images, "Image root (default: directory of the annotation file)");
  c_sfr->add_option("--out", sfro.out, "Output directory");
  c_sfr->add_option("--grids", sfro.grids, "Grid dimensions")->delimiter(',');
  c_sfr->add_option("--pool-size", sfro.pool_size, "Boxes per pool");
  c_sfr->add_option("--crop", sfro.crop, "Crop patch side in pixels (W = H)");
  c_sfr->add_option("--canvas", sfro.canvas, "Canvas side in pixels");
  c_sfr->add_option("--seed", sfro.seed, "Random seed (required)");

  TrainOpts tr;
  auto* c_tr = app.add_subcommand("train-toy", "Train the three-stage toy detector with restricted gradients");
  c_tr->add_option("--annotations", tr.annotations, "Annotation file (default: synthetic task)");
  c_tr->add_option("--images", tr.images, "Image root (default: directory of the annotation file)");
  c_tr->add_option("--synthetic", tr.synthetic, "Number of synthetic images when no annotations are given");
  c_tr->add_option("--epochs", tr.epochs, "Epochs");
  c_tr->add_option("--batch-size", tr.batch_size, "Images per batch");
  c_tr->add_option("--seed", tr.seed, "Random seed (required)");
  c_tr->add_option("--mode", tr.mode, "Restriction mode: boundary (scale the signal at stage boundaries) or update (scale every stage's step)")
      ->check(CLI::IsMember({"boundary", "update"}));
  c_tr->add_option("--lambda", tr.lambda, "Restriction factor")->check(CLI::Range(0.0, 1.0));
  c_tr->add_option("--lambda-hn", tr.lambda_hn, "Head->neck factor in boundary mode (default: --lambda)")->check(CLI::Range(0.0, 1.0));
  c_tr->add_option("--lambda-nb", tr.lambda_nb, "Neck->backbone factor in boundary mode (default: --lambda)")->check(CLI::Range(0.0, 1.0));
  c_tr->add_option("--lr", tr.lr, "AdamW learning rate (also the SGD step)");
  c_tr->add_option("--momentum", tr.momentum, "The optimizer 'momentum' value, read as set by --momentum-as");
  c_tr->add_option("--momentum-as", tr.momentum_as, "Read --momentum as decoupled weight decay or as Adam beta1")
      ->check(CLI::IsMember({"weight-decay", "beta1"}));
  c_tr->add_option("--weight-decay", tr.weight_decay, "Explicit decoupled weight decay (overrides --momentum)");
  c_tr->add_option("--stepper", tr.stepper, "adamw or sgd")->check(CLI::IsMember({"adamw", "sgd"}));
  c_tr->add_option("--gamma", tr.gamma, "Focal loss gamma");
  c_tr->add_option("--alpha", tr.alpha, "Focal loss alpha");
  c_tr->add_option("--tau", tr.tau, "Contrastive temperature");
  c_tr->add_option("--w-bbox", tr.w_bbox, "GIoU loss weight");
  c_tr->add_option("--w-contrastive", tr.w_contrastive, "Contrastive loss weight");
  c_tr->add_option("--w-cls", tr.w_cls, "Focal loss weight");
  c_tr->add_option("--backbone-dim", tr.backbone_dim, "Backbone width");
  c_tr->add_option("--neck-dim", tr.neck_dim, "Neck width");
  c_tr->add_option("--embed-dim", tr.embed_dim, "Embedding width");
  c_tr->add_flag("--online-sfr", tr.online_sfr, "Append mosaic pseudo-images to every batch");
  c_tr->add_option("--grids", tr.grids, "Grid dimensions for --online-sfr")->delimiter(',');
  c_tr->add_option("--pool-size", tr.pool_size, "Boxes per pool for --online-sfr");
  c_tr->add_option("--crop", tr.crop, "Crop patch side for --online-sfr");
  c_tr->add_option("--canvas", tr.canvas, "Canvas side for --online-sfr");
  c_tr->add_option("--log", tr.log, "JSON-lines training log");
  c_tr->add_option("--checkpoint", tr.checkpoint, "Checkpoint output");
  c_tr->add_flag("--no-wall-time", tr.no_wall_time, "Omit wall-clock times from the log");

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "COCO-style mAP, AP50, AP75, APm, APl and class-agnostic localization");
  c_ev->add_option("--annotations", ev.annotations, "Ground-truth annotation file");
  c_ev->add_option("--detections", ev.detections, "Detections JSON");
  c_ev->add_option("--out", ev.out, "Report JSON output");
  c_ev->add_option("--max-dets", ev.max_dets, "Detections kept per image and category");
  c_ev->add_option("--metrics", ev.metrics, "Reported metric set")->delimiter(',');

  GradOpts gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Compare reverse-mode gradients with central finite differences");
  c_gc->add_option("--seed", gc.seed, "Random seed");
  c_gc->add_option("--trials", gc.trials, "Number of random models");
  c_gc->add_option("--batch", gc.batch, "Regions per batch");
  c_gc->add_option("--input", gc.input, "Input dimension");
  c_gc->add_option("--backbone", gc.backbone, "Backbone width");
  c_gc->add_option("--neck", gc.neck, "Neck width");
  c_gc->add_option("--classes", gc.classes, "Classes");
  c_gc->add_option("--embed", gc.embed, "Embedding width");
  c_gc->add_option("--tolerance", gc.tolerance, "Maximum accepted relative error");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (print_config) {
      out << app.config_to_str(true, false);
      return 0;
    }
    if (c_conv->parsed()) return do_convert(conv, out);
    if (c_summ->parsed()) return do_summarize(summ, out);
    if (c_sfr->parsed()) return do_sfr(sfro, out);
    if (c_tr->parsed()) return do_train(tr, out);
    if (c_ev->parsed()) return do_evaluate(ev, out);
    if (c_gc->parsed()) return do_gradcheck(gc, out);
    out << app.help();
    return 1;
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace camodet::cli
