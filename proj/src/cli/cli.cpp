// Copyright 2026 The TerraSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>

#include <CLI11.hpp>

#include "cli/operations.hpp"
#include "cli/service.hpp"
#include "oracles/oracles.hpp"
#include "terraseg/augmentation.hpp"
#include "terraseg/manifest.hpp"
#include "terraseg/tensor_io.hpp"

namespace terraseg {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string schema_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::string format = "json";
};

// State for one subcommand run: what it read, its effective configuration and
// where its reports go.
struct Invocation {
  std::ostream& out;
  std::ostream& err;
  const Globals& globals;
  ClassSchema schema;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> inputs;

  Bytes input(const std::string& path) {
    Bytes b = read_file(path);
    inputs.push_back(path);
    return b;
  }

  std::optional<fs::path> output_dir() const {
    if (globals.output_dir.empty()) return std::nullopt;
    std::error_code ec;
    fs::create_directories(globals.output_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + globals.output_dir + ": " + ec.message());
    return fs::path(globals.output_dir);
  }

  fs::path require_output_dir(const std::string& command) const {
    auto dir = output_dir();
    if (!dir) throw Error(ErrorCode::kInvalidArgument, command + " needs --output <dir>");
    return *dir;
  }

  void emit(const nlohmann::json& doc, const std::string& name) {
    const std::string text = ops::render(doc);
    out << text;
    if (auto dir = output_dir()) write_text_file((*dir / (name + ".json")).string(), text);
  }

  void check_json_format() const {
    if (globals.format != "json") {
      throw Error(ErrorCode::kInvalidArgument, "--format csv is only supported by eval");
    }
  }

  std::uint64_t seed() const { return globals.seed.value_or(0); }
};

using Runner = std::function<void(Invocation&)>;

void write_bytes(const std::string& path, const Bytes& bytes) { write_file(path, bytes); }

template <typename T>
void put(nlohmann::json& config, const char* key, const std::optional<T>& value) {
  if (value) config[key] = *value;
}

nlohmann::json read_json_file(Invocation& inv, const std::string& path) {
  if (path.empty()) return nullptr;
  const Bytes b = inv.input(path);
  return ops::parse_json(std::string(b.begin(), b.end()), path);
}

// Overlays explicitly given flags on an optional JSON parameter file.
nlohmann::json merged_params(Invocation& inv, const std::string& params_path,
                             const nlohmann::json& flags) {
  nlohmann::json doc = read_json_file(inv, params_path);
  if (doc.is_null()) doc = nlohmann::json::object();
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidArgument, params_path + " must hold an object");
  for (auto it = flags.begin(); it != flags.end(); ++it) doc[it.key()] = it.value();
  return doc;
}

struct MetricsInputs {
  std::string gt_dir;
  std::string pred_dir;
  std::string gt;
  std::string pred;
  int workers = 1;
  int top_k = 3;

  void add_to(CLI::App* sub) {
    sub->add_option("--gt-dir", gt_dir, "Directory of ground-truth mask PNGs");
    sub->add_option("--pred-dir", pred_dir, "Directory of predicted mask PNGs (same filenames)");
    sub->add_option("--gt", gt, "Single ground-truth mask PNG");
    sub->add_option("--pred", pred, "Single predicted mask PNG");
    sub->add_option("--workers", workers, "Accumulator shards run in parallel")
        ->check(CLI::Range(1, 256));
    sub->add_option("--top-k", top_k, "Number of confused pairs to report")
        ->check(CLI::NonNegativeNumber);
  }

  ConfusionAccumulator accumulate(Invocation& inv) const {
    const bool dirs = !gt_dir.empty() || !pred_dir.empty();
    const bool files = !gt.empty() || !pred.empty();
    if (dirs == files) {
      throw Error(ErrorCode::kInvalidArgument,
                  "give either --gt-dir/--pred-dir or --gt/--pred");
    }
    if (files) {
      if (gt.empty() || pred.empty()) throw Error(ErrorCode::kInvalidArgument, "need both --gt and --pred");
      return ops::accumulate_bytes(inv.input(gt), inv.input(pred), inv.schema);
    }
    if (gt_dir.empty() || pred_dir.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "need both --gt-dir and --pred-dir");
    }
    const auto pairs = ops::match_pairs(gt_dir, pred_dir);
    for (const auto& p : pairs) {
      inv.inputs.push_back(p.first);
      inv.inputs.push_back(p.second);
    }
    inv.err << "eval: " << pairs.size() << " pairs, " << workers << " workers\n";
    return ops::accumulate_files(pairs, inv.schema, workers);
  }

  void record(nlohmann::json& config) const {
    config["workers"] = workers;
    config["top_k"] = top_k;
  }
};

ProbTensor random_logits(SeededRng& rng, int c, int h, int w) {
  ProbTensor t(c, h, w, TensorKind::kLogits);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform01() * 6.0 - 3.0);
  return t;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Terrain segmentation evaluation and post-processing toolkit", "terraseg"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--schema", g.schema_path, "Class schema JSON (default: built-in ten classes)");
  app.add_option("--seed", g.seed, "Seed for every random draw");
  app.add_option("--output", g.output_dir, "Directory for reports and run_manifest.json");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  std::map<CLI::App*, Runner> runners;

  // eval
  MetricsInputs eval_in;
  {
    auto* sub = app.add_subcommand("eval", "Confusion-matrix metrics over mask pairs");
    eval_in.add_to(sub);
    runners[sub] = [&](Invocation& inv) {
      eval_in.record(inv.config);
      const auto acc = eval_in.accumulate(inv);
      if (inv.globals.format == "csv") {
        const std::string csv = ops::metrics_csv(acc, inv.schema);
        inv.out << csv;
        if (auto dir = inv.output_dir()) write_text_file((*dir / "metrics.csv").string(), csv);
      } else {
        inv.emit(ops::metrics_json(acc, inv.schema, eval_in.top_k), "metrics");
      }
    };
  }

  // confusions
  MetricsInputs conf_in;
  {
    auto* sub = app.add_subcommand("confusions", "Confusion counts and most-confused class pairs");
    conf_in.add_to(sub);
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      conf_in.record(inv.config);
      const auto acc = conf_in.accumulate(inv);
      inv.emit(ops::confusions_json(acc, inv.schema, conf_in.top_k), "confusions");
    };
  }

  // loss
  std::string loss_logits, loss_mask, loss_params;
  std::optional<double> lambda_ce, lambda_dice, loss_eps;
  std::optional<std::string> ce_norm, dice_classes;
  {
    auto* sub = app.add_subcommand("loss", "Weighted cross-entropy plus soft Dice");
    sub->add_option("--logits", loss_logits, "TST1 logits tensor")->required();
    sub->add_option("--mask", loss_mask, "Ground-truth mask PNG")->required();
    sub->add_option("--params", loss_params, "JSON file with loss options");
    sub->add_option("--lambda-ce", lambda_ce);
    sub->add_option("--lambda-dice", lambda_dice);
    sub->add_option("--epsilon", loss_eps);
    sub->add_option("--ce-normalisation", ce_norm)->check(CLI::IsMember({"weighted_mean", "sum"}));
    sub->add_option("--dice-classes", dice_classes)->check(CLI::IsMember({"present", "all"}));
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      nlohmann::json flags = nlohmann::json::object();
      put(flags, "lambda_ce", lambda_ce);
      put(flags, "lambda_dice", lambda_dice);
      put(flags, "epsilon", loss_eps);
      put(flags, "ce_normalisation", ce_norm);
      put(flags, "dice_classes", dice_classes);
      inv.config = merged_params(inv, loss_params, flags);
      const LossOptions options = ops::loss_options_from_json(inv.config);
      inv.emit(ops::loss_json(inv.input(loss_logits), inv.input(loss_mask), inv.schema, options),
               "loss");
    };
  }

  // grad-check
  std::string gc_logits, gc_mask;
  int gc_c = 10, gc_h = 4, gc_w = 4;
  double gc_step = 1e-3, gc_tol = 1e-4;
  {
    auto* sub = app.add_subcommand(
        "grad-check", "Compare the analytic loss gradient with central differences");
    sub->add_option("--logits", gc_logits, "TST1 logits (random when omitted)");
    sub->add_option("--mask", gc_mask, "Mask PNG (random when omitted)");
    sub->add_option("--channels", gc_c)->check(CLI::Range(1, 255));
    sub->add_option("--height", gc_h)->check(CLI::Range(1, 64));
    sub->add_option("--width", gc_w)->check(CLI::Range(1, 64));
    sub->add_option("--step", gc_step)->check(CLI::PositiveNumber);
    sub->add_option("--tolerance", gc_tol)->check(CLI::PositiveNumber);
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      if (gc_logits.empty() != gc_mask.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "give both --logits and --mask, or neither");
      }
      ProbTensor logits;
      LabelMap gt;
      if (!gc_logits.empty()) {
        logits = read_tensor(inv.input(gc_logits));
        gt = decode_mask(inv.input(gc_mask), inv.schema);
      } else {
        if (gc_c != inv.schema.num_classes()) {
          throw Error(ErrorCode::kDimensionMismatch, "--channels must match the schema");
        }
        SeededRng rng(inv.seed());
        logits = random_logits(rng, gc_c, gc_h, gc_w);
        gt = LabelMap(gc_w, gc_h);
        for (auto& v : gt.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, gc_c - 1));
      }
      if (logits.kind != TensorKind::kLogits) {
        throw Error(ErrorCode::kInvalidArgument, "grad-check needs a logits tensor");
      }
      inv.config = {{"step", gc_step}, {"tolerance", gc_tol}};
      const RealTensor x = to_real(logits);
      const RealTensor analytic = combined_loss_grad(x, gt, inv.schema);
      const RealTensor numeric = oracle::oracle_fd_grad(x, gt, inv.schema, gc_step);
      const double rel = oracle::max_relative_error(analytic, numeric);
      inv.emit({{"max_relative_error", rel},
                {"tolerance", gc_tol},
                {"step", gc_step},
                {"passed", rel < gc_tol},
                {"shape", {logits.channels, logits.height, logits.width}}},
               "grad_check");
    };
  }

  // augment
  std::string aug_image, aug_mask;
  std::optional<int> aug_h, aug_w;
  double scale_min = 0.5, scale_max = 2.0;
  bool aug_flip = false;
  {
    auto* sub = app.add_subcommand("augment", "Seeded random resized crop of an image/mask pair");
    sub->add_option("--image", aug_image, "RGB image PNG")->required();
    sub->add_option("--mask", aug_mask, "Mask PNG")->required();
    sub->add_option("--height", aug_h, "Output height (default: source)");
    sub->add_option("--width", aug_w, "Output width (default: source)");
    sub->add_option("--scale-min", scale_min);
    sub->add_option("--scale-max", scale_max);
    sub->add_flag("--hflip", aug_flip, "Mirror the result horizontally");
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      const fs::path dir = inv.require_output_dir("augment");
      Sample s{decode_rgb(inv.input(aug_image)), decode_mask(inv.input(aug_mask), inv.schema)};
      check_sample(s);
      const int oh = aug_h.value_or(s.mask.height);
      const int ow = aug_w.value_or(s.mask.width);
      inv.config = {{"scale_min", scale_min}, {"scale_max", scale_max}, {"height", oh},
                    {"width", ow}, {"hflip", aug_flip}};
      SeededRng rng(inv.seed());
      const CropWindow w = sample_crop_window(s.mask.height, s.mask.width, {scale_min, scale_max}, rng);
      Sample result = resample_window(s, w, oh, ow);
      if (aug_flip) result = hflip(result);
      write_bytes((dir / "image.png").string(), encode_rgb(result.image));
      write_bytes((dir / "mask.png").string(),
                  encode_mask(result.mask, inv.schema, MaskEncoding::kRawValues));
      inv.emit({{"seed", inv.seed()},
                {"window", {{"top", w.top}, {"left", w.left}, {"height", w.height}, {"width", w.width}}},
                {"hflip", aug_flip},
                {"height", oh},
                {"width", ow}},
               "augment");
    };
  }

  // copy-paste
  std::string cp_images, cp_masks, cp_config;
  {
    auto* sub = app.add_subcommand("copy-paste", "Paste rare-class instances between samples");
    sub->add_option("--images-dir", cp_images, "Directory of RGB image PNGs")->required();
    sub->add_option("--masks-dir", cp_masks, "Directory of mask PNGs (same filenames)")->required();
    sub->add_option("--config", cp_config, "Copy-paste configuration JSON");
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      const fs::path dir = inv.require_output_dir("copy-paste");
      nlohmann::json cfg_doc = read_json_file(inv, cp_config);
      CopyPasteConfig cfg = cfg_doc.is_null() ? default_copy_paste_config()
                                              : copy_paste_config_from_json(cfg_doc);
      if (inv.globals.seed) cfg.seed = *inv.globals.seed;
      inv.config = {{"config", cfg_doc}, {"seed", cfg.seed}};

      const auto pairs = ops::match_pairs(cp_images, cp_masks);
      std::vector<Sample> samples;
      for (const auto& p : pairs) {
        samples.push_back({decode_rgb(inv.input(p.first)), decode_mask(inv.input(p.second), inv.schema)});
        check_sample(samples.back());
      }
      fs::create_directories(dir / "images");
      fs::create_directories(dir / "masks");
      SeededRng donor_rng(cfg.seed);
      nlohmann::json outputs = nlohmann::json::array();
      for (std::size_t i = 0; i < samples.size(); ++i) {
        std::size_t donor = i;
        if (samples.size() > 1) {
          donor = static_cast<std::size_t>(donor_rng.uniform_int(0, static_cast<std::int64_t>(samples.size()) - 2));
          if (donor >= i) ++donor;
        }
        CopyPasteConfig item = cfg;
        item.seed = cfg.seed + i;
        const CopyPasteResult r = copy_paste(samples[donor], samples[i], item);
        const std::string name = fs::path(pairs[i].first).filename().string();
        write_bytes((dir / "images" / name).string(), encode_rgb(r.sample.image));
        write_bytes((dir / "masks" / name).string(),
                    encode_mask(r.sample.mask, inv.schema, MaskEncoding::kRawValues));
        nlohmann::json entry = copy_paste_to_json(r);
        entry["output"] = name;
        entry["donor"] = fs::path(pairs[donor].first).filename().string();
        entry["seed"] = item.seed;
        outputs.push_back(std::move(entry));
      }
      inv.emit({{"seed", cfg.seed}, {"outputs", std::move(outputs)}}, "copy_paste");
    };
  }

  // softmax
  std::string sm_logits, sm_out;
  {
    auto* sub = app.add_subcommand("softmax", "Convert a logits tensor to probabilities");
    sub->add_option("--logits", sm_logits, "TST1 logits tensor")->required();
    sub->add_option("--out", sm_out, "Output TST1 probabilities")->required();
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      const ProbTensor p = as_probabilities(read_tensor(inv.input(sm_logits)));
      write_bytes(sm_out, write_tensor(p));
      inv.emit({{"channels", p.channels}, {"height", p.height}, {"width", p.width},
                {"out", sm_out}},
               "softmax");
    };
  }

  // tta
  std::string tta_views, tta_out;
  int tta_h = 0, tta_w = 0;
  {
    auto* sub = app.add_subcommand("tta", "Merge test-time-augmentation predictions");
    sub->add_option("--views", tta_views,
                    "JSON list of {\"tensor\": path, \"hflip\": bool, \"scale\": number}")
        ->required();
    sub->add_option("--height", tta_h, "Base height")->required()->check(CLI::PositiveNumber);
    sub->add_option("--width", tta_w, "Base width")->required()->check(CLI::PositiveNumber);
    sub->add_option("--out", tta_out, "Output TST1 probabilities")->required();
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      const nlohmann::json list = read_json_file(inv, tta_views);
      if (!list.is_array()) throw Error(ErrorCode::kInvalidArgument, "--views must hold a list");
      const fs::path base = fs::path(tta_views).parent_path();
      std::vector<TtaView> views;
      nlohmann::json described = nlohmann::json::array();
      for (const auto& v : list) {
        if (!v.is_object() || !v.contains("tensor")) {
          throw Error(ErrorCode::kMissingField, "each view needs a 'tensor' path");
        }
        fs::path p = v.at("tensor").get<std::string>();
        if (p.is_relative()) p = base / p;
        TtaView view;
        view.transform.hflip = v.value("hflip", false);
        view.transform.scale = v.value("scale", 1.0);
        view.prediction = read_tensor(inv.input(p.string()));
        described.push_back({{"hflip", view.transform.hflip}, {"scale", view.transform.scale}});
        views.push_back(std::move(view));
      }
      inv.config = {{"views", described}, {"height", tta_h}, {"width", tta_w}};
      const ProbTensor merged = tta_merge(views, tta_h, tta_w);
      write_bytes(tta_out, write_tensor(merged));
      inv.emit({{"views", described}, {"height", tta_h}, {"width", tta_w},
                {"channels", merged.channels}, {"out", tta_out}},
               "tta");
    };
  }

  // crf
  std::string crf_probs, crf_image, crf_params_path, crf_out;
  std::optional<int> crf_iters;
  std::optional<double> w_smooth, theta_gamma, w_bilateral, theta_alpha, theta_beta;
  std::optional<std::string> crf_filter;
  {
    auto* sub = app.add_subcommand("crf", "Dense CRF refinement of a probability tensor");
    sub->add_option("--probs", crf_probs, "TST1 probabilities or logits")->required();
    sub->add_option("--image", crf_image, "RGB image PNG")->required();
    sub->add_option("--params", crf_params_path, "JSON file with CRF parameters");
    sub->add_option("--out", crf_out, "Output TST1 probabilities")->required();
    sub->add_option("--iterations", crf_iters);
    sub->add_option("--w-smooth", w_smooth);
    sub->add_option("--theta-gamma", theta_gamma);
    sub->add_option("--w-bilateral", w_bilateral);
    sub->add_option("--theta-alpha", theta_alpha);
    sub->add_option("--theta-beta", theta_beta);
    sub->add_option("--filter", crf_filter)->check(CLI::IsMember({"auto", "exact", "lattice"}));
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      nlohmann::json flags = nlohmann::json::object();
      put(flags, "iterations", crf_iters);
      put(flags, "w_smooth", w_smooth);
      put(flags, "theta_gamma", theta_gamma);
      put(flags, "w_bilateral", w_bilateral);
      put(flags, "theta_alpha", theta_alpha);
      put(flags, "theta_beta", theta_beta);
      put(flags, "filter", crf_filter);
      inv.config = merged_params(inv, crf_params_path, flags);
      const CrfParams params = crf_params_from_json(inv.config);
      const Bytes in_bytes = inv.input(crf_probs);
      const Bytes out_bytes = ops::crf_tst1(in_bytes, inv.input(crf_image), params);
      write_bytes(crf_out, out_bytes);
      const ProbTensor before = as_probabilities(read_tensor(in_bytes));
      const ProbTensor after = read_tensor(out_bytes);
      std::size_t changed = 0;
      const std::size_t n = after.plane_size();
      for (std::size_t i = 0; i < n; ++i) {
        int a = 0, b = 0;
        for (int c = 1; c < after.channels; ++c) {
          if (before.data[c * n + i] > before.data[a * n + i]) a = c;
          if (after.data[c * n + i] > after.data[b * n + i]) b = c;
        }
        changed += a != b;
      }
      inv.emit({{"params", inv.config}, {"changed_pixels", changed}, {"out", crf_out}}, "crf");
    };
  }

  // uncertainty
  std::string unc_probs, unc_heatmap;
  std::optional<double> unc_threshold, unc_weight;
  {
    auto* sub = app.add_subcommand("uncertainty", "Confidence and entropy statistics");
    sub->add_option("--probs", unc_probs, "TST1 probabilities or logits")->required();
    sub->add_option("--threshold", unc_threshold, "Normalised-entropy threshold");
    sub->add_option("--fraction-weight", unc_weight, "Weight of the uncertain fraction in difficulty");
    sub->add_option("--heatmap", unc_heatmap, "Write the entropy heatmap PNG here");
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      nlohmann::json flags = nlohmann::json::object();
      put(flags, "threshold", unc_threshold);
      put(flags, "fraction_weight", unc_weight);
      inv.config = flags;
      const auto result =
          ops::uncertainty_outputs(inv.input(unc_probs), ops::uncertainty_options_from_json(flags));
      if (!unc_heatmap.empty()) write_bytes(unc_heatmap, result.heatmap_png);
      inv.emit(result.report, "uncertainty");
    };
  }

  // mc-aggregate
  std::vector<std::string> mc_samples;
  std::string mc_out;
  std::optional<double> mc_threshold;
  {
    auto* sub = app.add_subcommand("mc-aggregate", "Aggregate Monte-Carlo dropout samples");
    sub->add_option("--samples", mc_samples, "TST1 probability samples")->required();
    sub->add_option("--threshold", mc_threshold, "Normalised-entropy threshold");
    sub->add_option("--out", mc_out, "Write the mean probabilities as TST1");
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      nlohmann::json flags = nlohmann::json::object();
      put(flags, "threshold", mc_threshold);
      inv.config = flags;
      std::vector<ProbTensor> samples;
      for (const auto& p : mc_samples) samples.push_back(as_probabilities(read_tensor(inv.input(p))));
      const McAggregate agg = mc_aggregate(samples, ops::uncertainty_options_from_json(flags));
      if (!mc_out.empty()) {
        ProbTensor mean(agg.mean_probs.channels, agg.mean_probs.height, agg.mean_probs.width,
                        TensorKind::kProbabilities);
        std::transform(agg.mean_probs.data.begin(), agg.mean_probs.data.end(), mean.data.begin(),
                       [](double v) { return static_cast<float>(v); });
        write_bytes(mc_out, write_tensor(mean));
      }
      inv.emit(mc_aggregate_to_json(agg), "mc_aggregate");
    };
  }

  // rank
  std::vector<std::string> rank_probs;
  double well_below = 0.15, high_from = 0.30;
  std::optional<double> rank_threshold;
  {
    auto* sub = app.add_subcommand("rank", "Rank images by prediction difficulty");
    sub->add_option("--probs", rank_probs, "TST1 probabilities, one per image")->required();
    sub->add_option("--well-below", well_below, "Difficulty below which an image is well predicted");
    sub->add_option("--high-from", high_from, "Difficulty from which an image is high-uncertainty");
    sub->add_option("--threshold", rank_threshold, "Normalised-entropy threshold");
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      nlohmann::json flags = {{"well_below", well_below}, {"high_from", high_from}};
      put(flags, "threshold", rank_threshold);
      inv.config = flags;
      nlohmann::json unc_flags = nlohmann::json::object();
      put(unc_flags, "threshold", rank_threshold);
      const auto options = ops::uncertainty_options_from_json(unc_flags);
      std::vector<std::pair<std::string, UncertaintyReport>> reports;
      for (const auto& p : rank_probs) {
        reports.emplace_back(stem(p), uncertainty(as_probabilities(read_tensor(inv.input(p))), options));
      }
      inv.emit(ranking_to_json(rank_difficulty(reports, {well_below, high_from})), "ranking");
    };
  }

  // costmap
  std::string cm_mask, cm_out;
  std::optional<double> cm_safe, cm_caution;
  std::vector<double> cm_h;
  std::optional<int> cm_oh, cm_ow;
  {
    auto* sub = app.add_subcommand("costmap", "Traversability costmap from a mask");
    sub->add_option("--mask", cm_mask, "Mask PNG")->required();
    sub->add_option("--out", cm_out, "Write the 16-bit costmap PNG here");
    sub->add_option("--safe-cost", cm_safe);
    sub->add_option("--caution-cost", cm_caution);
    sub->add_option("--homography", cm_h, "Nine row-major numbers mapping image to ground")
        ->expected(9);
    sub->add_option("--out-height", cm_oh);
    sub->add_option("--out-width", cm_ow);
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      nlohmann::json flags = nlohmann::json::object();
      put(flags, "safe_cost", cm_safe);
      put(flags, "caution_cost", cm_caution);
      put(flags, "out_height", cm_oh);
      put(flags, "out_width", cm_ow);
      if (!cm_h.empty()) flags["homography"] = cm_h;
      inv.config = flags;
      const auto result =
          ops::costmap_outputs(inv.input(cm_mask), inv.schema, ops::costmap_request_from_json(flags));
      if (!cm_out.empty()) write_bytes(cm_out, result.png);
      if (auto dir = inv.output_dir()) write_bytes((*dir / "costmap.png").string(), result.png);
      inv.emit(result.sidecar, "costmap");
    };
  }

  // plan
  std::string plan_costmap;
  std::vector<int> plan_start, plan_goal;
  int plan_clearance = 0;
  std::optional<double> plan_safe, plan_caution;
  {
    auto* sub = app.add_subcommand("plan", "Least-cost path over a costmap PNG");
    sub->add_option("--costmap", plan_costmap, "16-bit costmap PNG")->required();
    sub->add_option("--start", plan_start, "Start cell: row col")->expected(2)->required();
    sub->add_option("--goal", plan_goal, "Goal cell: row col")->expected(2)->required();
    sub->add_option("--clearance", plan_clearance, "Obstacle inflation radius in cells")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--safe-cost", plan_safe);
    sub->add_option("--caution-cost", plan_caution);
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      nlohmann::json request = {{"start", plan_start}, {"goal", plan_goal},
                                {"clearance", plan_clearance}};
      put(request, "safe_cost", plan_safe);
      put(request, "caution_cost", plan_caution);
      inv.config = request;
      inv.emit(ops::plan_json(inv.input(plan_costmap), ops::plan_request_from_json(request)), "plan");
    };
  }

  // overlay
  std::string ov_image, ov_mask, ov_out;
  double ov_alpha = 0.5;
  {
    auto* sub = app.add_subcommand("overlay", "Blend class colours over an image");
    sub->add_option("--image", ov_image, "RGB image PNG")->required();
    sub->add_option("--mask", ov_mask, "Mask PNG")->required();
    sub->add_option("--alpha", ov_alpha, "Colour weight in [0, 1]");
    sub->add_option("--out", ov_out, "Output PNG")->required();
    runners[sub] = [&](Invocation& inv) {
      inv.check_json_format();
      inv.config = {{"alpha", ov_alpha}};
      const RgbImage image = decode_rgb(inv.input(ov_image));
      const LabelMap mask = decode_mask(inv.input(ov_mask), inv.schema);
      const RgbImage blended = render_overlay(image, mask, inv.schema, ov_alpha);
      write_bytes(ov_out, encode_rgb(blended));
      inv.emit({{"alpha", ov_alpha}, {"height", blended.height}, {"width", blended.width},
                {"out", ov_out}},
               "overlay");
    };
  }

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  int threads = 4;
  std::optional<std::size_t> max_body;
  {
    auto* sub = app.add_subcommand("serve", "Run the HTTP service");
    sub->add_option("--host", host);
    sub->add_option("--port", port)->check(CLI::Range(0, 65535));
    sub->add_option("--threads", threads)->check(CLI::Range(1, 256));
    sub->add_option("--max-body-bytes", max_body, "Request size limit (default 64 MiB)");
    runners[sub] = [&](Invocation& inv) {
      ServiceConfig cfg;
      cfg.host = host;
      cfg.port = port;
      cfg.threads = threads;
      cfg.max_body_bytes = resolve_max_body_bytes(max_body);
      Service service(inv.schema, cfg);
      const int bound = service.bind();
      inv.err << "serving on " << host << ":" << bound << " (max body " << cfg.max_body_bytes
              << " bytes)\n";
      inv.err.flush();
      service.run();
    };
  }

  std::vector<std::string> argv_storage{"terraseg"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << ops::render(ops::error_json(ErrorCode::kInvalidArgument, e.what()));
    err << app.help();
    return kExitValidation;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    Invocation inv{out, err, g, load_schema_file(g.schema_path), nlohmann::json::object(), {}};
    runners.at(chosen)(inv);
    if (auto dir = inv.output_dir()) {
      nlohmann::json effective = inv.config;
      effective["schema"] = schema_to_json(inv.schema);
      RunManifest m = make_manifest(chosen->get_name(), effective, g.seed);
      for (const auto& p : inv.inputs) add_input(m, p);
      write_text_file((*dir / "run_manifest.json").string(), ops::render(manifest_to_json(m)));
    }
    return kExitOk;
  } catch (const Error& e) {
    err << ops::render(ops::error_json(e.code(), e.what()));
    return e.category() == ErrorCategory::kIo ? kExitIo : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << ops::render(ops::error_json(ErrorCode::kIo, e.what()));
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    err << ops::render(ops::error_json(ErrorCode::kInvalidArgument, e.what()));
    return kExitValidation;
  }
}

}  // namespace terraseg
