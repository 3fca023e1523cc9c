/**
 * Copyright 2026 lmkit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "lmkit/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmkit/augmentation.hpp"
#include "lmkit/errors.hpp"
#include "lmkit/evaluation.hpp"
#include "lmkit/head_planner.hpp"
#include "lmkit/heatmap.hpp"
#include "lmkit/io.hpp"
#include "lmkit/pipeline.hpp"
#include "lmkit/rng.hpp"

namespace lmkit {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

Shape3 parse_shape(const std::string& text) {
  Shape3 s;
  char sep1 = 0, sep2 = 0;
  std::istringstream in(text);
  if (!(in >> s.c >> sep1 >> s.h >> sep2 >> s.w) || sep1 != 'x' || sep2 != 'x' || s.c < 1 ||
      s.h < 1 || s.w < 1)
    throw ParseError("expected CxHxW, got '" + text + "'");
  return s;
}

ReferenceTemplate load_template(const fs::path& path) {
  if (path.empty()) return ReferenceTemplate::standard();
  ReferenceTemplate t;
  t.points = read_landmarks(path);
  if (t.points.size() != 5) throw ParseError("template must have 5 points: " + path.string());
  t.frame_size = 192.0;
  return t;
}

PipelineConfig config_from(const fs::path& config_path, std::uint64_t seed, int jobs) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = load_pipeline_config(config_path);
  if (seed != 0) cfg.seed = seed;
  if (jobs != 0) cfg.jobs = jobs;
  return cfg;
}

std::vector<DatasetItem> load_dataset_items(const fs::path& images_dir,
                                            const fs::path& annotations_dir) {
  std::vector<DatasetItem> items;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(images_dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    DatasetItem item;
    item.stem = file.stem().string();
    item.image = read_ppm(file);
    if (!annotations_dir.empty()) {
      const fs::path txt = annotations_dir / (item.stem + ".txt");
      const fs::path js = annotations_dir / (item.stem + ".json");
      if (fs::exists(js)) {
        item.ground_truth = read_annotation_json(js);
      } else if (fs::exists(txt)) {
        GroundTruthRecord rec;
        rec.landmarks = read_annotation_text(txt);
        item.ground_truth = rec;
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

int cmd_align(const fs::path& images, const fs::path& detections, const fs::path& annotations,
              const fs::path& template_path, const fs::path& out_dir,
              const PipelineConfig& cfg) {
  const auto items = load_dataset_items(images, annotations);
  const auto dets = read_detector_outputs(detections, cfg.naive_order);
  const auto tmpl =
      load_template(template_path.empty() ? cfg.template_path : template_path);
  fs::create_directories(out_dir);
  const AlignManifest manifest = align_dataset(items, dets, tmpl, out_dir, cfg);
  write_manifest(manifest, out_dir / "manifest.json");
  std::cout << "aligned " << manifest.entries.size() << " image(s), skipped "
            << manifest.skipped.size() << "\n";
  return 0;
}

int cmd_encode(const fs::path& landmarks_path, int height, int width, double sigma,
               bool normalized, double stride, const fs::path& out) {
  GaussianParams params;
  params.sigma = sigma;
  params.amplitude = normalized ? GaussianParams::Amplitude::Normalized
                                : GaussianParams::Amplitude::PeakOne;
  const Landmarks lmk = read_landmarks(landmarks_path);
  const HeatmapStack stack = encode(lmk, height, width, params, stride);
  write_hms(stack, out);
  int truncated = 0;
  for (const auto flag : stack.truncated) truncated += flag;
  std::cout << "encoded " << stack.channels << " channel(s) at " << width << "x" << height;
  if (truncated > 0) std::cout << ", " << truncated << " truncated";
  std::cout << "\n";
  return 0;
}

int cmd_decode(const fs::path& stack_path, const std::string& method, double coeff,
               double sigma, const fs::path& out) {
  const HeatmapStack stack = read_hms(stack_path);
  std::vector<DecodedPoint> pts;
  if (method == "argmax") {
    pts = decode_argmax(stack);
  } else if (method == "gradient") {
    pts = decode_gradient(stack, coeff);
  } else if (method == "gaussian") {
    GaussianParams params;
    params.sigma = sigma;
    pts = decode_gaussian_fit(stack, params);
  } else {
    throw ParseError("unknown decode method: " + method);
  }

  Landmarks lmk;
  for (const auto& p : pts) lmk.points.push_back({p.x, p.y});
  if (out.extension() == ".json")
    write_landmarks_json(lmk, out);
  else
    write_landmarks_csv(lmk, out);
  std::cout << "decoded " << pts.size() << " point(s) via " << method << "\n";
  return 0;
}

int cmd_augment(const fs::path& image_path, const fs::path& landmarks_path,
                const fs::path& config_path, std::uint64_t seed, const fs::path& out_image,
                const fs::path& out_landmarks) {
  Image img = read_ppm(image_path);
  Landmarks lmk;
  if (!landmarks_path.empty()) lmk = read_landmarks(landmarks_path);

  json cfg = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open augment config: " + config_path.string());
    in >> cfg;
  }

  std::uint64_t step = 0;
  auto next_seed = [seed, &step] { return derive_seed(seed, step++); };

  if (cfg.value("hflip", false)) {
    if (lmk.size() > 0) {
      FlipMap map = lmk.size() == 5 ? FlipMap::five_point()
                                    : FlipMap::identity(static_cast<int>(lmk.size()));
      if (cfg.contains("flip_map")) map = load_flip_map(cfg["flip_map"].get<std::string>());
      auto [fimg, flmk] = hflip(img, lmk, map);
      img = std::move(fimg);
      lmk = std::move(flmk);
    } else {
      img = hflip_image(img);
    }
  }
  if (cfg.contains("rigid")) {
    const auto& r = cfg["rigid"];
    JitterRanges ranges;
    if (r.contains("rotation_deg")) {
      ranges.rotation_deg = r["rotation_deg"].get<double>();
      ranges.rotation_enabled = true;
    }
    if (r.contains("scale_delta")) {
      ranges.scale_delta = r["scale_delta"].get<double>();
      ranges.scale_enabled = true;
    }
    if (r.contains("shift_px")) {
      ranges.shift_px = r["shift_px"].get<double>();
      ranges.shift_enabled = true;
    }
    ranges.validate();
    RigidResult result = random_rigid(img, lmk, ranges, next_seed());
    img = std::move(result.image);
    lmk = std::move(result.landmarks);
  }
  if (cfg.contains("erase")) {
    const auto& e = cfg["erase"];
    EraseParams params;
    params.probability = e.value("probability", params.probability);
    if (e.contains("area")) params.area_fraction = {e["area"][0], e["area"][1]};
    if (e.contains("aspect")) params.aspect_ratio = {e["aspect"][0], e["aspect"][1]};
    if (e.value("fill", "uniform-noise") == std::string("mean"))
      params.fill = EraseParams::Fill::Mean;
    img = random_erase(img, params, next_seed());
  }
  if (cfg.contains("pca_color")) {
    const double sigma = cfg["pca_color"].value("sigma", 0.05);
    img = pca_color(img, PcaEigen::natural_images(), sigma, next_seed());
  }
  if (cfg.contains("color_jitter")) {
    const double strength = cfg["color_jitter"].value("strength", 0.4);
    img = color_jitter(img, strength, next_seed());
  }

  write_ppm(img, out_image);
  if (!out_landmarks.empty() && lmk.size() > 0) write_landmarks_json(lmk, out_landmarks);
  std::cout << "augmented -> " << out_image.string() << "\n";
  return 0;
}

int cmd_plan(const std::string& strategies, int channels, const std::string& backbone,
             int landmarks, int deconv_kernel, int shuffle_kernel, int macs_per_flop,
             double backbone_flops, const std::string& report_format, const fs::path& out) {
  CostModelConfig cost;
  cost.deconv_kernel = deconv_kernel;
  cost.shuffle_conv_kernel = shuffle_kernel;
  cost.macs_per_flop = macs_per_flop;
  cost.backbone_flops = backbone_flops;
  const Shape3 backbone_shape = parse_shape(backbone);

  std::vector<StrategySpec> specs;
  std::istringstream list(strategies);
  std::string token;
  while (std::getline(list, token, ','))
    if (!token.empty()) specs.push_back(parse_strategy(token, channels, backbone_shape));
  if (specs.empty()) throw InvalidStrategy("no strategies given");

  const auto reports = rank_strategies(specs, cost, landmarks);

  std::ostringstream text;
  if (report_format == "csv") {
    text << "strategy,gflops,gmacs,params,size_mb,peak_activations,out_shape\n";
    for (const auto& r : reports) {
      text << r.strategy << "," << r.total_flops / 1e9 << "," << r.total_macs / 1e9 << ","
           << r.total_params << "," << r.param_mb << "," << r.peak_activation_elements << ","
           << r.output_shape.c << "x" << r.output_shape.h << "x" << r.output_shape.w << "\n";
    }
  } else if (report_format == "json") {
    json arr = json::array();
    for (const auto& r : reports) {
      json stages = json::array();
      for (const auto& s : r.stages)
        stages.push_back({{"label", s.label},
                          {"macs", s.macs},
                          {"flops", s.flops},
                          {"params", s.params}});
      arr.push_back({{"strategy", r.strategy},
                     {"total_flops", r.total_flops},
                     {"total_macs", r.total_macs},
                     {"total_params", r.total_params},
                     {"param_mb", r.param_mb},
                     {"peak_activation_elements", r.peak_activation_elements},
                     {"output_shape",
                      {r.output_shape.c, r.output_shape.h, r.output_shape.w}},
                     {"stages", std::move(stages)}});
    }
    text << arr.dump(2) << "\n";
  } else {
    throw ParseError("unknown report format: " + report_format);
  }

  if (out.empty() || out == "-") {
    std::cout << text.str();
  } else {
    std::ofstream file(out);
    if (!file) throw IoError("cannot write report: " + out.string());
    file << text.str();
    std::cout << "wrote " << reports.size() << " report(s) to " << out.string() << "\n";
  }
  return 0;
}

std::unique_ptr<ModelRunner> make_runner(const std::string& kind, const fs::path& replay_dir,
                                         const fs::path& weights_dir,
                                         const PipelineConfig& cfg) {
  if (kind == "replay") {
    if (replay_dir.empty()) throw ParseError("--replay-dir required for the replay runner");
    return std::make_unique<FileReplayRunner>(replay_dir);
  }
  if (kind == "head") {
    const StrategySpec spec = parse_strategy(cfg.strategy, cfg.channels);
    const HeadGraph graph = build_head(spec, cfg.num_landmarks);
    HeadWeights weights = weights_dir.empty() ? make_random_weights(graph, cfg.seed)
                                              : load_weights(graph, weights_dir);
    return std::make_unique<HeadRunner>(graph, std::move(weights), cfg);
  }
  throw ParseError("unknown runner kind: " + kind);
}

int cmd_infer(const fs::path& manifest_path, const std::string& runner_kind,
              const fs::path& replay_dir, const fs::path& weights_dir, const fs::path& out_dir,
              const PipelineConfig& cfg) {
  const AlignManifest manifest = read_manifest(manifest_path);
  auto runner = make_runner(runner_kind, replay_dir, weights_dir, cfg);
  const auto predictions = predict_dataset(manifest, *runner, cfg);
  fs::create_directories(out_dir);
  for (const auto& [stem, lmk] : predictions)
    write_landmarks_json(lmk, out_dir / (stem + ".json"));
  std::cout << "wrote " << predictions.size() << " prediction(s)\n";
  return 0;
}

int cmd_eval(const fs::path& manifest_path, const std::string& runner_kind,
             const fs::path& replay_dir, const fs::path& weights_dir,
             const fs::path& predictions_dir, const fs::path& report_path,
             const fs::path& ced_path, const PipelineConfig& cfg) {
  const AlignManifest manifest = read_manifest(manifest_path);

  MetricsReport report;
  if (!predictions_dir.empty()) {
    if (manifest.entries.empty()) throw EmptyInput("empty aligned dataset");
    std::vector<double> nmes;
    for (const auto& entry : manifest.entries) {
      const fs::path pred_path = predictions_dir / (entry.stem + ".json");
      if (!fs::exists(pred_path) || entry.original_landmarks.empty()) {
        nmes.push_back(std::numeric_limits<double>::infinity());
        continue;
      }
      GroundTruthRecord gt;
      gt.landmarks = read_landmarks_json(entry.original_landmarks);
      gt.bbox = entry.bbox;
      nmes.push_back(nme(read_landmarks_json(pred_path), gt));
    }
    report = compute_metrics(nmes);
  } else {
    auto runner = make_runner(runner_kind, replay_dir, weights_dir, cfg);
    report = end_to_end_eval(manifest, *runner, cfg);
  }

  std::cout << "images: " << report.per_image_nme.size() << "\n"
            << "mean NME: " << report.mean_nme << "\n"
            << "AUC@0.08: " << report.auc << "\n"
            << "failure rate: " << report.failure_rate << "\n";
  if (!report_path.empty()) write_metrics_json(report, report_path);
  if (!ced_path.empty()) write_ced_csv(report.ced, ced_path);
  return 0;
}

int cmd_ced_plot(const fs::path& ced_path, const fs::path& out) {
  write_ced_svg(read_ced_csv(ced_path), out);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Face landmark localization pipeline: alignment, heatmap codec, "
               "upsampling-head planning, augmentation and evaluation"};
  app.require_subcommand(1);

  fs::path config_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  app.add_option("--config", config_path, "pipeline config JSON");
  app.add_option("--seed", seed, "global seed");
  app.add_option("--jobs", jobs, "worker threads for per-image work");

  // align
  auto* align = app.add_subcommand("align", "align a dataset with detector landmarks");
  fs::path al_images, al_dets, al_annos, al_template, al_out;
  align->add_option("--images", al_images, "directory of .ppm/.pgm images")->required();
  align->add_option("--detections", al_dets, "detector output JSON")->required();
  align->add_option("--annotations", al_annos, "ground truth directory (.txt or .json)");
  align->add_option("--template", al_template, "reference template (5-point landmark file)");
  align->add_option("--out", al_out, "output dataset directory")->required();

  // encode
  auto* enc = app.add_subcommand("encode", "encode landmarks into a Gaussian heatmap stack");
  fs::path en_lmk, en_out;
  int en_h = 96, en_w = 96;
  double en_sigma = 1.5, en_stride = 1.0;
  bool en_norm = false;
  enc->add_option("--landmarks", en_lmk, "heatmap-frame landmarks (.csv/.json/.txt)")
      ->required();
  enc->add_option("--height", en_h, "heatmap height");
  enc->add_option("--width", en_w, "heatmap width");
  enc->add_option("--sigma", en_sigma, "Gaussian sigma in heatmap pixels");
  enc->add_option("--stride", en_stride, "input-to-heatmap stride metadata");
  enc->add_flag("--normalized", en_norm, "density amplitude instead of peak-one");
  enc->add_option("--out", en_out, "output .hms file")->required();

  // decode
  auto* dec = app.add_subcommand("decode", "decode a heatmap stack to sub-pixel landmarks");
  fs::path de_stack, de_out;
  std::string de_method = "gaussian";
  double de_coeff = 0.25, de_sigma = 1.5;
  dec->add_option("--stack", de_stack, "input .hms file")->required();
  dec->add_option("--method", de_method, "argmax | gradient | gaussian");
  dec->add_option("--coeff", de_coeff, "gradient correction coefficient");
  dec->add_option("--sigma", de_sigma, "Gaussian prior sigma");
  dec->add_option("--out", de_out, "output landmarks (.csv or .json)")->required();

  // augment
  auto* aug = app.add_subcommand("augment", "preview the augmentation suite on one image");
  fs::path ag_img, ag_lmk, ag_cfg, ag_out, ag_out_lmk;
  aug->add_option("--image", ag_img, "input .ppm image")->required();
  aug->add_option("--landmarks", ag_lmk, "landmarks to transform alongside");
  aug->add_option("--config", ag_cfg, "augmentation config JSON");
  aug->add_option("--out", ag_out, "output image")->required();
  aug->add_option("--out-landmarks", ag_out_lmk, "output landmarks JSON");

  // plan
  auto* plan = app.add_subcommand("plan", "cost-model upsampling head strategies");
  std::string pl_strategies, pl_backbone = "320x6x6", pl_report = "csv";
  int pl_channels = 256, pl_landmarks = 106, pl_deconv_k = 4, pl_shuffle_k = 3, pl_mpf = 1;
  double pl_backbone_flops = 0.0;
  fs::path pl_out;
  plan->add_option("--strategies", pl_strategies, "comma-separated S/D strings")->required();
  plan->add_option("--channels", pl_channels, "filters per stage");
  plan->add_option("--backbone", pl_backbone, "backbone output shape CxHxW");
  plan->add_option("--landmarks", pl_landmarks, "heatmap channels");
  plan->add_option("--deconv-kernel", pl_deconv_k, "deconvolution kernel (even)");
  plan->add_option("--shuffle-kernel", pl_shuffle_k, "shuffle-block conv kernel (odd)");
  plan->add_option("--macs-per-flop", pl_mpf, "1 or 2");
  plan->add_option("--backbone-flops", pl_backbone_flops, "fixed backbone FLOPs term");
  plan->add_option("--report", pl_report, "csv | json");
  plan->add_option("--out", pl_out, "report file ('-' for stdout)");

  // infer
  auto* infer = app.add_subcommand("infer", "predict original-frame landmarks");
  fs::path in_manifest, in_replay, in_weights, in_out;
  std::string in_runner = "replay";
  infer->add_option("--manifest", in_manifest, "aligned dataset manifest")->required();
  infer->add_option("--runner", in_runner, "replay | head");
  infer->add_option("--replay-dir", in_replay, "precomputed .hms directory");
  infer->add_option("--weights", in_weights, "head weights directory");
  infer->add_option("--out", in_out, "predictions output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions with NME/CED/AUC");
  fs::path ev_manifest, ev_replay, ev_weights, ev_preds, ev_report, ev_ced;
  std::string ev_runner = "replay";
  eval->add_option("--manifest", ev_manifest, "aligned dataset manifest")->required();
  eval->add_option("--runner", ev_runner, "replay | head");
  eval->add_option("--replay-dir", ev_replay, "precomputed .hms directory");
  eval->add_option("--weights", ev_weights, "head weights directory");
  eval->add_option("--predictions", ev_preds, "score stored predictions instead of running");
  eval->add_option("--report", ev_report, "metrics JSON output");
  eval->add_option("--ced", ev_ced, "CED CSV output");

  // ced-plot
  auto* plot = app.add_subcommand("ced-plot", "render a CED CSV as an SVG polyline");
  fs::path cp_ced, cp_out;
  plot->add_option("--ced", cp_ced, "CED CSV input")->required();
  plot->add_option("--out", cp_out, "SVG output")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const PipelineConfig cfg = config_from(config_path, seed, jobs);
    if (*align) return cmd_align(al_images, al_dets, al_annos, al_template, al_out, cfg);
    if (*enc) return cmd_encode(en_lmk, en_h, en_w, en_sigma, en_norm, en_stride, en_out);
    if (*dec) return cmd_decode(de_stack, de_method, de_coeff, de_sigma, de_out);
    if (*aug) return cmd_augment(ag_img, ag_lmk, ag_cfg, cfg.seed, ag_out, ag_out_lmk);
    if (*plan)
      return cmd_plan(pl_strategies, pl_channels, pl_backbone, pl_landmarks, pl_deconv_k,
                      pl_shuffle_k, pl_mpf, pl_backbone_flops, pl_report, pl_out);
    if (*infer) return cmd_infer(in_manifest, in_runner, in_replay, in_weights, in_out, cfg);
    if (*eval)
      return cmd_eval(ev_manifest, ev_runner, ev_replay, ev_weights, ev_preds, ev_report,
                      ev_ced, cfg);
    if (*plot) return cmd_ced_plot(cp_ced, cp_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

} // namespace lmkit
