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
#include "lmkit/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "lmkit/errors.hpp"
#include "lmkit/rng.hpp"

namespace lmkit {

namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

/// Runs fn(i) for i in [0, count) on cfg.jobs workers. Work items only read
/// shared inputs and write disjoint slots, so scheduling cannot change results.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, jobs);
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Runner outputs must be K x heatmap-size^2 regardless of where they came
// from (head execution or replay files).
void check_stack(const HeatmapStack& stack, const PipelineConfig& cfg) {
  if (stack.channels != cfg.num_landmarks || stack.height != cfg.heatmap_size ||
      stack.width != cfg.heatmap_size)
    throw ShapeMismatch("runner returned a stack of the wrong shape");
}

std::vector<DecodedPoint> decode_stack(const HeatmapStack& stack, const PipelineConfig& cfg) {
  check_stack(stack, cfg);
  switch (cfg.decoder) {
    case DecoderKind::Argmax:
      return decode_argmax(stack);
    case DecoderKind::Gradient:
      return decode_gradient(stack, cfg.gradient_coeff);
    case DecoderKind::GaussianFit:
      return decode_gaussian_fit(stack, cfg.gaussian);
  }
  throw Error("unknown decoder");
}

Landmarks points_to_landmarks(const std::vector<DecodedPoint>& pts) {
  Landmarks out;
  out.points.reserve(pts.size());
  for (const auto& p : pts) out.points.push_back({p.x, p.y});
  return out;
}

/// Mirrors heatmap-frame coordinates through the aligned-image mirror axis:
/// x_img -> (W_img - 1) - x_img, expressed at heatmap scale.
double unflip_x(double x_hm, const PipelineConfig& cfg) {
  return static_cast<double>(cfg.input_size - 1) / cfg.stride() - x_hm;
}

FlipMap flip_map_for(const PipelineConfig& cfg, int count) {
  if (!cfg.flip_map_path.empty()) {
    FlipMap m = load_flip_map(cfg.flip_map_path);
    if (m.size() != count) throw BadFlipMap("flip map size does not match landmark count");
    return m;
  }
  if (count == 5) return FlipMap::five_point();
  return FlipMap::identity(count);
}

} // namespace

void PipelineConfig::validate() const {
  if (input_size <= 0 || heatmap_size <= 0 || input_size % heatmap_size != 0)
    throw InvalidSize("input size must be heatmap size times a positive integer stride");
  if (num_landmarks < 1) throw InvalidSize("need at least one landmark");
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  const json j = load_json(path);
  PipelineConfig cfg;
  cfg.input_size = j.value("input_size", cfg.input_size);
  cfg.heatmap_size = j.value("heatmap_size", cfg.heatmap_size);
  cfg.gaussian.sigma = j.value("sigma", cfg.gaussian.sigma);
  if (j.value("normalized_amplitude", false))
    cfg.gaussian.amplitude = GaussianParams::Amplitude::Normalized;
  cfg.gradient_coeff = j.value("gradient_coeff", cfg.gradient_coeff);
  const std::string dec = j.value("decoder", std::string("gaussian"));
  if (dec == "argmax")
    cfg.decoder = DecoderKind::Argmax;
  else if (dec == "gradient")
    cfg.decoder = DecoderKind::Gradient;
  else if (dec == "gaussian")
    cfg.decoder = DecoderKind::GaussianFit;
  else
    throw ParseError("unknown decoder '" + dec + "' in " + path.string());
  cfg.strategy = j.value("strategy", cfg.strategy);
  cfg.channels = j.value("channels", cfg.channels);
  cfg.num_landmarks = j.value("num_landmarks", cfg.num_landmarks);
  cfg.template_path = j.value("template", std::string());
  cfg.flip_map_path = j.value("flip_map", std::string());
  cfg.seed = j.value("seed", cfg.seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.use_tta = j.value("tta", cfg.use_tta);
  cfg.tta_stack_average = j.value("tta_stack_average", cfg.tta_stack_average);
  if (j.contains("naive_order")) {
    const auto& arr = j.at("naive_order");
    if (!arr.is_array() || arr.size() != 5)
      throw ParseError("naive_order must list 5 indices in " + path.string());
    for (int i = 0; i < 5; ++i) cfg.naive_order[i] = arr[i].get<int>();
  }
  cfg.validate();
  return cfg;
}

HeatmapStack stack_from_tensor(const Tensor& tensor, double stride) {
  HeatmapStack stack(tensor.c, tensor.h, tensor.w, stride);
  for (std::size_t i = 0; i < tensor.data.size(); ++i) stack.values[i] = tensor.data[i];
  return stack;
}

HeadRunner::HeadRunner(const HeadGraph& graph, HeadWeights weights, const PipelineConfig& cfg)
    : graph_(graph), weights_(std::move(weights)), cfg_(cfg) {
  if (graph_.output_shape.h != cfg.heatmap_size || graph_.output_shape.w != cfg.heatmap_size)
    throw ShapeMismatch("head output does not match the configured heatmap size");
  if (graph_.output_shape.c != cfg.num_landmarks)
    throw ShapeMismatch("head output channels do not match the landmark count");
}

HeatmapStack HeadRunner::run(const Image& aligned, const std::string&, bool) {
  // Synthetic backbone stand-in: average-pool the gray image onto the
  // backbone grid and broadcast over the feature channels.
  const Shape3 in = graph_.input_shape;
  Tensor feat(in.c, in.h, in.w);
  const int cell_h = std::max(1, aligned.height / in.h);
  const int cell_w = std::max(1, aligned.width / in.w);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double acc = 0.0;
      int count = 0;
      for (int dy = 0; dy < cell_h; ++dy) {
        for (int dx = 0; dx < cell_w; ++dx) {
          const int sy = y * cell_h + dy, sx = x * cell_w + dx;
          if (sy >= aligned.height || sx >= aligned.width) continue;
          for (int c = 0; c < aligned.channels; ++c) acc += aligned.at(sx, sy, c);
          count += aligned.channels;
        }
      }
      const float v = count > 0 ? static_cast<float>(acc / (255.0 * count)) : 0.0f;
      for (int c = 0; c < in.c; ++c) feat.at(c, y, x) = v;
    }
  }

  const Tensor out = run_head(graph_, weights_, feat);
  return stack_from_tensor(out, static_cast<double>(cfg_.stride()));
}

FileReplayRunner::FileReplayRunner(std::filesystem::path dir) : dir_(std::move(dir)) {}

HeatmapStack FileReplayRunner::run(const Image&, const std::string& stem, bool flipped) {
  const auto path = dir_ / (stem + (flipped ? ".flip.hms" : ".hms"));
  return read_hms(path);
}

AlignManifest align_dataset(const std::vector<DatasetItem>& items,
                            const std::vector<DetectorOutput>& detections,
                            const ReferenceTemplate& tmpl, const std::filesystem::path& out_dir,
                            const PipelineConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "aligned");
  fs::create_directories(out_dir / "transforms");
  fs::create_directories(out_dir / "landmarks");

  std::unordered_map<std::string, const DetectorOutput*> by_stem;
  for (const auto& det : detections) by_stem[det.image] = &det;

  const ReferenceTemplate target = tmpl.scaled_to(static_cast<double>(cfg.input_size));

  AlignManifest manifest;
  manifest.input_size = cfg.input_size;
  manifest.heatmap_size = cfg.heatmap_size;
  manifest.entries.resize(items.size());
  std::vector<std::uint8_t> ok(items.size(), 0);

  parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
    const auto& item = items[i];
    const auto it = by_stem.find(item.stem);
    if (it == by_stem.end()) return; // skipped, recorded below

    const DetectorOutput& det = *it->second;
    SimilarityTransform t;
    try {
      t = estimate_similarity(det.naive, target.points);
    } catch (const Error&) {
      return; // degenerate detection: skipped like a missing one
    }
    const Image aligned = warp_image(item.image, t, cfg.input_size, cfg.input_size);

    AlignEntry entry;
    entry.stem = item.stem;
    entry.aligned_image = out_dir / "aligned" / (item.stem + ".ppm");
    entry.transform = out_dir / "transforms" / (item.stem + ".json");
    entry.inverse_transform = out_dir / "transforms" / (item.stem + ".inverse.json");
    entry.bbox = det.bbox;
    write_ppm(aligned, entry.aligned_image);
    write_transform_json(t, entry.transform);
    write_transform_json(t.inverse(), entry.inverse_transform);

    if (item.ground_truth) {
      entry.aligned_landmarks = out_dir / "landmarks" / (item.stem + ".aligned.json");
      entry.original_landmarks = out_dir / "landmarks" / (item.stem + ".json");
      write_landmarks_json(apply_points(t, item.ground_truth->landmarks),
                           entry.aligned_landmarks);
      write_landmarks_json(item.ground_truth->landmarks, entry.original_landmarks);
      if (item.ground_truth->bbox.w > 0.0 && item.ground_truth->bbox.h > 0.0)
        entry.bbox = item.ground_truth->bbox;
    }
    manifest.entries[i] = std::move(entry);
    ok[i] = 1;
  });

  AlignManifest out;
  out.input_size = manifest.input_size;
  out.heatmap_size = manifest.heatmap_size;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (ok[i])
      out.entries.push_back(std::move(manifest.entries[i]));
    else
      out.skipped.push_back(items[i].stem);
  }
  return out;
}

void write_manifest(const AlignManifest& manifest, const std::filesystem::path& path) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"stem", e.stem},
                       {"aligned_image", e.aligned_image.string()},
                       {"transform", e.transform.string()},
                       {"inverse_transform", e.inverse_transform.string()},
                       {"aligned_landmarks", e.aligned_landmarks.string()},
                       {"original_landmarks", e.original_landmarks.string()},
                       {"bbox", {e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h}}});
  }
  const json j{{"input_size", manifest.input_size},
               {"heatmap_size", manifest.heatmap_size},
               {"entries", std::move(entries)},
               {"skipped", manifest.skipped}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

AlignManifest read_manifest(const std::filesystem::path& path) {
  const json j = load_json(path);
  AlignManifest m;
  m.input_size = j.at("input_size").get<int>();
  m.heatmap_size = j.at("heatmap_size").get<int>();
  for (const auto& e : j.at("entries")) {
    AlignEntry entry;
    entry.stem = e.at("stem").get<std::string>();
    entry.aligned_image = e.at("aligned_image").get<std::string>();
    entry.transform = e.at("transform").get<std::string>();
    entry.inverse_transform = e.value("inverse_transform", std::string());
    entry.aligned_landmarks = e.value("aligned_landmarks", std::string());
    entry.original_landmarks = e.value("original_landmarks", std::string());
    const auto& b = e.at("bbox");
    entry.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                  b[3].get<double>()};
    m.entries.push_back(std::move(entry));
  }
  for (const auto& s : j.value("skipped", std::vector<std::string>{}))
    m.skipped.push_back(s);
  return m;
}

Landmarks predict_single(ModelRunner& runner, const Image& aligned_img,
                         const std::string& stem, const PipelineConfig& cfg) {
  const HeatmapStack stack = runner.run(aligned_img, stem, false);
  return points_to_landmarks(decode_stack(stack, cfg));
}

Landmarks tta_predict(ModelRunner& runner, const Image& aligned_img, const std::string& stem,
                      const FlipMap& flip_map, const PipelineConfig& cfg) {
  const HeatmapStack direct = runner.run(aligned_img, stem, false);
  const Image mirrored = hflip_image(aligned_img);
  const HeatmapStack flipped = runner.run(mirrored, stem, true);
  check_stack(direct, cfg);
  check_stack(flipped, cfg);
  if (flip_map.size() != direct.channels)
    throw BadFlipMap("flip map size does not match heatmap channels");
  flip_map.validate();

  if (cfg.tta_stack_average) {
    // Heatmap-stacking variant: mirror the flipped stack back onto the direct
    // grid, remap channels, average, decode once.
    HeatmapStack avg(direct.channels, direct.height, direct.width, direct.stride);
    for (int k = 0; k < direct.channels; ++k) {
      const int src = flip_map.map[k];
      for (int y = 0; y < direct.height; ++y)
        for (int x = 0; x < direct.width; ++x)
          avg.at(k, x, y) =
              0.5 * (direct.at(k, x, y) + flipped.at(src, direct.width - 1 - x, y));
    }
    return points_to_landmarks(decode_stack(avg, cfg));
  }

  const Landmarks p1 = points_to_landmarks(decode_stack(direct, cfg));
  const Landmarks p2 = points_to_landmarks(decode_stack(flipped, cfg));

  Landmarks out;
  out.points.resize(p1.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const Point2& mirrored_pt = p2[static_cast<std::size_t>(flip_map.map[i])];
    const Point2 unflipped{unflip_x(mirrored_pt.x, cfg), mirrored_pt.y};
    out.points[i] = {0.5 * (p1[i].x + unflipped.x), 0.5 * (p1[i].y + unflipped.y)};
  }
  return out;
}

std::vector<std::pair<std::string, Landmarks>> predict_dataset(const AlignManifest& manifest,
                                                               ModelRunner& runner,
                                                               const PipelineConfig& cfg) {
  if (manifest.entries.empty()) throw EmptyInput("empty aligned dataset");
  cfg.validate();

  std::vector<std::pair<std::string, Landmarks>> out(manifest.entries.size());
  const FlipMap flip_map = flip_map_for(cfg, cfg.num_landmarks);

  parallel_for(manifest.entries.size(), cfg.jobs, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    const Image aligned = read_ppm(entry.aligned_image);
    const SimilarityTransform t = read_transform_json(entry.transform);
    const Landmarks hm = cfg.use_tta
                             ? tta_predict(runner, aligned, entry.stem, flip_map, cfg)
                             : predict_single(runner, aligned, entry.stem, cfg);
    out[i] = {entry.stem, to_image_frame(hm, static_cast<double>(cfg.stride()), t)};
  });
  return out;
}

MetricsReport end_to_end_eval(const AlignManifest& manifest, ModelRunner& runner,
                              const PipelineConfig& cfg) {
  if (manifest.entries.empty()) throw EmptyInput("empty aligned dataset");
  cfg.validate();

  std::vector<double> nmes(manifest.entries.size(),
                           std::numeric_limits<double>::infinity());
  const FlipMap flip_map = flip_map_for(cfg, cfg.num_landmarks);

  parallel_for(manifest.entries.size(), cfg.jobs, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    if (entry.original_landmarks.empty()) return; // no ground truth: scored as failure
    try {
      const Image aligned = read_ppm(entry.aligned_image);
      const SimilarityTransform t = read_transform_json(entry.transform);
      const Landmarks hm = cfg.use_tta
                               ? tta_predict(runner, aligned, entry.stem, flip_map, cfg)
                               : predict_single(runner, aligned, entry.stem, cfg);
      const Landmarks pred = to_image_frame(hm, static_cast<double>(cfg.stride()), t);

      GroundTruthRecord gt;
      gt.landmarks = read_landmarks_json(entry.original_landmarks);
      gt.bbox = entry.bbox;
      nmes[i] = nme(pred, gt);
    } catch (const IoError&) {
      // missing prediction inputs count as a failed image
    }
  });

  return compute_metrics(nmes);
}

} // namespace lmkit
