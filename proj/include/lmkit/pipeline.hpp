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
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmkit/augmentation.hpp"
#include "lmkit/evaluation.hpp"
#include "lmkit/geometry.hpp"
#include "lmkit/head_planner.hpp"
#include "lmkit/heatmap.hpp"
#include "lmkit/io.hpp"

namespace lmkit {

enum class DecoderKind : std::uint8_t { Argmax, Gradient, GaussianFit };

struct PipelineConfig {
  int input_size = 192;
  int heatmap_size = 96;
  GaussianParams gaussian;                  // sigma 1.5, peak-one
  double gradient_coeff = 0.25;
  DecoderKind decoder = DecoderKind::GaussianFit;
  // four stages double a 6x6 backbone map to the default 96x96 heatmaps
  std::string strategy = "SSSD";
  int channels = 128;
  int num_landmarks = 106;
  std::filesystem::path template_path;      // empty: built-in standard template
  std::filesystem::path flip_map_path;      // empty: identity map
  std::uint64_t seed = 0;
  int jobs = 1;
  bool use_tta = true;
  bool tta_stack_average = false;           // average heatmaps instead of coordinates
  std::array<int, 5> naive_order{0, 1, 2, 3, 4};

  int stride() const { return input_size / heatmap_size; }
  /// Enforces input size = heatmap size * integer stride.
  void validate() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Wraps a (K, H, W) head output as a heatmap stack with the given stride.
HeatmapStack stack_from_tensor(const Tensor& tensor, double stride);

/// Abstract predictor mapping an aligned face crop to a heatmap stack.
/// The worker pool calls run() concurrently; implementations must not keep
/// per-call mutable state.
class ModelRunner {
public:
  virtual ~ModelRunner() = default;
  /// `flipped` marks the horizontally mirrored pass of flip TTA.
  virtual HeatmapStack run(const Image& aligned, const std::string& stem, bool flipped) = 0;
};

/// Runs a planner-built upsampling head on a fixed synthetic backbone
/// feature map derived from the image. Stands in for real backbone
/// inference; useful for exercising the full pipeline shape-to-shape.
class HeadRunner : public ModelRunner {
public:
  HeadRunner(const HeadGraph& graph, HeadWeights weights, const PipelineConfig& cfg);
  HeatmapStack run(const Image& aligned, const std::string& stem, bool flipped) override;

private:
  HeadGraph graph_;
  HeadWeights weights_;
  PipelineConfig cfg_;
};

/// Replays precomputed stacks from disk: <stem>.hms for the direct pass and
/// <stem>.flip.hms for the mirrored pass.
class FileReplayRunner : public ModelRunner {
public:
  explicit FileReplayRunner(std::filesystem::path dir);
  HeatmapStack run(const Image& aligned, const std::string& stem, bool flipped) override;

private:
  std::filesystem::path dir_;
};

struct AlignEntry {
  std::string stem;
  std::filesystem::path aligned_image;
  std::filesystem::path transform;          // original -> aligned
  std::filesystem::path inverse_transform;  // aligned -> original
  std::filesystem::path aligned_landmarks;  // empty if no ground truth
  std::filesystem::path original_landmarks; // empty if no ground truth
  BBox bbox;
};

struct AlignManifest {
  int input_size = 192;
  int heatmap_size = 96;
  std::vector<AlignEntry> entries;
  std::vector<std::string> skipped; // images without a detection
};

void write_manifest(const AlignManifest& manifest, const std::filesystem::path& path);
AlignManifest read_manifest(const std::filesystem::path& path);

struct DatasetItem {
  std::string stem;
  Image image;
  std::optional<GroundTruthRecord> ground_truth; // original-frame landmarks + bbox
};

/// Aligns every image with a detection: estimates the similarity transform
/// from the naive points to the reference template, warps to the input size
/// and persists image + transform + transformed ground truth under out_dir.
/// Images without a detection are skipped and listed in the manifest.
AlignManifest align_dataset(const std::vector<DatasetItem>& items,
                            const std::vector<DetectorOutput>& detections,
                            const ReferenceTemplate& tmpl,
                            const std::filesystem::path& out_dir,
                            const PipelineConfig& cfg);

/// Flip test-time averaging. Decodes the direct and the mirrored pass,
/// un-flips and index-remaps the mirrored result, and returns the
/// coordinate-wise mean in heatmap-frame coordinates.
Landmarks tta_predict(ModelRunner& runner, const Image& aligned_img, const std::string& stem,
                      const FlipMap& flip_map, const PipelineConfig& cfg);

/// Single decoded pass without the mirrored branch.
Landmarks predict_single(ModelRunner& runner, const Image& aligned_img,
                         const std::string& stem, const PipelineConfig& cfg);

/// Full protocol: per aligned image predict (TTA or single pass), map back
/// through the stored inverse transform, and score against the original-frame
/// ground truth. Missing predictions score as failures (NME = inf).
MetricsReport end_to_end_eval(const AlignManifest& manifest, ModelRunner& runner,
                              const PipelineConfig& cfg);

/// Prediction half of end_to_end_eval: original-frame landmarks per entry.
std::vector<std::pair<std::string, Landmarks>> predict_dataset(const AlignManifest& manifest,
                                                               ModelRunner& runner,
                                                               const PipelineConfig& cfg);

} // namespace lmkit
