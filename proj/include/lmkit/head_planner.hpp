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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lmkit/tensor.hpp"

namespace lmkit {

struct Shape3 {
  int c = 0;
  int h = 0;
  int w = 0;

  std::uint64_t elements() const {
    return static_cast<std::uint64_t>(c) * h * w;
  }
  bool operator==(const Shape3&) const = default;
};

enum class StageKind : std::uint8_t {
  Shuffle, // S: conv + BN + ReLU + pixel shuffle (r = 2)
  Deconv,  // D: deconv (stride 2) + BN + ReLU
};

/// Parsed upsampling strategy. Every stage doubles the spatial size, so the
/// output is backbone spatial * 2^len regardless of the S/D mix.
struct StrategySpec {
  std::vector<StageKind> stages;
  int channels = 256;                // filters per stage
  Shape3 backbone_out{320, 6, 6};    // width-0.25 backbone at 192 input

  std::string text() const;
};

/// Cost-model knobs. The deconv kernel defaults to 4 (pad 1, exact spatial
/// doubling), calibrated so analytic head costs rank-match the reference
/// measurements; both kernels and the FLOPs convention stay configurable.
struct CostModelConfig {
  int deconv_kernel = 4;       // even, stride 2, pad (k-2)/2
  int shuffle_conv_kernel = 3; // odd, stride 1, pad k/2
  int macs_per_flop = 1;       // 1: FLOPs = MACs, 2: count mul and add separately
  bool count_elementwise = false;
  double backbone_flops = 0.0; // fixed additive term, backbone not executed
};

enum class LayerKind : std::uint8_t { Conv, Deconv, BatchNorm, ReLU, PixelShuffle };

struct LayerSpec {
  LayerKind kind;
  Shape3 in_shape;
  Shape3 out_shape;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  int shuffle_r = 0;
  bool has_bias = false;
  int stage = -1; // strategy stage index; -1 for the trailing heatmap conv

  std::uint64_t macs() const;
  std::uint64_t elementwise_ops() const;
  std::uint64_t param_count() const;
};

/// Concrete executable head: backbone feature map in, heatmaps out.
struct HeadGraph {
  StrategySpec spec;
  CostModelConfig config;
  int num_landmarks = 0;
  std::vector<LayerSpec> layers;
  Shape3 input_shape;
  Shape3 output_shape;
};

struct StageCost {
  std::string label; // "S1", "D2", ... or "out" for the trailing conv
  std::uint64_t macs = 0;
  double flops = 0.0;
  std::uint64_t params = 0;
};

struct CostReport {
  std::string strategy;
  std::vector<StageCost> stages;
  std::uint64_t total_macs = 0;
  double total_flops = 0.0; // macs * macs_per_flop (+ elementwise if enabled) + backbone
  std::uint64_t total_params = 0;
  double param_mb = 0.0;                 // 4 bytes per parameter
  std::uint64_t peak_activation_elements = 0;
  Shape3 output_shape;
};

/// Parses an S/D stage string, case-insensitive. Throws InvalidStrategy on
/// an empty string, more than 6 stages, or any other character.
StrategySpec parse_strategy(const std::string& text, int channels = 256,
                            Shape3 backbone_out = {320, 6, 6});

/// Expands a strategy into a concrete layer graph.
///
/// D stage: deconv(k = deconv_kernel, stride 2, spec.channels) + BN + ReLU.
/// S stage: conv(k = shuffle_conv_kernel, spec.channels) + BN + ReLU +
///          pixel_shuffle(2), so it hands channels/4 to the next stage.
/// A final D stage is followed by a 1x1 conv with num_landmarks filters; a
/// final S stage's conv emits 4*num_landmarks channels so the shuffle yields
/// the heatmaps directly. An empty stage list degenerates to the 1x1 conv.
HeadGraph build_head(const StrategySpec& spec, int num_landmarks,
                     const CostModelConfig& config = {});

/// Closed-form FLOPs / parameter / activation accounting over the graph.
CostReport estimate_cost(const HeadGraph& graph, const CostModelConfig& config);

/// Per-layer weights, parallel to HeadGraph::layers.
struct HeadWeights {
  struct Layer {
    Tensor4 kernel;                       // conv / deconv only
    std::vector<float> bias;              // conv with has_bias only
    std::vector<float> gamma, beta, mean, var; // batch norm only
  };
  std::vector<Layer> layers;
};

/// Deterministic fan-in-scaled uniform init.
HeadWeights make_random_weights(const HeadGraph& graph, std::uint64_t seed);
/// Zero conv/deconv kernels, identity-stat batch norms.
HeadWeights make_zero_weights(const HeadGraph& graph);

void save_weights(const HeadWeights& weights, const std::filesystem::path& dir);
HeadWeights load_weights(const HeadGraph& graph, const std::filesystem::path& dir);

/// Deterministic forward pass with MAC counting.
Tensor run_head(const HeadGraph& graph, const HeadWeights& weights, const Tensor& input,
                OpCounter* counter = nullptr);

/// Builds and costs every strategy, ascending by total FLOPs, ties by
/// parameter size.
std::vector<CostReport> rank_strategies(const std::vector<StrategySpec>& specs,
                                        const CostModelConfig& config,
                                        int num_landmarks = 106);

} // namespace lmkit
