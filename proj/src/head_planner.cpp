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
#include "lmkit/head_planner.hpp"

#include <algorithm>
#include <cmath>

#include "lmkit/errors.hpp"
#include "lmkit/rng.hpp"

namespace lmkit {

std::string StrategySpec::text() const {
  std::string s;
  s.reserve(stages.size());
  for (const auto st : stages) s.push_back(st == StageKind::Shuffle ? 'S' : 'D');
  return s;
}

std::uint64_t LayerSpec::macs() const {
  switch (kind) {
    case LayerKind::Conv:
      return static_cast<std::uint64_t>(out_shape.c) * in_shape.c * kernel * kernel *
             out_shape.h * out_shape.w;
    case LayerKind::Deconv:
      return static_cast<std::uint64_t>(in_shape.c) * out_shape.c * kernel * kernel *
             in_shape.h * in_shape.w;
    default:
      return 0;
  }
}

std::uint64_t LayerSpec::elementwise_ops() const {
  switch (kind) {
    case LayerKind::BatchNorm:
    case LayerKind::ReLU:
      return out_shape.elements();
    case LayerKind::Conv:
      return has_bias ? out_shape.elements() : 0;
    default:
      return 0;
  }
}

std::uint64_t LayerSpec::param_count() const {
  switch (kind) {
    case LayerKind::Conv:
      return static_cast<std::uint64_t>(out_shape.c) * in_shape.c * kernel * kernel +
             (has_bias ? static_cast<std::uint64_t>(out_shape.c) : 0);
    case LayerKind::Deconv:
      return static_cast<std::uint64_t>(in_shape.c) * out_shape.c * kernel * kernel;
    case LayerKind::BatchNorm:
      return 4ULL * static_cast<std::uint64_t>(out_shape.c); // gamma, beta, mean, var
    default:
      return 0;
  }
}

StrategySpec parse_strategy(const std::string& text, int channels, Shape3 backbone_out) {
  if (text.empty()) throw InvalidStrategy("empty strategy string");
  if (text.size() > 6) throw InvalidStrategy("strategy too long (max 6 stages): " + text);

  StrategySpec spec;
  spec.channels = channels;
  spec.backbone_out = backbone_out;
  for (const char ch : text) {
    switch (ch) {
      case 'S':
      case 's':
        spec.stages.push_back(StageKind::Shuffle);
        break;
      case 'D':
      case 'd':
        spec.stages.push_back(StageKind::Deconv);
        break;
      default:
        throw InvalidStrategy("invalid stage character '" + std::string(1, ch) +
                              "' in strategy: " + text);
    }
  }
  return spec;
}

HeadGraph build_head(const StrategySpec& spec, int num_landmarks,
                     const CostModelConfig& config) {
  if (num_landmarks < 1) throw ShapeMismatch("need at least one landmark channel");
  if (spec.channels < 4 || spec.channels % 4 != 0)
    throw ShapeMismatch("stage channels must be a positive multiple of 4");
  if (config.deconv_kernel < 2 || config.deconv_kernel % 2 != 0)
    throw ShapeMismatch("deconv kernel must be even so each stage doubles exactly");
  if (config.shuffle_conv_kernel < 1 || config.shuffle_conv_kernel % 2 == 0)
    throw ShapeMismatch("shuffle conv kernel must be odd to preserve spatial size");
  if (spec.stages.size() > 6) throw InvalidStrategy("strategy too long (max 6 stages)");

  HeadGraph g;
  g.spec = spec;
  g.config = config;
  g.num_landmarks = num_landmarks;
  g.input_shape = spec.backbone_out;

  Shape3 cur = spec.backbone_out;
  const int n = static_cast<int>(spec.stages.size());

  for (int i = 0; i < n; ++i) {
    const bool last = (i == n - 1);
    if (spec.stages[i] == StageKind::Deconv) {
      const int k = config.deconv_kernel;
      LayerSpec deconv{LayerKind::Deconv, cur,
                       Shape3{spec.channels, cur.h * 2, cur.w * 2},
                       k, 2, (k - 2) / 2, 0, false, i};
      g.layers.push_back(deconv);
      cur = deconv.out_shape;
      g.layers.push_back({LayerKind::BatchNorm, cur, cur, 0, 1, 0, 0, false, i});
      g.layers.push_back({LayerKind::ReLU, cur, cur, 0, 1, 0, 0, false, i});
      if (last) {
        LayerSpec conv{LayerKind::Conv, cur, Shape3{num_landmarks, cur.h, cur.w},
                       1, 1, 0, 0, true, -1};
        g.layers.push_back(conv);
        cur = conv.out_shape;
      }
    } else {
      const int k = config.shuffle_conv_kernel;
      const int out_c = last ? 4 * num_landmarks : spec.channels;
      LayerSpec conv{LayerKind::Conv, cur, Shape3{out_c, cur.h, cur.w},
                     k, 1, k / 2, 0, false, i};
      g.layers.push_back(conv);
      cur = conv.out_shape;
      g.layers.push_back({LayerKind::BatchNorm, cur, cur, 0, 1, 0, 0, false, i});
      g.layers.push_back({LayerKind::ReLU, cur, cur, 0, 1, 0, 0, false, i});
      LayerSpec shuffle{LayerKind::PixelShuffle, cur,
                        Shape3{out_c / 4, cur.h * 2, cur.w * 2},
                        0, 1, 0, 2, false, i};
      g.layers.push_back(shuffle);
      cur = shuffle.out_shape;
    }
  }

  if (n == 0) {
    // Degenerate zero-stage head: direct 1x1 conv to the landmark maps.
    LayerSpec conv{LayerKind::Conv, cur, Shape3{num_landmarks, cur.h, cur.w},
                   1, 1, 0, 0, true, -1};
    g.layers.push_back(conv);
    cur = conv.out_shape;
  }

  g.output_shape = cur;
  return g;
}

CostReport estimate_cost(const HeadGraph& graph, const CostModelConfig& config) {
  CostReport report;
  report.strategy = graph.spec.text();
  report.output_shape = graph.output_shape;

  const int n = static_cast<int>(graph.spec.stages.size());
  std::vector<StageCost> stages(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i)
    stages[i].label = (graph.spec.stages[i] == StageKind::Shuffle ? "S" : "D") +
                      std::to_string(i + 1);
  stages.back().label = "out";

  std::uint64_t peak = graph.input_shape.elements();
  for (const auto& layer : graph.layers) {
    auto& stage = layer.stage < 0 ? stages.back() : stages[layer.stage];
    const std::uint64_t macs = layer.macs();
    stage.macs += macs;
    stage.flops += static_cast<double>(macs) * config.macs_per_flop;
    if (config.count_elementwise)
      stage.flops += static_cast<double>(layer.elementwise_ops());
    stage.params += layer.param_count();
    peak = std::max(peak, layer.out_shape.elements());
  }

  // Drop the "out" bucket when the strategy ends in S (no trailing conv).
  if (stages.back().macs == 0 && stages.back().params == 0 && n > 0)
    stages.pop_back();

  for (const auto& s : stages) {
    report.total_macs += s.macs;
    report.total_flops += s.flops;
    report.total_params += s.params;
  }
  report.total_flops += config.backbone_flops;
  report.param_mb = 4.0 * static_cast<double>(report.total_params) / 1e6;
  report.peak_activation_elements = peak;
  report.stages = std::move(stages);
  return report;
}

HeadWeights make_random_weights(const HeadGraph& graph, std::uint64_t seed) {
  HeadWeights w;
  w.layers.resize(graph.layers.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& layer = graph.layers[i];
    auto& lw = w.layers[i];
    if (layer.kind == LayerKind::Conv || layer.kind == LayerKind::Deconv) {
      const int k = layer.kernel;
      const bool is_conv = layer.kind == LayerKind::Conv;
      const int n = is_conv ? layer.out_shape.c : layer.in_shape.c;
      const int c = is_conv ? layer.in_shape.c : layer.out_shape.c;
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_shape.c) * k * k);
      lw.kernel = Tensor4(n, c, k, k);
      for (auto& v : lw.kernel.data)
        v = static_cast<float>(rng.uniform(-bound, bound));
      if (layer.has_bias) {
        lw.bias.resize(static_cast<std::size_t>(layer.out_shape.c));
        for (auto& v : lw.bias) v = static_cast<float>(rng.uniform(-bound, bound));
      }
    } else if (layer.kind == LayerKind::BatchNorm) {
      const auto c = static_cast<std::size_t>(layer.out_shape.c);
      lw.gamma.assign(c, 1.0f);
      lw.beta.assign(c, 0.0f);
      lw.mean.assign(c, 0.0f);
      lw.var.assign(c, 1.0f);
    }
  }
  return w;
}

HeadWeights make_zero_weights(const HeadGraph& graph) {
  HeadWeights w = make_random_weights(graph, 0);
  for (auto& layer : w.layers) {
    std::fill(layer.kernel.data.begin(), layer.kernel.data.end(), 0.0f);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0f);
  }
  return w;
}

void save_weights(const HeadWeights& weights, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto vec_dims = [](const std::vector<float>& v) {
    return std::vector<std::uint32_t>{static_cast<std::uint32_t>(v.size())};
  };
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const auto& lw = weights.layers[i];
    const std::string prefix = "L" + std::to_string(i) + "_";
    if (!lw.kernel.data.empty()) write_tns(lw.kernel, dir / (prefix + "kernel.tns"));
    if (!lw.bias.empty()) write_tns(vec_dims(lw.bias), lw.bias, dir / (prefix + "bias.tns"));
    if (!lw.gamma.empty()) {
      write_tns(vec_dims(lw.gamma), lw.gamma, dir / (prefix + "gamma.tns"));
      write_tns(vec_dims(lw.beta), lw.beta, dir / (prefix + "beta.tns"));
      write_tns(vec_dims(lw.mean), lw.mean, dir / (prefix + "mean.tns"));
      write_tns(vec_dims(lw.var), lw.var, dir / (prefix + "var.tns"));
    }
  }
}

HeadWeights load_weights(const HeadGraph& graph, const std::filesystem::path& dir) {
  HeadWeights w;
  w.layers.resize(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& layer = graph.layers[i];
    auto& lw = w.layers[i];
    const std::string prefix = "L" + std::to_string(i) + "_";
    if (layer.kind == LayerKind::Conv || layer.kind == LayerKind::Deconv) {
      lw.kernel = read_tns4(dir / (prefix + "kernel.tns"));
      if (layer.has_bias) lw.bias = read_tns(dir / (prefix + "bias.tns")).second;
    } else if (layer.kind == LayerKind::BatchNorm) {
      lw.gamma = read_tns(dir / (prefix + "gamma.tns")).second;
      lw.beta = read_tns(dir / (prefix + "beta.tns")).second;
      lw.mean = read_tns(dir / (prefix + "mean.tns")).second;
      lw.var = read_tns(dir / (prefix + "var.tns")).second;
    }
  }
  return w;
}

Tensor run_head(const HeadGraph& graph, const HeadWeights& weights, const Tensor& input,
                OpCounter* counter) {
  if (Shape3{input.c, input.h, input.w} != graph.input_shape)
    throw ShapeMismatch("run_head: input does not match the backbone output shape");
  if (weights.layers.size() != graph.layers.size())
    throw ShapeMismatch("run_head: weights do not match the graph");

  Tensor cur = input;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& layer = graph.layers[i];
    const auto& lw = weights.layers[i];
    switch (layer.kind) {
      case LayerKind::Conv:
        cur = conv2d(cur, lw.kernel, lw.bias, layer.stride, layer.pad, counter);
        break;
      case LayerKind::Deconv:
        cur = deconv2d(cur, lw.kernel, layer.stride, layer.pad, counter);
        break;
      case LayerKind::BatchNorm:
        cur = batchnorm_inference(cur, lw.mean, lw.var, lw.gamma, lw.beta, 1e-5, counter);
        break;
      case LayerKind::ReLU:
        cur = relu(cur, counter);
        break;
      case LayerKind::PixelShuffle:
        cur = pixel_shuffle(cur, layer.shuffle_r, counter);
        break;
    }
    if (Shape3{cur.c, cur.h, cur.w} != layer.out_shape)
      throw ShapeMismatch("run_head: layer output diverged from the planned shape");
  }
  return cur;
}

std::vector<CostReport> rank_strategies(const std::vector<StrategySpec>& specs,
                                        const CostModelConfig& config, int num_landmarks) {
  std::vector<CostReport> reports;
  reports.reserve(specs.size());
  for (const auto& spec : specs)
    reports.push_back(estimate_cost(build_head(spec, num_landmarks, config), config));
  std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    if (a.total_flops != b.total_flops) return a.total_flops < b.total_flops;
    return a.param_mb < b.param_mb;
  });
  return reports;
}

} // namespace lmkit
