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
#include <vector>

#include "lmkit/geometry.hpp"

namespace lmkit {

/// Per-channel Gaussian response maps, one channel per landmark.
///
/// Values are kept in double precision in memory; the HMS1 wire format
/// stores float32 (lossy write, documented).
struct HeatmapStack {
  int channels = 0;
  int height = 0;
  int width = 0;
  double stride = 1.0; // input-image size / heatmap size
  std::vector<double> values; // channel-major, row-major within a channel
  std::vector<std::uint8_t> truncated; // per-channel: landmark was outside the frame

  HeatmapStack() = default;
  HeatmapStack(int k, int h, int w, double s = 1.0)
      : channels(k), height(h), width(w), stride(s),
        values(static_cast<std::size_t>(k) * h * w, 0.0),
        truncated(static_cast<std::size_t>(k), 0) {}

  double& at(int k, int x, int y) {
    return values[(static_cast<std::size_t>(k) * height + y) * width + x];
  }
  double at(int k, int x, int y) const {
    return values[(static_cast<std::size_t>(k) * height + y) * width + x];
  }
};

struct GaussianParams {
  enum class Amplitude {
    PeakOne,    // value 1 at the continuous center
    Normalized, // 1 / (2 pi sigma^2), the bivariate density amplitude
  };

  double sigma = 1.5; // heatmap pixels
  Amplitude amplitude = Amplitude::PeakOne;
};

struct DecodedPoint {
  enum class Flag : std::uint8_t {
    None = 0,
    BorderFallback,  // argmax too close to the border for the requested decoder
    HessianFallback, // singular log-Hessian, fell back to the gradient decode
  };

  double x = 0.0; // heatmap-frame sub-pixel coordinates
  double y = 0.0;
  double score = 0.0; // peak value of the channel
  Flag flag = Flag::None;
};

/// Renders one Gaussian channel per landmark on the integer grid.
/// Landmark coordinates must already be in the heatmap frame. Landmarks
/// outside the frame are not an error; the channel is truncated and flagged.
HeatmapStack encode(const Landmarks& landmarks, int height, int width,
                    const GaussianParams& params, double stride = 1.0);

/// Integer-grid maximum per channel; ties break to the smallest row-major
/// index, so an all-zero channel decodes to (0, 0) with score 0.
std::vector<DecodedPoint> decode_argmax(const HeatmapStack& stack);

/// Argmax shifted by `coeff` along the sign of the central-difference
/// gradient, per axis. Border argmaxes fall back to the plain argmax.
std::vector<DecodedPoint> decode_gradient(const HeatmapStack& stack, double coeff = 0.25);

/// Distribution-aware decode: one Newton step on the log-heatmap over the
/// 3x3 window at the argmax (exact for sampled Gaussians). Values are
/// floored at 1e-10 before the log; the correction is clamped to 1 px.
/// Falls back to the gradient decode on border argmaxes or a singular
/// Hessian, with the corresponding flag set.
std::vector<DecodedPoint> decode_gaussian_fit(const HeatmapStack& stack,
                                              const GaussianParams& params);

/// Scales heatmap coordinates by the stack stride, then applies the inverse
/// of the alignment transform to land in the original image frame.
Landmarks to_image_frame(const std::vector<DecodedPoint>& points, double stack_stride,
                         const SimilarityTransform& align);
Landmarks to_image_frame(const Landmarks& points, double stack_stride,
                         const SimilarityTransform& align);

/// HMS1 container: magic "HMS1", then u32 K, H, W (little-endian), then
/// K*H*W float32 values row-major per channel.
void write_hms(const HeatmapStack& stack, const std::filesystem::path& path);
HeatmapStack read_hms(const std::filesystem::path& path);

} // namespace lmkit
