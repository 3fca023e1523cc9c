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

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "lmkit/geometry.hpp"
#include "lmkit/image.hpp"

namespace lmkit {

/// Left/right landmark pairing for horizontal flips. Must be an involution;
/// midline points map to themselves.
struct FlipMap {
  std::vector<int> map;

  static FlipMap identity(int count);
  /// (left eye, right eye, nose, left mouth, right mouth) pairing.
  static FlipMap five_point();

  int size() const { return static_cast<int>(map.size()); }
  /// Throws BadFlipMap if out of range or not an involution.
  void validate() const;
};

/// Text format: K lines, line i holds the target index.
FlipMap load_flip_map(const std::filesystem::path& path);
void save_flip_map(const FlipMap& map, const std::filesystem::path& path);

/// Mirrors pixels (x -> W-1-x) and remaps landmark identities through the
/// flip map.
std::pair<Image, Landmarks> hflip(const Image& img, const Landmarks& lmk,
                                  const FlipMap& map);
Image hflip_image(const Image& img);

/// Range magnitudes for the rigid jitter; sampling is uniform over the
/// symmetric interval for each enabled component.
struct JitterRanges {
  double rotation_deg = 0.0; // theta ~ U(-r, r)
  double scale_delta = 0.0;  // s ~ U(1-d, 1+d)
  double shift_px = 0.0;     // dx, dy ~ U(-s, s)
  bool rotation_enabled = false;
  bool scale_enabled = false;
  bool shift_enabled = false;

  /// Checks enabled ranges against the documented bounds: rotation 1-15 deg,
  /// scale delta 0.05-0.2, shift 5-20 px. Direct construction is not
  /// validated so tests can use out-of-range values.
  void validate() const;
};

struct RigidResult {
  Image image;
  Landmarks landmarks;
  SimilarityTransform transform; // exactly reproduces the landmark mapping
};

/// Scale/rotation about the pixel center of a width x height frame, followed
/// by a (dx, dy) shift. Direct entry point for fixed jitter values.
SimilarityTransform rigid_about_center(int width, int height, double scale,
                                       double angle_rad, double dx, double dy);

/// Random rotation / scale / shift about the image center; the same
/// similarity transform is applied to the image and the landmarks.
RigidResult random_rigid(const Image& img, const Landmarks& lmk, const JitterRanges& ranges,
                         std::uint64_t seed);

struct EraseParams {
  enum class Fill : std::uint8_t { UniformNoise, Mean };

  double probability = 0.5;
  std::array<double, 2> area_fraction{0.02, 0.4};
  std::array<double, 2> aspect_ratio{0.3, 1.0 / 0.3};
  Fill fill = Fill::UniformNoise;
};

/// With the given probability, overwrites one rectangle (sampled area and
/// aspect, fully inside the image) with noise or the image mean.
Image random_erase(const Image& img, const EraseParams& params, std::uint64_t seed);

/// RGB eigen-decomposition used by the PCA color shift. Defaults are the
/// published natural-image statistics on the [0, 255] scale.
struct PcaEigen {
  std::array<double, 3> eigenvalues;
  std::array<std::array<double, 3>, 3> eigenvectors; // [channel][component]

  static PcaEigen natural_images();
};

/// Adds sum_i alpha_i * lambda_i * v_i to every pixel, alpha ~ N(0, sigma^2),
/// then clamps.
Image pca_color(const Image& img, const PcaEigen& eigen, double sigma, std::uint64_t seed);
/// Deterministic variant with injected alphas (test / preview hook).
Image pca_color_shift(const Image& img, const PcaEigen& eigen,
                      const std::array<double, 3>& alphas);

/// Brightness, contrast and saturation each scaled by an independent factor
/// in [1-strength, 1+strength], applied in that order, single final clamp.
Image color_jitter(const Image& img, double strength, std::uint64_t seed);
Image color_jitter_with_factors(const Image& img, double brightness, double contrast,
                                double saturation);

} // namespace lmkit
