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
#include "lmkit/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lmkit/errors.hpp"
#include "lmkit/rng.hpp"

namespace lmkit {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Luminance coefficients shared by the contrast and saturation steps.
double gray_of(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

} // namespace

FlipMap FlipMap::identity(int count) {
  FlipMap m;
  m.map.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) m.map[i] = i;
  return m;
}

FlipMap FlipMap::five_point() {
  // eyes swap, nose stays, mouth corners swap
  return FlipMap{{1, 0, 2, 4, 3}};
}

void FlipMap::validate() const {
  const int n = size();
  for (int i = 0; i < n; ++i) {
    const int j = map[i];
    if (j < 0 || j >= n) throw BadFlipMap("flip map index out of range");
    if (map[j] != i) throw BadFlipMap("flip map is not an involution");
  }
}

FlipMap load_flip_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open flip map: " + path.string());
  FlipMap m;
  int idx;
  while (in >> idx) m.map.push_back(idx);
  if (m.map.empty()) throw ParseError("empty flip map: " + path.string());
  m.validate();
  return m;
}

void save_flip_map(const FlipMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write flip map: " + path.string());
  for (const int i : map.map) out << i << "\n";
}

Image hflip_image(const Image& img) {
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  return out;
}

std::pair<Image, Landmarks> hflip(const Image& img, const Landmarks& lmk,
                                  const FlipMap& map) {
  if (map.size() != static_cast<int>(lmk.size()))
    throw BadFlipMap("flip map size does not match landmark count");
  map.validate();

  Landmarks out;
  out.points.resize(lmk.size());
  for (std::size_t i = 0; i < lmk.size(); ++i) {
    const Point2& src = lmk[static_cast<std::size_t>(map.map[i])];
    out.points[i] = {static_cast<double>(img.width - 1) - src.x, src.y};
  }
  return {hflip_image(img), std::move(out)};
}

void JitterRanges::validate() const {
  if (rotation_enabled && (rotation_deg < 1.0 || rotation_deg > 15.0))
    throw ParseError("rotation range must lie in [1, 15] degrees");
  if (scale_enabled && (scale_delta < 0.05 || scale_delta > 0.2))
    throw ParseError("scale delta must lie in [0.05, 0.2]");
  if (shift_enabled && (shift_px < 5.0 || shift_px > 20.0))
    throw ParseError("shift range must lie in [5, 20] pixels");
}

SimilarityTransform rigid_about_center(int width, int height, double scale,
                                       double angle_rad, double dx, double dy) {
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const SimilarityTransform rot = SimilarityTransform::from_parts(scale, angle_rad, 0.0, 0.0);
  const Point2 rc = rot.apply({cx, cy});
  return SimilarityTransform::from_parts(scale, angle_rad, cx - rc.x + dx, cy - rc.y + dy);
}

RigidResult random_rigid(const Image& img, const Landmarks& lmk, const JitterRanges& ranges,
                         std::uint64_t seed) {
  Rng rng(seed);
  const double theta = ranges.rotation_enabled
                           ? rng.uniform(-ranges.rotation_deg, ranges.rotation_deg) * kDegToRad
                           : 0.0;
  const double scale =
      ranges.scale_enabled ? 1.0 + rng.uniform(-ranges.scale_delta, ranges.scale_delta) : 1.0;
  const double dx = ranges.shift_enabled ? rng.uniform(-ranges.shift_px, ranges.shift_px) : 0.0;
  const double dy = ranges.shift_enabled ? rng.uniform(-ranges.shift_px, ranges.shift_px) : 0.0;

  const SimilarityTransform t =
      rigid_about_center(img.width, img.height, scale, theta, dx, dy);

  RigidResult result;
  result.image = warp_image(img, t, img.width, img.height);
  result.landmarks = apply_points(t, lmk);
  result.transform = t;
  return result;
}

Image random_erase(const Image& img, const EraseParams& params, std::uint64_t seed) {
  Rng rng(seed);
  if (rng.uniform01() >= params.probability) return img;

  const double total = static_cast<double>(img.width) * img.height;
  Image out = img;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double area = rng.uniform(params.area_fraction[0], params.area_fraction[1]) * total;
    const double aspect = rng.uniform(params.aspect_ratio[0], params.aspect_ratio[1]);
    const int rw = static_cast<int>(std::lround(std::sqrt(area * aspect)));
    const int rh = static_cast<int>(std::lround(std::sqrt(area / aspect)));
    if (rw < 1 || rh < 1 || rw >= img.width || rh >= img.height) continue;

    const int x0 = static_cast<int>(rng.uniform_int(0, img.width - rw));
    const int y0 = static_cast<int>(rng.uniform_int(0, img.height - rh));

    std::vector<double> mean(static_cast<std::size_t>(img.channels), 0.0);
    if (params.fill == EraseParams::Fill::Mean) {
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          for (int c = 0; c < img.channels; ++c) mean[c] += img.at(x, y, c);
      for (auto& m : mean) m /= total;
    }

    for (int y = y0; y < y0 + rh; ++y) {
      for (int x = x0; x < x0 + rw; ++x) {
        for (int c = 0; c < img.channels; ++c) {
          out.at(x, y, c) = params.fill == EraseParams::Fill::UniformNoise
                                ? static_cast<std::uint8_t>(rng.uniform_int(0, 255))
                                : clamp_u8(mean[c]);
        }
      }
    }
    break;
  }
  return out;
}

PcaEigen PcaEigen::natural_images() {
  // Published RGB statistics on the [0, 255] scale.
  PcaEigen e;
  e.eigenvalues = {55.46, 4.794, 1.148};
  e.eigenvectors = {{{-0.5675, 0.7192, 0.4009},
                     {-0.5808, -0.0045, -0.8140},
                     {-0.5836, -0.6948, 0.4203}}};
  return e;
}

Image pca_color_shift(const Image& img, const PcaEigen& eigen,
                      const std::array<double, 3>& alphas) {
  if (img.channels != 3) throw ShapeMismatch("PCA color shift needs an RGB image");
  std::array<double, 3> shift{};
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < 3; ++j)
      shift[c] += eigen.eigenvectors[c][j] * alphas[j] * eigen.eigenvalues[j];

  Image out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.data.size(); i += 3)
    for (int c = 0; c < 3; ++c)
      out.data[i + c] = clamp_u8(static_cast<double>(img.data[i + c]) + shift[c]);
  return out;
}

Image pca_color(const Image& img, const PcaEigen& eigen, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return img;
  Rng rng(seed);
  const std::array<double, 3> alphas{rng.normal(0.0, sigma), rng.normal(0.0, sigma),
                                     rng.normal(0.0, sigma)};
  return pca_color_shift(img, eigen, alphas);
}

Image color_jitter_with_factors(const Image& img, double brightness, double contrast,
                                double saturation) {
  const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
  std::vector<double> work(img.data.begin(), img.data.end());

  for (auto& v : work) v *= brightness;

  // Contrast blends toward the mean luminance of the whole image.
  double mean_gray = 0.0;
  if (img.channels == 3) {
    for (std::size_t i = 0; i < pixels; ++i)
      mean_gray += gray_of(work[3 * i], work[3 * i + 1], work[3 * i + 2]);
  } else {
    for (std::size_t i = 0; i < pixels; ++i) mean_gray += work[i];
  }
  mean_gray /= static_cast<double>(pixels);
  for (auto& v : work) v = contrast * v + (1.0 - contrast) * mean_gray;

  // Saturation blends toward the per-pixel luminance; no-op on grayscale.
  if (img.channels == 3) {
    for (std::size_t i = 0; i < pixels; ++i) {
      const double g = gray_of(work[3 * i], work[3 * i + 1], work[3 * i + 2]);
      for (int c = 0; c < 3; ++c)
        work[3 * i + c] = saturation * work[3 * i + c] + (1.0 - saturation) * g;
    }
  }

  Image out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < work.size(); ++i) out.data[i] = clamp_u8(work[i]);
  return out;
}

Image color_jitter(const Image& img, double strength, std::uint64_t seed) {
  if (strength < 0.0 || strength > 1.0)
    throw ParseError("color jitter strength must lie in [0, 1]");
  if (strength == 0.0) return img;
  Rng rng(seed);
  const double fb = rng.uniform(1.0 - strength, 1.0 + strength);
  const double fc = rng.uniform(1.0 - strength, 1.0 + strength);
  const double fs = rng.uniform(1.0 - strength, 1.0 + strength);
  return color_jitter_with_factors(img, fb, fc, fs);
}

} // namespace lmkit
