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
#include "lmkit/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "lmkit/errors.hpp"

namespace lmkit {

namespace {

constexpr double kLogFloor = 1e-10;
constexpr double kPi = 3.14159265358979323846;

struct Argmax {
  int x = 0;
  int y = 0;
  double value = 0.0;
};

// Smallest row-major index wins ties.
Argmax channel_argmax(const HeatmapStack& stack, int k) {
  Argmax best{0, 0, stack.at(k, 0, 0)};
  for (int y = 0; y < stack.height; ++y) {
    for (int x = 0; x < stack.width; ++x) {
      const double v = stack.at(k, x, y);
      if (v > best.value) best = {x, y, v};
    }
  }
  return best;
}

DecodedPoint gradient_decode_channel(const HeatmapStack& stack, int k, double coeff) {
  const Argmax m = channel_argmax(stack, k);
  DecodedPoint p{static_cast<double>(m.x), static_cast<double>(m.y), m.value,
                 DecodedPoint::Flag::None};
  if (m.x == 0 || m.x == stack.width - 1 || m.y == 0 || m.y == stack.height - 1) {
    p.flag = DecodedPoint::Flag::BorderFallback;
    return p;
  }
  const double dx = 0.5 * (stack.at(k, m.x + 1, m.y) - stack.at(k, m.x - 1, m.y));
  const double dy = 0.5 * (stack.at(k, m.x, m.y + 1) - stack.at(k, m.x, m.y - 1));
  p.x += coeff * static_cast<double>((dx > 0.0) - (dx < 0.0));
  p.y += coeff * static_cast<double>((dy > 0.0) - (dy < 0.0));
  return p;
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

float read_f32_le(std::istream& in) {
  const std::uint32_t bits = read_u32_le(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void write_f32_le(std::ostream& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  write_u32_le(out, bits);
}

} // namespace

HeatmapStack encode(const Landmarks& landmarks, int height, int width,
                    const GaussianParams& params, double stride) {
  if (height < 3 || width < 3) throw InvalidSize("heatmaps must be at least 3x3");
  if (!(params.sigma > 0.0)) throw InvalidSize("sigma must be positive");

  const int k = static_cast<int>(landmarks.size());
  HeatmapStack stack(k, height, width, stride);

  const double inv_two_sigma2 = 1.0 / (2.0 * params.sigma * params.sigma);
  const double amplitude = params.amplitude == GaussianParams::Amplitude::PeakOne
                               ? 1.0
                               : 1.0 / (2.0 * kPi * params.sigma * params.sigma);

  for (int i = 0; i < k; ++i) {
    const Point2 c = landmarks[i];
    if (c.x < 0.0 || c.x >= width || c.y < 0.0 || c.y >= height) stack.truncated[i] = 1;
    for (int y = 0; y < height; ++y) {
      const double dy = y - c.y;
      for (int x = 0; x < width; ++x) {
        const double dx = x - c.x;
        stack.at(i, x, y) = amplitude * std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
      }
    }
  }
  return stack;
}

std::vector<DecodedPoint> decode_argmax(const HeatmapStack& stack) {
  std::vector<DecodedPoint> out;
  out.reserve(stack.channels);
  for (int k = 0; k < stack.channels; ++k) {
    const Argmax m = channel_argmax(stack, k);
    out.push_back({static_cast<double>(m.x), static_cast<double>(m.y), m.value,
                   DecodedPoint::Flag::None});
  }
  return out;
}

std::vector<DecodedPoint> decode_gradient(const HeatmapStack& stack, double coeff) {
  std::vector<DecodedPoint> out;
  out.reserve(stack.channels);
  for (int k = 0; k < stack.channels; ++k)
    out.push_back(gradient_decode_channel(stack, k, coeff));
  return out;
}

std::vector<DecodedPoint> decode_gaussian_fit(const HeatmapStack& stack,
                                              const GaussianParams& params) {
  if (!(params.sigma > 0.0)) throw InvalidSize("sigma must be positive");

  std::vector<DecodedPoint> out;
  out.reserve(stack.channels);
  for (int k = 0; k < stack.channels; ++k) {
    const Argmax m = channel_argmax(stack, k);
    if (m.x < 1 || m.x > stack.width - 2 || m.y < 1 || m.y > stack.height - 2) {
      DecodedPoint p = gradient_decode_channel(stack, k, 0.25);
      p.flag = DecodedPoint::Flag::BorderFallback;
      out.push_back(p);
      continue;
    }

    // Log-values of the 3x3 window; the floor keeps truncated channels finite.
    double L[3][3];
    for (int j = -1; j <= 1; ++j)
      for (int i = -1; i <= 1; ++i)
        L[j + 1][i + 1] = std::log(std::max(stack.at(k, m.x + i, m.y + j), kLogFloor));

    const double gx = 0.5 * (L[1][2] - L[1][0]);
    const double gy = 0.5 * (L[2][1] - L[0][1]);
    const double hxx = L[1][2] - 2.0 * L[1][1] + L[1][0];
    const double hyy = L[2][1] - 2.0 * L[1][1] + L[0][1];
    const double hxy = 0.25 * (L[2][2] - L[2][0] - L[0][2] + L[0][0]);

    const double det = hxx * hyy - hxy * hxy;
    if (!std::isfinite(det) || std::abs(det) < 1e-12) {
      DecodedPoint p = gradient_decode_channel(stack, k, 0.25);
      p.flag = DecodedPoint::Flag::HessianFallback;
      out.push_back(p);
      continue;
    }

    // Newton step mu = m - H^-1 g, clamped to 1 px around the argmax.
    double ox = -(hyy * gx - hxy * gy) / det;
    double oy = -(-hxy * gx + hxx * gy) / det;
    ox = std::clamp(ox, -1.0, 1.0);
    oy = std::clamp(oy, -1.0, 1.0);

    DecodedPoint p{m.x + ox, m.y + oy, m.value, DecodedPoint::Flag::None};
    p.x = std::clamp(p.x, 0.0, std::nextafter(static_cast<double>(stack.width), 0.0));
    p.y = std::clamp(p.y, 0.0, std::nextafter(static_cast<double>(stack.height), 0.0));
    out.push_back(p);
  }
  return out;
}

Landmarks to_image_frame(const std::vector<DecodedPoint>& points, double stack_stride,
                         const SimilarityTransform& align) {
  if (!(stack_stride > 0.0)) throw InvalidSize("stride must be positive");
  const SimilarityTransform inv = align.inverse();
  Landmarks out;
  out.points.reserve(points.size());
  for (const auto& p : points)
    out.points.push_back(inv.apply({p.x * stack_stride, p.y * stack_stride}));
  return out;
}

Landmarks to_image_frame(const Landmarks& points, double stack_stride,
                         const SimilarityTransform& align) {
  if (!(stack_stride > 0.0)) throw InvalidSize("stride must be positive");
  const SimilarityTransform inv = align.inverse();
  Landmarks out;
  out.points.reserve(points.size());
  for (const auto& p : points.points)
    out.points.push_back(inv.apply({p.x * stack_stride, p.y * stack_stride}));
  return out;
}

void write_hms(const HeatmapStack& stack, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write heatmap stack: " + path.string());
  out.write("HMS1", 4);
  write_u32_le(out, static_cast<std::uint32_t>(stack.channels));
  write_u32_le(out, static_cast<std::uint32_t>(stack.height));
  write_u32_le(out, static_cast<std::uint32_t>(stack.width));
  for (const double v : stack.values) write_f32_le(out, static_cast<float>(v));
  if (!out) throw IoError("failed writing heatmap stack: " + path.string());
}

HeatmapStack read_hms(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open heatmap stack: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "HMS1", 4) != 0)
    throw IoError("bad HMS1 magic: " + path.string());
  const std::uint32_t k = read_u32_le(in);
  const std::uint32_t h = read_u32_le(in);
  const std::uint32_t w = read_u32_le(in);
  if (!in) throw IoError("truncated HMS1 header: " + path.string());
  HeatmapStack stack(static_cast<int>(k), static_cast<int>(h), static_cast<int>(w));
  for (double& v : stack.values) {
    v = read_f32_le(in);
    if (!in) throw IoError("truncated HMS1 payload: " + path.string());
  }
  return stack;
}

} // namespace lmkit
