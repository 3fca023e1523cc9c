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
#include <cstddef>
#include <vector>

#include "lmkit/image.hpp"

namespace lmkit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

/// Ordered landmark set. Index i always denotes the same anatomical point.
struct Landmarks {
  std::vector<Point2> points;

  Landmarks() = default;
  explicit Landmarks(std::vector<Point2> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  Point2& operator[](std::size_t i) { return points[i]; }
  const Point2& operator[](std::size_t i) const { return points[i]; }

  bool all_finite() const;
};

/// 2x3 transform restricted to uniform scale + rotation + translation:
///
///   | a  -b  tx |
///   | b   a  ty |
///
/// with scale = sqrt(a^2 + b^2) > 0.
class SimilarityTransform {
public:
  SimilarityTransform() = default; // identity

  /// Builds from scale, rotation (radians) and translation.
  static SimilarityTransform from_parts(double scale, double angle_rad,
                                        double tx, double ty);
  static SimilarityTransform translation(double tx, double ty);
  static SimilarityTransform identity() { return {}; }

  /// Constructs from 6 row-major entries; the 2x2 block must be of the
  /// form [a, -b; b, a].
  static SimilarityTransform from_matrix(const std::array<double, 6>& m);

  /// Row-major [a, -b, tx, b, a, ty].
  std::array<double, 6> matrix() const;

  double scale() const;
  double rotation_rad() const;
  Point2 translation_part() const { return {tx_, ty_}; }

  Point2 apply(const Point2& p) const {
    return {a_ * p.x - b_ * p.y + tx_, b_ * p.x + a_ * p.y + ty_};
  }

  /// Exact inverse. Throws NonInvertible if the scale is at the numeric floor.
  SimilarityTransform inverse() const;

  SimilarityTransform compose(const SimilarityTransform& inner) const;

private:
  // identity by default
  double a_ = 1.0, b_ = 0.0, tx_ = 0.0, ty_ = 0.0;
};

/// Canonical five-point layout (left eye, right eye, nose, left mouth,
/// right mouth) in the aligned frame. Symmetric about the vertical midline,
/// eyes and mouth corners horizontal.
struct ReferenceTemplate {
  Landmarks points;  // 5 points
  double frame_size = 192.0;

  /// Stand-in template in the 192x192 frame: inter-ocular 76.8 px, rows at
  /// 0.46 / 0.64 / 0.82 of the frame height.
  static ReferenceTemplate standard();

  /// Same layout rescaled to another square frame size.
  ReferenceTemplate scaled_to(double new_frame_size) const;
};

/// Least-squares similarity transform mapping src onto dst (Umeyama closed
/// form: centroids + SVD of the 2x2 covariance, det-corrected rotation).
/// Throws DegenerateInput if the src points have zero variance and
/// CountMismatch if the sets differ in size or have fewer than 2 points.
SimilarityTransform estimate_similarity(const Landmarks& src, const Landmarks& dst);

Landmarks apply_points(const SimilarityTransform& t, const Landmarks& pts);

/// Backward-warps img so that output pixel (u, v) samples the input at
/// T^-1(u, v) with bilinear interpolation; out-of-bounds samples are black.
Image warp_image(const Image& img, const SimilarityTransform& t, int out_w, int out_h);

} // namespace lmkit
