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
#include "lmkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "lmkit/errors.hpp"

namespace lmkit {

namespace {
constexpr double kScaleFloor = 1e-12;
} // namespace

bool Landmarks::all_finite() const {
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  }
  return true;
}

SimilarityTransform SimilarityTransform::from_parts(double scale, double angle_rad,
                                                    double tx, double ty) {
  SimilarityTransform t;
  t.a_ = scale * std::cos(angle_rad);
  t.b_ = scale * std::sin(angle_rad);
  t.tx_ = tx;
  t.ty_ = ty;
  return t;
}

SimilarityTransform SimilarityTransform::translation(double tx, double ty) {
  SimilarityTransform t;
  t.tx_ = tx;
  t.ty_ = ty;
  return t;
}

SimilarityTransform SimilarityTransform::from_matrix(const std::array<double, 6>& m) {
  // m = [a00 a01 tx a10 a11 ty]; similarity requires a00 == a11, a01 == -a10.
  const double tol = 1e-6 * (1.0 + std::abs(m[0]) + std::abs(m[4]));
  if (std::abs(m[0] - m[4]) > tol || std::abs(m[1] + m[3]) > tol)
    throw DegenerateInput("matrix is not a similarity transform");
  SimilarityTransform t;
  t.a_ = m[0];
  t.b_ = m[3];
  t.tx_ = m[2];
  t.ty_ = m[5];
  return t;
}

std::array<double, 6> SimilarityTransform::matrix() const {
  return {a_, -b_, tx_, b_, a_, ty_};
}

double SimilarityTransform::scale() const { return std::hypot(a_, b_); }

double SimilarityTransform::rotation_rad() const { return std::atan2(b_, a_); }

SimilarityTransform SimilarityTransform::inverse() const {
  const double s2 = a_ * a_ + b_ * b_; // det(A) = scale^2
  if (!(s2 > kScaleFloor * kScaleFloor))
    throw NonInvertible("similarity transform scale at numeric floor");
  SimilarityTransform inv;
  inv.a_ = a_ / s2;
  inv.b_ = -b_ / s2;
  // t' = -A^-1 t
  inv.tx_ = -(inv.a_ * tx_ - inv.b_ * ty_);
  inv.ty_ = -(inv.b_ * tx_ + inv.a_ * ty_);
  return inv;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& inner) const {
  // this(inner(p))
  SimilarityTransform out;
  out.a_ = a_ * inner.a_ - b_ * inner.b_;
  out.b_ = b_ * inner.a_ + a_ * inner.b_;
  const Point2 t = apply({inner.tx_, inner.ty_});
  out.tx_ = t.x;
  out.ty_ = t.y;
  return out;
}

ReferenceTemplate ReferenceTemplate::standard() {
  // 192-frame: inter-ocular 0.4 of the width, eye row 0.46, nose 0.64,
  // mouth row 0.82 with half-width 0.13. Symmetric about x = 96.
  ReferenceTemplate t;
  t.frame_size = 192.0;
  t.points = Landmarks({{57.60, 88.32},
                        {134.40, 88.32},
                        {96.00, 122.88},
                        {71.04, 157.44},
                        {120.96, 157.44}});
  return t;
}

ReferenceTemplate ReferenceTemplate::scaled_to(double new_frame_size) const {
  ReferenceTemplate out = *this;
  const double f = new_frame_size / frame_size;
  for (auto& p : out.points.points) {
    p.x *= f;
    p.y *= f;
  }
  out.frame_size = new_frame_size;
  return out;
}

SimilarityTransform estimate_similarity(const Landmarks& src, const Landmarks& dst) {
  const std::size_t n = src.size();
  if (n != dst.size() || n < 2)
    throw CountMismatch("estimate_similarity needs matching point sets of >= 2 points");
  if (!src.all_finite() || !dst.all_finite())
    throw DegenerateInput("non-finite landmark coordinates");

  Point2 mu_src{0, 0}, mu_dst{0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    mu_src.x += src[i].x;
    mu_src.y += src[i].y;
    mu_dst.x += dst[i].x;
    mu_dst.y += dst[i].y;
  }
  mu_src.x /= static_cast<double>(n);
  mu_src.y /= static_cast<double>(n);
  mu_dst.x /= static_cast<double>(n);
  mu_dst.y /= static_cast<double>(n);

  // cov = (1/n) sum (dst_i - mu_dst) (src_i - mu_src)^T, var over src.
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d s(src[i].x - mu_src.x, src[i].y - mu_src.y);
    const Eigen::Vector2d d(dst[i].x - mu_dst.x, dst[i].y - mu_dst.y);
    cov += d * s.transpose();
    var_src += s.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_src /= static_cast<double>(n);

  if (!(var_src > kScaleFloor))
    throw DegenerateInput("source landmarks are coincident");

  Eigen::JacobiSVD<Eigen::Matrix2d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d sign = Eigen::Matrix2d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sign(1, 1) = -1.0;

  const Eigen::Matrix2d rot = svd.matrixU() * sign * svd.matrixV().transpose();
  const double scale = (svd.singularValues().asDiagonal() * sign).trace() / var_src;

  SimilarityTransform t;
  std::array<double, 6> m;
  m[0] = scale * rot(0, 0);
  m[1] = scale * rot(0, 1);
  m[4] = scale * rot(1, 1);
  m[3] = scale * rot(1, 0);
  m[2] = mu_dst.x - (m[0] * mu_src.x + m[1] * mu_src.y);
  m[5] = mu_dst.y - (m[3] * mu_src.x + m[4] * mu_src.y);
  return SimilarityTransform::from_matrix(m);
}

Landmarks apply_points(const SimilarityTransform& t, const Landmarks& pts) {
  Landmarks out;
  out.points.reserve(pts.size());
  for (const auto& p : pts.points) out.points.push_back(t.apply(p));
  return out;
}

Image warp_image(const Image& img, const SimilarityTransform& t, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw InvalidSize("output size must be positive");
  if (img.empty()) throw InvalidSize("input image is empty");

  const SimilarityTransform inv = t.inverse();
  Image out(out_w, out_h, img.channels);

  for (int v = 0; v < out_h; ++v) {
    for (int u = 0; u < out_w; ++u) {
      const Point2 p = inv.apply({static_cast<double>(u), static_cast<double>(v)});
      const int x0 = static_cast<int>(std::floor(p.x));
      const int y0 = static_cast<int>(std::floor(p.y));
      const double fx = p.x - x0;
      const double fy = p.y - y0;
      // Out-of-bounds corners contribute black.
      const double w00 = (1.0 - fx) * (1.0 - fy);
      const double w10 = fx * (1.0 - fy);
      const double w01 = (1.0 - fx) * fy;
      const double w11 = fx * fy;
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        auto sample = [&](int x, int y, double weight) {
          if (x >= 0 && x < img.width && y >= 0 && y < img.height)
            acc += weight * img.at(x, y, c);
        };
        sample(x0, y0, w00);
        sample(x0 + 1, y0, w10);
        sample(x0, y0 + 1, w01);
        sample(x0 + 1, y0 + 1, w11);
        const long rounded = std::lround(acc);
        out.at(u, v, c) = static_cast<std::uint8_t>(std::clamp(rounded, 0L, 255L));
      }
    }
  }
  return out;
}

} // namespace lmkit
