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

namespace lmkit {

/// (C, H, W) activation tensor. float32 storage, double accumulation in all
/// kernels, so repeated runs are bit-identical.
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<float> data; // row-major per channel

  Tensor() = default;
  Tensor(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), data(static_cast<std::size_t>(c_) * h_ * w_, 0.0f) {}

  std::size_t size() const { return data.size(); }

  float& at(int ci, int y, int x) {
    return data[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  const float& at(int ci, int y, int x) const {
    return data[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }

  bool operator==(const Tensor&) const = default;
};

/// Rank-4 weight tensor (N, C, K, K) for conv / deconv kernels.
struct Tensor4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<float> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0f) {}

  float& at(int a, int b, int y, int x) {
    return data[((static_cast<std::size_t>(a) * c + b) * h + y) * w + x];
  }
  const float& at(int a, int b, int y, int x) const {
    return data[((static_cast<std::size_t>(a) * c + b) * h + y) * w + x];
  }
};

/// Exact multiply-accumulate / elementwise-op instrumentation. Counts only
/// grow during a forward pass.
struct OpCounter {
  std::uint64_t macs = 0;
  std::uint64_t elementwise = 0;

  OpCounter& operator+=(const OpCounter& o) {
    macs += o.macs;
    elementwise += o.elementwise;
    return *this;
  }
};

/// Depth-to-space, channel-major ordering:
///   out(c, h*r + i, w*r + j) = in(c*r^2 + i*r + j, h, w)
/// Zero arithmetic; no MACs counted.
Tensor pixel_shuffle(const Tensor& x, int r, OpCounter* counter = nullptr);

/// Exact inverse of pixel_shuffle.
Tensor pixel_unshuffle(const Tensor& x, int r, OpCounter* counter = nullptr);

/// Cross-correlation with symmetric zero padding.
/// weights: (C_out, C_in, k, k); bias: empty or C_out.
/// H_out = (H + 2*pad - k)/stride + 1. Counts C_out*C_in*k^2*H_out*W_out MACs.
Tensor conv2d(const Tensor& x, const Tensor4& weights, const std::vector<float>& bias,
              int stride, int pad, OpCounter* counter = nullptr);

/// Transposed convolution (input-centric scatter).
/// weights: (C_in, C_out, k, k). H_out = (H-1)*stride - 2*pad + k.
/// Counts C_in*C_out*k^2*H_in*W_in MACs.
Tensor deconv2d(const Tensor& x, const Tensor4& weights, int stride, int pad,
                OpCounter* counter = nullptr);

/// y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel.
Tensor batchnorm_inference(const Tensor& x, const std::vector<float>& mean,
                           const std::vector<float>& var, const std::vector<float>& gamma,
                           const std::vector<float>& beta, double eps = 1e-5,
                           OpCounter* counter = nullptr);

Tensor relu(const Tensor& x, OpCounter* counter = nullptr);

/// TNS1 container: magic "TNS1", u32 rank, u32 dims, float32 payload,
/// little-endian throughout.
void write_tns(const std::vector<std::uint32_t>& dims, const std::vector<float>& data,
               const std::filesystem::path& path);
std::pair<std::vector<std::uint32_t>, std::vector<float>> read_tns(
    const std::filesystem::path& path);

void write_tns(const Tensor4& t, const std::filesystem::path& path);
Tensor4 read_tns4(const std::filesystem::path& path);

} // namespace lmkit
