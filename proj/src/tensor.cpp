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
#include "lmkit/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "lmkit/errors.hpp"

namespace lmkit {

namespace {

void bump(OpCounter* counter, std::uint64_t macs, std::uint64_t elementwise) {
  if (counter) {
    counter->macs += macs;
    counter->elementwise += elementwise;
  }
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

} // namespace

Tensor pixel_shuffle(const Tensor& x, int r, OpCounter* counter) {
  if (r < 1) throw ShapeMismatch("pixel_shuffle factor must be >= 1");
  if (x.c % (r * r) != 0)
    throw ShapeMismatch("pixel_shuffle: channel count not divisible by r^2");

  const int out_c = x.c / (r * r);
  Tensor out(out_c, x.h * r, x.w * r);
  for (int c = 0; c < out_c; ++c) {
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        const int src_c = c * r * r + i * r + j;
        for (int y = 0; y < x.h; ++y) {
          for (int xx = 0; xx < x.w; ++xx) {
            out.at(c, y * r + i, xx * r + j) = x.at(src_c, y, xx);
          }
        }
      }
    }
  }
  (void)counter; // pure rearrangement, zero MACs
  return out;
}

Tensor pixel_unshuffle(const Tensor& x, int r, OpCounter* counter) {
  if (r < 1) throw ShapeMismatch("pixel_unshuffle factor must be >= 1");
  if (x.h % r != 0 || x.w % r != 0)
    throw ShapeMismatch("pixel_unshuffle: spatial size not divisible by r");

  Tensor out(x.c * r * r, x.h / r, x.w / r);
  for (int c = 0; c < x.c; ++c) {
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        const int dst_c = c * r * r + i * r + j;
        for (int y = 0; y < out.h; ++y) {
          for (int xx = 0; xx < out.w; ++xx) {
            out.at(dst_c, y, xx) = x.at(c, y * r + i, xx * r + j);
          }
        }
      }
    }
  }
  (void)counter;
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor4& weights, const std::vector<float>& bias,
              int stride, int pad, OpCounter* counter) {
  if (weights.c != x.c) throw ShapeMismatch("conv2d: weight input channels mismatch");
  if (weights.h != weights.w) throw ShapeMismatch("conv2d: kernel must be square");
  if (!bias.empty() && static_cast<int>(bias.size()) != weights.n)
    throw ShapeMismatch("conv2d: bias length mismatch");
  if (stride < 1 || pad < 0) throw ShapeMismatch("conv2d: bad stride/pad");

  const int k = weights.h;
  const int out_h = (x.h + 2 * pad - k) / stride + 1;
  const int out_w = (x.w + 2 * pad - k) / stride + 1;
  if (out_h < 1 || out_w < 1 || (x.h + 2 * pad - k) % stride != 0 ||
      (x.w + 2 * pad - k) % stride != 0)
    throw ShapeMismatch("conv2d: input/kernel/stride/pad inconsistent");

  // Materialized zero border keeps the inner loops dense, so the executed
  // MAC count equals the closed form C_out*C_in*k^2*H_out*W_out.
  Tensor padded(x.c, x.h + 2 * pad, x.w + 2 * pad);
  for (int c = 0; c < x.c; ++c)
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) padded.at(c, y + pad, xx + pad) = x.at(c, y, xx);

  Tensor out(weights.n, out_h, out_w);
  std::uint64_t macs = 0;
  for (int co = 0; co < weights.n; ++co) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = bias.empty() ? 0.0 : static_cast<double>(bias[co]);
        for (int ci = 0; ci < x.c; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const float* row = &padded.at(ci, oy * stride + ky, ox * stride);
            const float* wrow = &weights.at(co, ci, ky, 0);
            for (int kx = 0; kx < k; ++kx)
              acc += static_cast<double>(row[kx]) * static_cast<double>(wrow[kx]);
          }
        }
        macs += static_cast<std::uint64_t>(x.c) * k * k;
        out.at(co, oy, ox) = static_cast<float>(acc);
      }
    }
  }
  bump(counter, macs, bias.empty() ? 0 : out.size());
  return out;
}

Tensor deconv2d(const Tensor& x, const Tensor4& weights, int stride, int pad,
                OpCounter* counter) {
  if (weights.n != x.c) throw ShapeMismatch("deconv2d: weight input channels mismatch");
  if (weights.h != weights.w) throw ShapeMismatch("deconv2d: kernel must be square");
  if (stride < 1 || pad < 0) throw ShapeMismatch("deconv2d: bad stride/pad");

  const int k = weights.h;
  const int c_out = weights.c;
  const int full_h = (x.h - 1) * stride + k;
  const int full_w = (x.w - 1) * stride + k;
  const int out_h = full_h - 2 * pad;
  const int out_w = full_w - 2 * pad;
  if (out_h < 1 || out_w < 1) throw ShapeMismatch("deconv2d: padding exceeds output");

  // Full input-centric scatter into an uncropped buffer; the pad crop happens
  // afterwards. Every scatter tap is executed, matching the
  // C_in*C_out*k^2*H_in*W_in count.
  std::vector<double> full(static_cast<std::size_t>(c_out) * full_h * full_w, 0.0);
  std::uint64_t macs = 0;
  for (int ci = 0; ci < x.c; ++ci) {
    for (int y = 0; y < x.h; ++y) {
      for (int xx = 0; xx < x.w; ++xx) {
        const double v = x.at(ci, y, xx);
        for (int co = 0; co < c_out; ++co) {
          double* base = &full[(static_cast<std::size_t>(co) * full_h + y * stride) * full_w +
                               xx * stride];
          const float* wbase = &weights.at(ci, co, 0, 0);
          for (int ky = 0; ky < k; ++ky) {
            double* row = base + static_cast<std::size_t>(ky) * full_w;
            for (int kx = 0; kx < k; ++kx)
              row[kx] += v * static_cast<double>(wbase[ky * k + kx]);
          }
        }
        macs += static_cast<std::uint64_t>(c_out) * k * k;
      }
    }
  }

  Tensor out(c_out, out_h, out_w);
  for (int co = 0; co < c_out; ++co)
    for (int y = 0; y < out_h; ++y)
      for (int xx = 0; xx < out_w; ++xx)
        out.at(co, y, xx) = static_cast<float>(
            full[(static_cast<std::size_t>(co) * full_h + y + pad) * full_w + xx + pad]);

  bump(counter, macs, 0);
  return out;
}

Tensor batchnorm_inference(const Tensor& x, const std::vector<float>& mean,
                           const std::vector<float>& var, const std::vector<float>& gamma,
                           const std::vector<float>& beta, double eps, OpCounter* counter) {
  const auto c = static_cast<std::size_t>(x.c);
  if (mean.size() != c || var.size() != c || gamma.size() != c || beta.size() != c)
    throw ShapeMismatch("batchnorm: parameter length must equal channel count");

  Tensor out(x.c, x.h, x.w);
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
  for (int ci = 0; ci < x.c; ++ci) {
    const double scale = gamma[ci] / std::sqrt(static_cast<double>(var[ci]) + eps);
    const double shift = beta[ci] - scale * mean[ci];
    const float* src = &x.data[ci * plane];
    float* dst = &out.data[ci * plane];
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = static_cast<float>(scale * src[i] + shift);
  }
  bump(counter, 0, x.size());
  return out;
}

Tensor relu(const Tensor& x, OpCounter* counter) {
  Tensor out(x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    out.data[i] = x.data[i] > 0.0f ? x.data[i] : 0.0f;
  bump(counter, 0, x.size());
  return out;
}

void write_tns(const std::vector<std::uint32_t>& dims, const std::vector<float>& data,
               const std::filesystem::path& path) {
  std::uint64_t expected = 1;
  for (const auto d : dims) expected *= d;
  if (expected != data.size()) throw ShapeMismatch("TNS1: dims do not match payload");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write tensor: " + path.string());
  out.write("TNS1", 4);
  write_u32_le(out, static_cast<std::uint32_t>(dims.size()));
  for (const auto d : dims) write_u32_le(out, d);
  for (const float f : data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32_le(out, bits);
  }
  if (!out) throw IoError("failed writing tensor: " + path.string());
}

std::pair<std::vector<std::uint32_t>, std::vector<float>> read_tns(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "TNS1", 4) != 0)
    throw IoError("bad TNS1 magic: " + path.string());
  const std::uint32_t rank = read_u32_le(in);
  if (!in || rank == 0 || rank > 8) throw IoError("bad TNS1 rank: " + path.string());
  std::vector<std::uint32_t> dims(rank);
  std::uint64_t count = 1;
  for (auto& d : dims) {
    d = read_u32_le(in);
    count *= d;
  }
  if (!in) throw IoError("truncated TNS1 header: " + path.string());
  std::vector<float> data(count);
  for (auto& f : data) {
    const std::uint32_t bits = read_u32_le(in);
    if (!in) throw IoError("truncated TNS1 payload: " + path.string());
    std::memcpy(&f, &bits, 4);
  }
  return {std::move(dims), std::move(data)};
}

void write_tns(const Tensor4& t, const std::filesystem::path& path) {
  write_tns({static_cast<std::uint32_t>(t.n), static_cast<std::uint32_t>(t.c),
             static_cast<std::uint32_t>(t.h), static_cast<std::uint32_t>(t.w)},
            t.data, path);
}

Tensor4 read_tns4(const std::filesystem::path& path) {
  auto [dims, data] = read_tns(path);
  if (dims.size() != 4) throw ShapeMismatch("expected rank-4 tensor: " + path.string());
  Tensor4 t(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
            static_cast<int>(dims[3]));
  t.data = std::move(data);
  return t;
}

} // namespace lmkit
