// Copyright (c) the wavefr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wavefr/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavefr/error.hpp"
#include "wavefr/kernels/kernels.hpp"

namespace wfr::degradation {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) {
    throw ParameterError("gaussian_kernel: sigma must be > 0, got " +
                         std::to_string(sigma));
  }
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image blur(const Image& image, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const std::vector<float> taps(k.begin(), k.end());
  Image out(image.height, image.width, image.channels);
  kernels::filter_separable<float>(image.data, image.channels, image.height,
                                   image.width, taps, out.data);
  return out;
}

namespace {

struct Sample1d {
  std::size_t i0, i1;
  float w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Sample1d> bilinear_axis(std::size_t in, std::size_t out) {
  std::vector<Sample1d> s(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    s[o] = {i0, i1, static_cast<float>(src - static_cast<double>(i0))};
  }
  return s;
}

}  // namespace

Image resize(const Image& image, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) {
    throw ParameterError("resize: target size " + std::to_string(out_h) + "x" +
                         std::to_string(out_w) + " has a zero dimension");
  }
  if (image.empty()) throw ParameterError("resize: empty input image");
  const auto ys = bilinear_axis(image.height, out_h);
  const auto xs = bilinear_axis(image.width, out_w);
  Image out(out_h, out_w, image.channels);
  const auto rows = static_cast<std::ptrdiff_t>(image.channels * out_h);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t c = static_cast<std::size_t>(r) / out_h;
    const std::size_t y = static_cast<std::size_t>(r) % out_h;
    const Sample1d& sy = ys[y];
    const float* r0 = image.data.data() + (c * image.height + sy.i0) * image.width;
    const float* r1 = image.data.data() + (c * image.height + sy.i1) * image.width;
    float* dst = out.data.data() + (c * out_h + y) * out_w;
    for (std::size_t x = 0; x < out_w; ++x) {
      const Sample1d& sx = xs[x];
      const float top = r0[sx.i0] + sx.w1 * (r0[sx.i1] - r0[sx.i0]);
      const float bot = r1[sx.i0] + sx.w1 * (r1[sx.i1] - r1[sx.i0]);
      dst[x] = top + sy.w1 * (bot - top);
    }
  }
  return out;
}

Image add_gaussian_noise(const Image& image, double delta, RngStream& rng) {
  if (delta < 0.0) {
    throw ParameterError("add_gaussian_noise: delta must be >= 0, got " +
                         std::to_string(delta));
  }
  Image out = image;
  if (delta == 0.0) return out;
  const double std_dev = delta / 255.0;
  for (float& v : out.data) {
    v = static_cast<float>(v + std_dev * rng.normal());
  }
  return out;
}

// --- JPEG -------------------------------------------------------------------

const std::array<int, 64>& luma_quant_base() {
  static const std::array<int, 64> t = {
      16, 11, 10, 16, 24,  40,  51,  61,   //
      12, 12, 14, 19, 26,  58,  60,  55,   //
      14, 13, 16, 24, 40,  57,  69,  56,   //
      14, 17, 22, 29, 51,  87,  80,  62,   //
      18, 22, 37, 56, 68,  109, 103, 77,   //
      24, 35, 55, 64, 81,  104, 113, 92,   //
      49, 64, 78, 87, 103, 121, 120, 101,  //
      72, 92, 95, 98, 112, 100, 103, 99};
  return t;
}

const std::array<int, 64>& chroma_quant_base() {
  static const std::array<int, 64> t = {
      17, 18, 24, 47, 99, 99, 99, 99,  //
      18, 21, 26, 66, 99, 99, 99, 99,  //
      24, 26, 56, 99, 99, 99, 99, 99,  //
      47, 66, 99, 99, 99, 99, 99, 99,  //
      99, 99, 99, 99, 99, 99, 99, 99,  //
      99, 99, 99, 99, 99, 99, 99, 99,  //
      99, 99, 99, 99, 99, 99, 99, 99,  //
      99, 99, 99, 99, 99, 99, 99, 99};
  return t;
}

std::array<int, 64> scaled_quant_table(const std::array<int, 64>& base,
                                       int quality) {
  if (quality < 1 || quality > 100) {
    throw ParameterError("jpeg: quality must be in [1,100], got " +
                         std::to_string(quality));
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> out{};
  for (std::size_t i = 0; i < 64; ++i) {
    out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  }
  return out;
}

namespace {

// Orthonormal 8-point DCT-II basis: basis[u][x] = c(u)/2 · cos((2x+1)uπ/16).
const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto b = [] {
    std::array<std::array<double, 8>, 8> m{};
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(0.125) : 0.5;
      for (int x = 0; x < 8; ++x) {
        m[u][x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
    return m;
  }();
  return b;
}

// Quantise/dequantise one 8×8 block in place (level-shifted samples).
void quantize_block(double* block, const std::array<int, 64>& q) {
  const auto& B = dct_basis();
  double tmp[64], coef[64];
  // rows
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += B[u][x] * block[y * 8 + x];
      tmp[y * 8 + u] = acc;
    }
  // columns
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += B[v][y] * tmp[y * 8 + u];
      const double step = q[v * 8 + u];
      coef[v * 8 + u] = std::round(acc / step) * step;
    }
  // inverse columns
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += B[v][y] * coef[v * 8 + u];
      tmp[y * 8 + u] = acc;
    }
  // inverse rows
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += B[u][x] * tmp[y * 8 + u];
      block[y * 8 + x] = acc;
    }
}

// Runs the block codec over one plane of 0-255 samples in place.
void code_plane(std::vector<double>& plane, std::size_t h, std::size_t w,
                const std::array<int, 64>& q) {
  const std::size_t bh = (h + 7) / 8, bw = (w + 7) / 8;
  const auto nblocks = static_cast<std::ptrdiff_t>(bh * bw);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    const std::size_t by = static_cast<std::size_t>(b) / bw;
    const std::size_t bx = static_cast<std::size_t>(b) % bw;
    double block[64];
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) {
        // Replicate the last row/column past the image edge.
        const std::size_t sy = std::min(by * 8 + y, h - 1);
        const std::size_t sx = std::min(bx * 8 + x, w - 1);
        block[y * 8 + x] = plane[sy * w + sx] - 128.0;
      }
    quantize_block(block, q);
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) {
        const std::size_t sy = by * 8 + y, sx = bx * 8 + x;
        if (sy < h && sx < w) plane[sy * w + sx] = block[y * 8 + x] + 128.0;
      }
  }
}

}  // namespace

Image jpeg_artifact(const Image& image, int quality) {
  const auto ql = scaled_quant_table(luma_quant_base(), quality);
  const auto qc = scaled_quant_table(chroma_quant_base(), quality);
  const std::size_t h = image.height, w = image.width, n = h * w;
  Image out(h, w, image.channels);
  if (image.empty()) return out;

  if (image.channels == 3) {
    std::vector<double> Y(n), Cb(n), Cr(n);
    const float* R = image.data.data();
    const float* G = R + n;
    const float* Bl = G + n;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = 255.0 * R[i], g = 255.0 * G[i], b = 255.0 * Bl[i];
      Y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
      Cb[i] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
      Cr[i] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
    }
    code_plane(Y, h, w, ql);
    code_plane(Cb, h, w, qc);
    code_plane(Cr, h, w, qc);
    float* oR = out.data.data();
    float* oG = oR + n;
    float* oB = oG + n;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = Y[i], cb = Cb[i] - 128.0, cr = Cr[i] - 128.0;
      oR[i] = static_cast<float>((y + 1.402 * cr) / 255.0);
      oG[i] = static_cast<float>((y - 0.344136 * cb - 0.714136 * cr) / 255.0);
      oB[i] = static_cast<float>((y + 1.772 * cb) / 255.0);
    }
    return out;
  }

  std::vector<double> plane(n);
  for (std::size_t c = 0; c < image.channels; ++c) {
    const auto src = image.plane(c);
    for (std::size_t i = 0; i < n; ++i) plane[i] = 255.0 * src[i];
    code_plane(plane, h, w, ql);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<float>(plane[i] / 255.0);
  }
  return out;
}

// --- sampling and the full chain -------------------------------------------

DegradationParams sample_params(RngStream& rng, bool second_order,
                                const DegradationRanges& ranges) {
  DegradationParams p;
  p.sigma = rng.uniform(ranges.sigma[0], ranges.sigma[1]);
  p.scale = rng.uniform(ranges.scale[0], ranges.scale[1]);
  p.delta = rng.uniform(ranges.delta[0], ranges.delta[1]);
  p.quality = static_cast<int>(rng.uniform_int(ranges.quality[0], ranges.quality[1]));
  p.second_order = second_order;
  return p;
}

namespace {

Image single_pass(const Image& image, const DegradationParams& p,
                  RngStream& rng) {
  if (!(p.scale > 0.0)) {
    throw ParameterError("degrade: scale must be > 0, got " +
                         std::to_string(p.scale));
  }
  const auto small = [&](std::size_t n) {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(static_cast<double>(n) / p.scale)));
  };
  Image x = blur(image, p.sigma);
  x = resize(x, small(image.height), small(image.width));
  x = add_gaussian_noise(x, p.delta, rng);
  x = jpeg_artifact(x, p.quality);
  x = resize(x, image.height, image.width);
  clamp(x);
  return x;
}

}  // namespace

Image degrade(const Image& image, const DegradationParams& params,
              RngStream& rng, const DegradationRanges& ranges) {
  RngStream first = rng.split();
  RngStream second = rng.split();
  Image x = single_pass(image, params, first);
  if (params.second_order) {
    const DegradationParams again = sample_params(second, false, ranges);
    x = single_pass(x, again, second);
  }
  return x;
}

}  // namespace wfr::degradation
