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

// im2col + blocked GEMM convolution. Parallel over batch items; per-item
// weight-gradient partials are reduced in item order afterwards.

#include <algorithm>
#include <vector>

#include "wavefr/kernels/kernels.hpp"

namespace wfr::kernels {
namespace {

constexpr std::size_t kTile = 128;  // spatial tile for the GEMM loops

bool is_pointwise(const Conv2dShape& s) {
  return s.kernel == 1 && s.stride == 1 && s.padding == 0;
}

// col[kk * P + p], kk = (ic * k + ky) * k + kx, p = oy * ow + ox.
template <class T>
void im2col(const Conv2dShape& s, const T* in, T* col) {
  const std::size_t k = s.kernel, oh = s.out_h(), ow = s.out_w();
  const std::size_t P = oh * ow;
  const auto ih = static_cast<std::ptrdiff_t>(s.in_h);
  const auto iw = static_cast<std::ptrdiff_t>(s.in_w);
  const auto pad = static_cast<std::ptrdiff_t>(s.padding);
  const auto stride = static_cast<std::ptrdiff_t>(s.stride);
  for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
    const T* plane = in + ic * s.in_h * s.in_w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = col + ((ic * k + ky) * k + kx) * P;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * stride - pad +
                                    static_cast<std::ptrdiff_t>(ky);
          T* dst = row + oy * ow;
          if (iy < 0 || iy >= ih) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = plane + iy * iw;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * stride -
                                      pad + static_cast<std::ptrdiff_t>(kx);
            dst[ox] = (ix >= 0 && ix < iw) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// grad_in += col2im(colg)
template <class T>
void col2im_add(const Conv2dShape& s, const T* colg, T* grad_in) {
  const std::size_t k = s.kernel, oh = s.out_h(), ow = s.out_w();
  const std::size_t P = oh * ow;
  const auto ih = static_cast<std::ptrdiff_t>(s.in_h);
  const auto iw = static_cast<std::ptrdiff_t>(s.in_w);
  const auto pad = static_cast<std::ptrdiff_t>(s.padding);
  const auto stride = static_cast<std::ptrdiff_t>(s.stride);
  for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
    T* plane = grad_in + ic * s.in_h * s.in_w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = colg + ((ic * k + ky) * k + kx) * P;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * stride - pad +
                                    static_cast<std::ptrdiff_t>(ky);
          if (iy < 0 || iy >= ih) continue;
          T* dst = plane + iy * iw;
          const T* src = row + oy * ow;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * stride -
                                      pad + static_cast<std::ptrdiff_t>(kx);
            if (ix >= 0 && ix < iw) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// out[M×P] (+)= A[M×K] · B[K×P], rows of out already initialised.
template <class T>
void gemm_acc(const T* A, std::size_t M, std::size_t K, const T* B,
              std::size_t P, T* out) {
  for (std::size_t p0 = 0; p0 < P; p0 += kTile) {
    const std::size_t pn = std::min(kTile, P - p0);
    std::size_t m = 0;
    for (; m + 4 <= M; m += 4) {
      T* o0 = out + (m + 0) * P + p0;
      T* o1 = out + (m + 1) * P + p0;
      T* o2 = out + (m + 2) * P + p0;
      T* o3 = out + (m + 3) * P + p0;
      const T* a0 = A + (m + 0) * K;
      const T* a1 = A + (m + 1) * K;
      const T* a2 = A + (m + 2) * K;
      const T* a3 = A + (m + 3) * K;
      for (std::size_t kk = 0; kk < K; ++kk) {
        const T* b = B + kk * P + p0;
        const T w0 = a0[kk], w1 = a1[kk], w2 = a2[kk], w3 = a3[kk];
        for (std::size_t p = 0; p < pn; ++p) {
          const T v = b[p];
          o0[p] += w0 * v;
          o1[p] += w1 * v;
          o2[p] += w2 * v;
          o3[p] += w3 * v;
        }
      }
    }
    for (; m < M; ++m) {
      T* o = out + m * P + p0;
      const T* a = A + m * K;
      for (std::size_t kk = 0; kk < K; ++kk) {
        const T* b = B + kk * P + p0;
        const T w = a[kk];
        for (std::size_t p = 0; p < pn; ++p) o[p] += w * b[p];
      }
    }
  }
}

// out[K×P] += A^T[K×M] · G[M×P] where A is M×K.
template <class T>
void gemm_tn_acc(const T* A, std::size_t M, std::size_t K, const T* G,
                 std::size_t P, T* out) {
  for (std::size_t p0 = 0; p0 < P; p0 += kTile) {
    const std::size_t pn = std::min(kTile, P - p0);
    std::size_t kk = 0;
    for (; kk + 4 <= K; kk += 4) {
      T* o0 = out + (kk + 0) * P + p0;
      T* o1 = out + (kk + 1) * P + p0;
      T* o2 = out + (kk + 2) * P + p0;
      T* o3 = out + (kk + 3) * P + p0;
      for (std::size_t m = 0; m < M; ++m) {
        const T* g = G + m * P + p0;
        const T* a = A + m * K + kk;
        const T w0 = a[0], w1 = a[1], w2 = a[2], w3 = a[3];
        for (std::size_t p = 0; p < pn; ++p) {
          const T v = g[p];
          o0[p] += w0 * v;
          o1[p] += w1 * v;
          o2[p] += w2 * v;
          o3[p] += w3 * v;
        }
      }
    }
    for (; kk < K; ++kk) {
      T* o = out + kk * P + p0;
      for (std::size_t m = 0; m < M; ++m) {
        const T* g = G + m * P + p0;
        const T w = A[m * K + kk];
        for (std::size_t p = 0; p < pn; ++p) o[p] += w * g[p];
      }
    }
  }
}

// Eight-lane dot product; fixed lane assignment keeps it deterministic.
template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  for (std::size_t j = 0; i < n; ++i, ++j) acc[j] += a[i] * b[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) +
         ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

}  // namespace

template <class T>
void conv2d_forward(const Conv2dShape& s, std::span<const T> in,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> out) {
  const std::size_t P = s.out_h() * s.out_w();
  const std::size_t K = s.in_channels * s.kernel * s.kernel;
  const std::size_t in_item = s.in_channels * s.in_h * s.in_w;
  const std::size_t out_item = s.out_channels * P;
  const bool pointwise = is_pointwise(s);
  const auto batch = static_cast<std::ptrdiff_t>(s.batch);

#pragma omp parallel
  {
    std::vector<T> col(pointwise ? 0 : K * P);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const T* x = in.data() + n * in_item;
      T* y = out.data() + n * out_item;
      for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
        std::fill(y + oc * P, y + (oc + 1) * P, bias.empty() ? T(0) : bias[oc]);
      }
      const T* B = x;
      if (!pointwise) {
        im2col(s, x, col.data());
        B = col.data();
      }
      gemm_acc(weight.data(), s.out_channels, K, B, P, y);
    }
  }
}

template <class T>
void conv2d_backward_input(const Conv2dShape& s, std::span<const T> grad_out,
                           std::span<const T> weight, std::span<T> grad_in) {
  const std::size_t P = s.out_h() * s.out_w();
  const std::size_t K = s.in_channels * s.kernel * s.kernel;
  const std::size_t in_item = s.in_channels * s.in_h * s.in_w;
  const std::size_t out_item = s.out_channels * P;
  const bool pointwise = is_pointwise(s);
  const auto batch = static_cast<std::ptrdiff_t>(s.batch);

#pragma omp parallel
  {
    std::vector<T> colg(pointwise ? 0 : K * P);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const T* g = grad_out.data() + n * out_item;
      T* gx = grad_in.data() + n * in_item;
      if (pointwise) {
        gemm_tn_acc(weight.data(), s.out_channels, K, g, P, gx);
        continue;
      }
      std::fill(colg.begin(), colg.end(), T(0));
      gemm_tn_acc(weight.data(), s.out_channels, K, g, P, colg.data());
      col2im_add(s, colg.data(), gx);
    }
  }
}

template <class T>
void conv2d_backward_weight(const Conv2dShape& s, std::span<const T> in,
                            std::span<const T> grad_out,
                            std::span<T> grad_weight, std::span<T> grad_bias) {
  const std::size_t P = s.out_h() * s.out_w();
  const std::size_t K = s.in_channels * s.kernel * s.kernel;
  const std::size_t in_item = s.in_channels * s.in_h * s.in_w;
  const std::size_t out_item = s.out_channels * P;
  const std::size_t wsize = s.out_channels * K;
  const bool pointwise = is_pointwise(s);
  const auto batch = static_cast<std::ptrdiff_t>(s.batch);

  std::vector<T> partial_w(s.batch * wsize);
  std::vector<T> partial_b(grad_bias.empty() ? 0 : s.batch * s.out_channels);

#pragma omp parallel
  {
    std::vector<T> col(pointwise ? 0 : K * P);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const T* x = in.data() + n * in_item;
      const T* g = grad_out.data() + n * out_item;
      const T* B = x;
      if (!pointwise) {
        im2col(s, x, col.data());
        B = col.data();
      }
      T* pw = partial_w.data() + n * wsize;
      for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
        const T* grow = g + oc * P;
        for (std::size_t kk = 0; kk < K; ++kk) {
          pw[oc * K + kk] = dot(grow, B + kk * P, P);
        }
        if (!partial_b.empty()) {
          T acc = 0;
          for (std::size_t p = 0; p < P; ++p) acc += grow[p];
          partial_b[n * s.out_channels + oc] = acc;
        }
      }
    }
  }

  const auto wn = static_cast<std::ptrdiff_t>(wsize);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < wn; ++e) {
    T acc = 0;
    for (std::size_t n = 0; n < s.batch; ++n) acc += partial_w[n * wsize + e];
    grad_weight[e] += acc;
  }
  if (!partial_b.empty()) {
    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
      T acc = 0;
      for (std::size_t n = 0; n < s.batch; ++n) {
        acc += partial_b[n * s.out_channels + oc];
      }
      grad_bias[oc] += acc;
    }
  }
}

#define WAVEFR_INSTANTIATE_CONV(T)                                              \
  template void conv2d_forward<T>(const Conv2dShape&, std::span<const T>,     \
                                  std::span<const T>, std::span<const T>,     \
                                  std::span<T>);                              \
  template void conv2d_backward_input<T>(const Conv2dShape&,                  \
                                         std::span<const T>,                  \
                                         std::span<const T>, std::span<T>);   \
  template void conv2d_backward_weight<T>(const Conv2dShape&,                 \
                                          std::span<const T>,                 \
                                          std::span<const T>, std::span<T>,   \
                                          std::span<T>);

WAVEFR_INSTANTIATE_CONV(float)
WAVEFR_INSTANTIATE_CONV(double)

}  // namespace wfr::kernels
