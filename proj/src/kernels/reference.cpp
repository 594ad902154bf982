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

// Straight-line serial kernels. Slow on purpose: one output element at a
// time, directly from the defining formula.

#include "wavefr/kernels/kernels.hpp"

namespace wfr::kernels::reference {
namespace {

template <class T>
T input_at(const Conv2dShape& s, std::span<const T> in, std::size_t n,
           std::size_t ic, std::ptrdiff_t y, std::ptrdiff_t x) {
  if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(s.in_h) ||
      x >= static_cast<std::ptrdiff_t>(s.in_w)) {
    return T(0);
  }
  return in[((n * s.in_channels + ic) * s.in_h + y) * s.in_w + x];
}

}  // namespace

template <class T>
void conv2d_forward(const Conv2dShape& s, std::span<const T> in,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> out) {
  const std::size_t k = s.kernel, oh = s.out_h(), ow = s.out_w();
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t oc = 0; oc < s.out_channels; ++oc)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T acc = bias.empty() ? T(0) : bias[oc];
          for (std::size_t ic = 0; ic < s.in_channels; ++ic)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                               static_cast<std::ptrdiff_t>(s.padding);
                const auto x = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                               static_cast<std::ptrdiff_t>(s.padding);
                acc += weight[((oc * s.in_channels + ic) * k + ky) * k + kx] *
                       input_at(s, in, n, ic, y, x);
              }
          out[((n * s.out_channels + oc) * oh + oy) * ow + ox] = acc;
        }
}

template <class T>
void conv2d_backward_input(const Conv2dShape& s, std::span<const T> grad_out,
                           std::span<const T> weight, std::span<T> grad_in) {
  const std::size_t k = s.kernel, oh = s.out_h(), ow = s.out_w();
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t oc = 0; oc < s.out_channels; ++oc)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T g = grad_out[((n * s.out_channels + oc) * oh + oy) * ow + ox];
          for (std::size_t ic = 0; ic < s.in_channels; ++ic)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                               static_cast<std::ptrdiff_t>(s.padding);
                const auto x = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                               static_cast<std::ptrdiff_t>(s.padding);
                if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(s.in_h) ||
                    x >= static_cast<std::ptrdiff_t>(s.in_w)) {
                  continue;
                }
                grad_in[((n * s.in_channels + ic) * s.in_h + y) * s.in_w + x] +=
                    g * weight[((oc * s.in_channels + ic) * k + ky) * k + kx];
              }
        }
}

template <class T>
void conv2d_backward_weight(const Conv2dShape& s, std::span<const T> in,
                            std::span<const T> grad_out,
                            std::span<T> grad_weight, std::span<T> grad_bias) {
  const std::size_t k = s.kernel, oh = s.out_h(), ow = s.out_w();
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t oc = 0; oc < s.out_channels; ++oc)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T g = grad_out[((n * s.out_channels + oc) * oh + oy) * ow + ox];
          if (!grad_bias.empty()) grad_bias[oc] += g;
          for (std::size_t ic = 0; ic < s.in_channels; ++ic)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                               static_cast<std::ptrdiff_t>(s.padding);
                const auto x = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                               static_cast<std::ptrdiff_t>(s.padding);
                grad_weight[((oc * s.in_channels + ic) * k + ky) * k + kx] +=
                    g * input_at(s, in, n, ic, y, x);
              }
        }
}

template <class T>
void haar_forward(std::span<const T> src, std::size_t planes, std::size_t h,
                  std::size_t w, std::span<T> ll, std::span<T> lh,
                  std::span<T> hl, std::span<T> hh) {
  const std::size_t h2 = h / 2, w2 = w / 2;
  for (std::size_t pl = 0; pl < planes; ++pl)
    for (std::size_t y = 0; y < h2; ++y)
      for (std::size_t x = 0; x < w2; ++x) {
        const T a = src[(pl * h + 2 * y) * w + 2 * x];
        const T b = src[(pl * h + 2 * y) * w + 2 * x + 1];
        const T c = src[(pl * h + 2 * y + 1) * w + 2 * x];
        const T d = src[(pl * h + 2 * y + 1) * w + 2 * x + 1];
        const std::size_t o = (pl * h2 + y) * w2 + x;
        ll[o] = T(0.5) * ((a + b) + (c + d));
        lh[o] = T(0.5) * ((a - b) + (c - d));
        hl[o] = T(0.5) * ((a + b) - (c + d));
        hh[o] = T(0.5) * ((a - b) - (c - d));
      }
}

template <class T>
void haar_inverse(std::span<const T> ll, std::span<const T> lh,
                  std::span<const T> hl, std::span<const T> hh,
                  std::size_t planes, std::size_t h, std::size_t w,
                  std::span<T> dst) {
  const std::size_t h2 = h / 2, w2 = w / 2;
  for (std::size_t pl = 0; pl < planes; ++pl)
    for (std::size_t y = 0; y < h2; ++y)
      for (std::size_t x = 0; x < w2; ++x) {
        const std::size_t o = (pl * h2 + y) * w2 + x;
        const T s = ll[o], p = lh[o], q = hl[o], u = hh[o];
        dst[(pl * h + 2 * y) * w + 2 * x] = T(0.5) * ((s + p) + (q + u));
        dst[(pl * h + 2 * y) * w + 2 * x + 1] = T(0.5) * ((s - p) + (q - u));
        dst[(pl * h + 2 * y + 1) * w + 2 * x] = T(0.5) * ((s + p) - (q + u));
        dst[(pl * h + 2 * y + 1) * w + 2 * x + 1] = T(0.5) * ((s - p) - (q - u));
      }
}

template <class T>
void filter_separable(std::span<const T> src, std::size_t planes,
                      std::size_t h, std::size_t w, std::span<const T> taps,
                      std::span<T> dst) {
  const auto r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const T* in = src.data() + pl * h * w;
    T* out = dst.data() + pl * h * w;
    for (std::ptrdiff_t y = 0; y < H; ++y)
      for (std::ptrdiff_t x = 0; x < W; ++x) {
        // Same association as the parallel kernel: rows first, then columns.
        T acc = 0;
        for (std::ptrdiff_t ky = -r; ky <= r; ++ky) {
          const std::ptrdiff_t sy = reflect_index(y + ky, H);
          T row = 0;
          for (std::ptrdiff_t kx = -r; kx <= r; ++kx) {
            row += taps[kx + r] * in[sy * W + reflect_index(x + kx, W)];
          }
          acc += taps[ky + r] * row;
        }
        out[y * W + x] = acc;
      }
  }
}

#define WAVEFR_INSTANTIATE_REFERENCE(T)                                         \
  template void conv2d_forward<T>(const Conv2dShape&, std::span<const T>,     \
                                  std::span<const T>, std::span<const T>,     \
                                  std::span<T>);                              \
  template void conv2d_backward_input<T>(const Conv2dShape&,                  \
                                         std::span<const T>,                  \
                                         std::span<const T>, std::span<T>);   \
  template void conv2d_backward_weight<T>(const Conv2dShape&,                 \
                                          std::span<const T>,                 \
                                          std::span<const T>, std::span<T>,   \
                                          std::span<T>);                      \
  template void haar_forward<T>(std::span<const T>, std::size_t, std::size_t, \
                                std::size_t, std::span<T>, std::span<T>,      \
                                std::span<T>, std::span<T>);                  \
  template void haar_inverse<T>(std::span<const T>, std::span<const T>,       \
                                std::span<const T>, std::span<const T>,       \
                                std::size_t, std::size_t, std::size_t,        \
                                std::span<T>);                                \
  template void filter_separable<T>(std::span<const T>, std::size_t,          \
                                    std::size_t, std::size_t,                 \
                                    std::span<const T>, std::span<T>);

WAVEFR_INSTANTIATE_REFERENCE(float)
WAVEFR_INSTANTIATE_REFERENCE(double)

}  // namespace wfr::kernels::reference
