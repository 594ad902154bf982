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

// Data-parallel inner loops shared by the wavelet, metrics, degradation and
// neural modules.
//
// Every kernel exists twice: an OpenMP version in wfr::kernels used by the
// library, and a plain serial version in wfr::kernels::reference kept for
// tests and benchmarks. The parallel versions partition work so that each
// output element is produced by exactly one thread with a fixed summation
// order; their results therefore do not depend on the thread count.
//
// All buffers are planar (NCHW). "planes" counts independent H×W planes.

#ifndef WAVEFR_KERNELS_KERNELS_HPP_
#define WAVEFR_KERNELS_KERNELS_HPP_

#include <cstddef>
#include <span>

namespace wfr::kernels {

struct Conv2dShape {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_h() const { return (in_h + 2 * padding - kernel) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * padding - kernel) / stride + 1; }
  std::size_t input_size() const { return batch * in_channels * in_h * in_w; }
  std::size_t weight_size() const {
    return out_channels * in_channels * kernel * kernel;
  }
  std::size_t output_size() const {
    return batch * out_channels * out_h() * out_w();
  }
  // Multiply-accumulates of one forward pass.
  std::size_t macs() const { return output_size() * in_channels * kernel * kernel; }
};

// Half-sample symmetric reflection ("d c b a | a b c d | d c b a"), folded as
// often as needed so any integer index maps into [0, n).
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n);

// --- convolution: cross-correlation, weight layout OIHW --------------------

// out = conv(in, weight) + bias. bias may be empty.
template <class T>
void conv2d_forward(const Conv2dShape& s, std::span<const T> in,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> out);

// grad_in += dL/din.
template <class T>
void conv2d_backward_input(const Conv2dShape& s, std::span<const T> grad_out,
                           std::span<const T> weight, std::span<T> grad_in);

// grad_weight += dL/dweight; grad_bias += dL/dbias when non-empty.
template <class T>
void conv2d_backward_weight(const Conv2dShape& s, std::span<const T> in,
                            std::span<const T> grad_out,
                            std::span<T> grad_weight, std::span<T> grad_bias);

// --- orthonormal 2D Haar ----------------------------------------------------
// src planes are h×w (both even); sub-band planes are (h/2)×(w/2).
// Per 2×2 block [[a,b],[c,d]]:
//   ll=(a+b+c+d)/2  lh=(a-b+c-d)/2  hl=(a+b-c-d)/2  hh=(a-b-c+d)/2

template <class T>
void haar_forward(std::span<const T> src, std::size_t planes, std::size_t h,
                  std::size_t w, std::span<T> ll, std::span<T> lh,
                  std::span<T> hl, std::span<T> hh);

template <class T>
void haar_inverse(std::span<const T> ll, std::span<const T> lh,
                  std::span<const T> hl, std::span<const T> hh,
                  std::size_t planes, std::size_t h, std::size_t w,
                  std::span<T> dst);

// --- separable filtering with symmetric reflection --------------------------
// taps has odd length 2r+1 and is centred: out[i] = sum_k taps[k+r] * in[refl(i+k)].
// Horizontal pass first, then vertical.

template <class T>
void filter_separable(std::span<const T> src, std::size_t planes,
                      std::size_t h, std::size_t w, std::span<const T> taps,
                      std::span<T> dst);

// grad_src += transpose(filter_separable)(grad_dst).
template <class T>
void filter_separable_adjoint(std::span<const T> grad_dst, std::size_t planes,
                              std::size_t h, std::size_t w,
                              std::span<const T> taps, std::span<T> grad_src);

namespace reference {

template <class T>
void conv2d_forward(const Conv2dShape& s, std::span<const T> in,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> out);
template <class T>
void conv2d_backward_input(const Conv2dShape& s, std::span<const T> grad_out,
                           std::span<const T> weight, std::span<T> grad_in);
template <class T>
void conv2d_backward_weight(const Conv2dShape& s, std::span<const T> in,
                            std::span<const T> grad_out,
                            std::span<T> grad_weight, std::span<T> grad_bias);
template <class T>
void haar_forward(std::span<const T> src, std::size_t planes, std::size_t h,
                  std::size_t w, std::span<T> ll, std::span<T> lh,
                  std::span<T> hl, std::span<T> hh);
template <class T>
void haar_inverse(std::span<const T> ll, std::span<const T> lh,
                  std::span<const T> hl, std::span<const T> hh,
                  std::size_t planes, std::size_t h, std::size_t w,
                  std::span<T> dst);
template <class T>
void filter_separable(std::span<const T> src, std::size_t planes,
                      std::size_t h, std::size_t w, std::span<const T> taps,
                      std::span<T> dst);

}  // namespace reference
}  // namespace wfr::kernels

#endif  // WAVEFR_KERNELS_KERNELS_HPP_
