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

// Differentiable operators. Image tensors are NCHW throughout.

#ifndef WAVEFR_NN_OPS_HPP_
#define WAVEFR_NN_OPS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "wavefr/metrics.hpp"
#include "wavefr/nn/tensor.hpp"

namespace wfr::nn {

// Elementwise; operands must have identical shapes.
template <class T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> scale(const Tensor<T>& a, T s);
template <class T> Tensor<T> add_scalar(const Tensor<T>& a, T s);

template <class T> Tensor<T> relu(const Tensor<T>& x);
template <class T> Tensor<T> silu(const Tensor<T>& x);

// Reductions to a one-element tensor.
template <class T> Tensor<T> sum(const Tensor<T>& x);
template <class T> Tensor<T> mean(const Tensor<T>& x);
template <class T> Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b);

// Cross-correlation; weight is OIHW, bias (optional) has O entries.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride = 1,
                 std::size_t padding = 0);

// x [N,in], weight [out,in], bias [out] -> [N,out].
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias);

template <class T>
Tensor<T> group_norm(const Tensor<T>& x, std::size_t groups,
                     const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = 1e-5);

// 2×2 mean pooling (H, W even) and 2× nearest-neighbour upsampling.
template <class T> Tensor<T> avg_pool2x(const Tensor<T>& x);
template <class T> Tensor<T> upsample_nearest2x(const Tensor<T>& x);

// x [N,C,H,W] + v [N,C] broadcast over H, W.
template <class T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& v);

template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);
template <class T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t begin,
                         std::size_t count);

// Orthonormal Haar on every channel: [N,C,H,W] -> [N,4C,H/2,W/2] laid out as
// [ll | lh | hl | hh], each block C channels. haar_idwt is the inverse.
template <class T> Tensor<T> haar_dwt(const Tensor<T>& x);
template <class T> Tensor<T> haar_idwt(const Tensor<T>& x);

// Depthwise separable filtering with symmetric reflection at the borders.
template <class T>
Tensor<T> gaussian_filter(const Tensor<T>& x, std::span<const double> taps);

// Mean SSIM over batch, channels and pixels (same definition as
// metrics::ssim); differentiable in both arguments.
template <class T>
Tensor<T> ssim(const Tensor<T>& a, const Tensor<T>& b,
               const metrics::SsimConfig& config = {});

// Sinusoidal embedding per timestep: [N, dim], first half sin(t·f_i), second
// half cos(t·f_i), f_i = 10000^(-2i/dim). dim must be even.
template <class T>
Tensor<T> time_embedding(std::span<const int> timesteps, std::size_t dim);

// Multiply-accumulates performed by conv2d forward passes on this thread.
std::uint64_t& conv_mac_counter();

}  // namespace wfr::nn

#endif  // WAVEFR_NN_OPS_HPP_
