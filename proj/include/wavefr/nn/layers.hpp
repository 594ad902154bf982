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

// Parameterised building blocks shared by the denoiser and the
// high-frequency network. Each block has a registration function that adds
// its tensors to a ParameterStore under a name prefix, and a forward function
// that reads them back by the same prefix.

#ifndef WAVEFR_NN_LAYERS_HPP_
#define WAVEFR_NN_LAYERS_HPP_

#include <string>

#include "wavefr/nn/ops.hpp"
#include "wavefr/nn/params.hpp"

namespace wfr::nn {

enum class Resample { kDown, kUp };

// Largest divisor of channels that does not exceed max_groups.
std::size_t groups_for(std::size_t channels, std::size_t max_groups);

// <p>.w [out,in,k,k], <p>.b [out]. zero_init gives an all-zero kernel.
template <class T>
void add_conv(ParameterStore<T>& ps, const std::string& p, std::size_t in,
              std::size_t out, std::size_t k, RngStream& rng,
              bool zero_init = false);
// 'same' padding for odd k.
template <class T>
Tensor<T> conv(const ParameterStore<T>& ps, const std::string& p,
               const Tensor<T>& x);

// <p>.w [out,in], <p>.b [out].
template <class T>
void add_linear(ParameterStore<T>& ps, const std::string& p, std::size_t in,
                std::size_t out, RngStream& rng);
template <class T>
Tensor<T> dense(const ParameterStore<T>& ps, const std::string& p,
                const Tensor<T>& x);

// <p>.gamma = 1, <p>.beta = 0.
template <class T>
void add_norm(ParameterStore<T>& ps, const std::string& p, std::size_t channels);
template <class T>
Tensor<T> norm(const ParameterStore<T>& ps, const std::string& p,
               const Tensor<T>& x, std::size_t max_groups);

// Pre-activation residual block:
//   h = conv1(silu(norm1(x)))  [+ temb_proj(silu(temb)) per channel]
//   h = conv2(silu(norm2(h)))
//   out = skip(x) + h,  skip = 1×1 conv when in != out, identity otherwise.
// temb_dim == 0 builds a block without timestep conditioning.
template <class T>
void add_res_block(ParameterStore<T>& ps, const std::string& p, std::size_t in,
                   std::size_t out, std::size_t temb_dim, RngStream& rng);
template <class T>
Tensor<T> res_block(const ParameterStore<T>& ps, const std::string& p,
                    const Tensor<T>& x, const Tensor<T>& temb,
                    std::size_t max_groups);

// Down: 2×2 mean pooling (no parameters). Up: nearest 2× then the 3×3
// convolution <p> (identity-initialised by add_upsample).
template <class T>
void add_upsample(ParameterStore<T>& ps, const std::string& p,
                  std::size_t channels);
template <class T>
Tensor<T> resample2x(const Tensor<T>& x, Resample direction,
                     const ParameterStore<T>* ps = nullptr,
                     const std::string& p = {});

}  // namespace wfr::nn

#endif  // WAVEFR_NN_LAYERS_HPP_
