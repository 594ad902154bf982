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

#include "wavefr/nn/layers.hpp"

#include "wavefr/error.hpp"

namespace wfr::nn {

std::size_t groups_for(std::size_t channels, std::size_t max_groups) {
  for (std::size_t g = std::min(channels, max_groups); g > 1; --g) {
    if (channels % g == 0) return g;
  }
  return 1;
}

template <class T>
void add_conv(ParameterStore<T>& ps, const std::string& p, std::size_t in,
              std::size_t out, std::size_t k, RngStream& rng, bool zero_init) {
  const Shape shape{out, in, k, k};
  ps.add(p + ".w", zero_init ? Tensor<T>(shape) : he_normal<T>(shape, in * k * k, rng));
  ps.add(p + ".b", Tensor<T>(Shape{out}));
}

template <class T>
Tensor<T> conv(const ParameterStore<T>& ps, const std::string& p,
               const Tensor<T>& x) {
  const Tensor<T>& w = ps.get(p + ".w");
  return conv2d(x, w, ps.get(p + ".b"), 1, w.dim(2) / 2);
}

template <class T>
void add_linear(ParameterStore<T>& ps, const std::string& p, std::size_t in,
                std::size_t out, RngStream& rng) {
  ps.add(p + ".w", he_normal<T>({out, in}, in, rng));
  ps.add(p + ".b", Tensor<T>(Shape{out}));
}

template <class T>
Tensor<T> dense(const ParameterStore<T>& ps, const std::string& p,
                const Tensor<T>& x) {
  return linear(x, ps.get(p + ".w"), ps.get(p + ".b"));
}

template <class T>
void add_norm(ParameterStore<T>& ps, const std::string& p, std::size_t channels) {
  ps.add(p + ".gamma", Tensor<T>(Shape{channels}, T(1)));
  ps.add(p + ".beta", Tensor<T>(Shape{channels}));
}

template <class T>
Tensor<T> norm(const ParameterStore<T>& ps, const std::string& p,
               const Tensor<T>& x, std::size_t max_groups) {
  return group_norm(x, groups_for(x.dim(1), max_groups), ps.get(p + ".gamma"),
                    ps.get(p + ".beta"));
}

template <class T>
void add_res_block(ParameterStore<T>& ps, const std::string& p, std::size_t in,
                   std::size_t out, std::size_t temb_dim, RngStream& rng) {
  add_norm(ps, p + ".norm1", in);
  add_conv(ps, p + ".conv1", in, out, 3, rng);
  if (temb_dim > 0) add_linear(ps, p + ".temb", temb_dim, out, rng);
  add_norm(ps, p + ".norm2", out);
  add_conv(ps, p + ".conv2", out, out, 3, rng);
  if (in != out) add_conv(ps, p + ".skip", in, out, 1, rng);
}

template <class T>
Tensor<T> res_block(const ParameterStore<T>& ps, const std::string& p,
                    const Tensor<T>& x, const Tensor<T>& temb,
                    std::size_t max_groups) {
  Tensor<T> h = conv(ps, p + ".conv1", silu(norm(ps, p + ".norm1", x, max_groups)));
  if (ps.contains(p + ".temb.w")) {
    if (!temb.defined()) {
      throw ContractError("res_block " + p + ": timestep embedding required");
    }
    h = add_channel_bias(h, dense(ps, p + ".temb", silu(temb)));
  }
  h = conv(ps, p + ".conv2", silu(norm(ps, p + ".norm2", h, max_groups)));
  const Tensor<T> skip = ps.contains(p + ".skip.w") ? conv(ps, p + ".skip", x) : x;
  return add(skip, h);
}

template <class T>
void add_upsample(ParameterStore<T>& ps, const std::string& p,
                  std::size_t channels) {
  ps.add(p + ".w", identity_kernel<T>(channels, 3));
  ps.add(p + ".b", Tensor<T>(Shape{channels}));
}

template <class T>
Tensor<T> resample2x(const Tensor<T>& x, Resample direction,
                     const ParameterStore<T>* ps, const std::string& p) {
  if (direction == Resample::kDown) return avg_pool2x(x);
  if (ps == nullptr) {
    throw ContractError("resample2x: upsampling needs convolution parameters");
  }
  return conv(*ps, p, upsample_nearest2x(x));
}

#define WAVEFR_INSTANTIATE_LAYERS(T)                                            \
  template void add_conv<T>(ParameterStore<T>&, const std::string&,           \
                            std::size_t, std::size_t, std::size_t,            \
                            RngStream&, bool);                                \
  template Tensor<T> conv<T>(const ParameterStore<T>&, const std::string&,    \
                             const Tensor<T>&);                               \
  template void add_linear<T>(ParameterStore<T>&, const std::string&,         \
                              std::size_t, std::size_t, RngStream&);          \
  template Tensor<T> dense<T>(const ParameterStore<T>&, const std::string&,   \
                              const Tensor<T>&);                              \
  template void add_norm<T>(ParameterStore<T>&, const std::string&,           \
                            std::size_t);                                     \
  template Tensor<T> norm<T>(const ParameterStore<T>&, const std::string&,    \
                             const Tensor<T>&, std::size_t);                  \
  template void add_res_block<T>(ParameterStore<T>&, const std::string&,      \
                                 std::size_t, std::size_t, std::size_t,       \
                                 RngStream&);                                 \
  template Tensor<T> res_block<T>(const ParameterStore<T>&,                   \
                                  const std::string&, const Tensor<T>&,       \
                                  const Tensor<T>&, std::size_t);             \
  template void add_upsample<T>(ParameterStore<T>&, const std::string&,       \
                                std::size_t);                                 \
  template Tensor<T> resample2x<T>(const Tensor<T>&, Resample,                \
                                   const ParameterStore<T>*,                  \
                                   const std::string&);

WAVEFR_INSTANTIATE_LAYERS(float)
WAVEFR_INSTANTIATE_LAYERS(double)

}  // namespace wfr::nn
