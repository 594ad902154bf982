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

#include "wavefr/nn/ops.hpp"

#include <cmath>
#include <memory>

#include "wavefr/error.hpp"
#include "wavefr/kernels/kernels.hpp"

namespace wfr::nn {
namespace {

template <class T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

template <class T>
void require_rank(const Tensor<T>& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got shape " +
                     shape_string(x.shape()));
  }
}

template <class T>
Node<T>& in(Node<T>& n, std::size_t i) {
  return *n.inputs[i];
}

}  // namespace

std::uint64_t& conv_mac_counter() {
  thread_local std::uint64_t count = 0;
  return count;
}

// --- elementwise -------------------------------------------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "add");
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] + b.data()[i];
  return make_result<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& n) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node<T>& x = in(n, k);
      if (!x.requires_grad) continue;
      for (std::size_t i = 0; i < n.grad.size(); ++i) x.grad[i] += n.grad[i];
    }
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "sub");
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] - b.data()[i];
  return make_result<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    Node<T>& y = in(n, 1);
    if (x.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) x.grad[i] += n.grad[i];
    if (y.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) y.grad[i] -= n.grad[i];
  });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "mul");
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * b.data()[i];
  return make_result<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    Node<T>& y = in(n, 1);
    if (x.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        x.grad[i] += n.grad[i] * y.value[i];
    if (y.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        y.grad[i] += n.grad[i] * x.value[i];
  });
}

template <class T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "div");
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] / b.data()[i];
  return make_result<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    Node<T>& y = in(n, 1);
    if (x.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        x.grad[i] += n.grad[i] / y.value[i];
    if (y.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        y.grad[i] -= n.grad[i] * n.value[i] / y.value[i];
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * s;
  return make_result<T>(a.shape(), std::move(v), {a}, [s](Node<T>& n) {
    Node<T>& x = in(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) x.grad[i] += s * n.grad[i];
  });
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] + s;
  return make_result<T>(a.shape(), std::move(v), {a}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) x.grad[i] += n.grad[i];
  });
}

template <class T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] > T(0) ? a.data()[i] : T(0);
  return make_result<T>(a.shape(), std::move(v), {a}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (x.value[i] > T(0)) x.grad[i] += n.grad[i];
  });
}

template <class T>
Tensor<T> silu(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const T x = a.data()[i];
    v[i] = x / (T(1) + std::exp(-x));
  }
  return make_result<T>(a.shape(), std::move(v), {a}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const T z = x.value[i];
      const T s = T(1) / (T(1) + std::exp(-z));
      x.grad[i] += n.grad[i] * s * (T(1) + z * (T(1) - s));
    }
  });
}

// --- reductions --------------------------------------------------------------

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  double acc = 0.0;
  for (T v : a.data()) acc += v;
  return make_result<T>({1}, {static_cast<T>(acc)}, {a}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    for (T& g : x.grad) g += n.grad[0];
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
  double acc = 0.0;
  for (T v : a.data()) acc += v;
  const double count = static_cast<double>(a.numel());
  return make_result<T>({1}, {static_cast<T>(acc / count)}, {a},
                        [count](Node<T>& n) {
                          Node<T>& x = in(n, 0);
                          const T g = static_cast<T>(n.grad[0] / count);
                          for (T& gx : x.grad) gx += g;
                        });
}

template <class T>
Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "mse_loss");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    acc += d * d;
  }
  const double count = static_cast<double>(a.numel());
  return make_result<T>(
      {1}, {static_cast<T>(acc / count)}, {a, b}, [count](Node<T>& n) {
        Node<T>& x = in(n, 0);
        Node<T>& y = in(n, 1);
        const T c = static_cast<T>(2.0 * n.grad[0] / count);
        for (std::size_t i = 0; i < x.value.size(); ++i) {
          const T d = c * (x.value[i] - y.value[i]);
          if (x.requires_grad) x.grad[i] += d;
          if (y.requires_grad) y.grad[i] -= d;
        }
      });
}

template <class T>
Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "l1_loss");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    acc += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  }
  const double count = static_cast<double>(a.numel());
  return make_result<T>(
      {1}, {static_cast<T>(acc / count)}, {a, b}, [count](Node<T>& n) {
        Node<T>& x = in(n, 0);
        Node<T>& y = in(n, 1);
        const T c = static_cast<T>(n.grad[0] / count);
        for (std::size_t i = 0; i < x.value.size(); ++i) {
          const T d = x.value[i] - y.value[i];
          const T s = d > T(0) ? c : (d < T(0) ? -c : T(0));
          if (x.requires_grad) x.grad[i] += s;
          if (y.requires_grad) y.grad[i] -= s;
        }
      });
}

// --- convolution / linear ------------------------------------------------------

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding) {
  require_rank(x, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  if (stride == 0) throw ParameterError("conv2d: stride must be >= 1");
  kernels::Conv2dShape s;
  s.batch = x.dim(0);
  s.in_channels = x.dim(1);
  s.in_h = x.dim(2);
  s.in_w = x.dim(3);
  s.out_channels = weight.dim(0);
  s.kernel = weight.dim(2);
  s.stride = stride;
  s.padding = padding;
  if (weight.dim(1) != s.in_channels || weight.dim(3) != s.kernel) {
    throw ShapeError("conv2d: weight " + shape_string(weight.shape()) +
                     " does not match input " + shape_string(x.shape()) +
                     " (expected [O," + std::to_string(s.in_channels) +
                     ",k,k])");
  }
  if (s.in_h + 2 * padding < s.kernel || s.in_w + 2 * padding < s.kernel) {
    throw ShapeError("conv2d: kernel " + std::to_string(s.kernel) +
                     " larger than padded input " + shape_string(x.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != s.out_channels)) {
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) +
                     ", expected [" + std::to_string(s.out_channels) + "]");
  }
  std::vector<T> out(s.output_size());
  kernels::conv2d_forward<T>(s, x.data(), weight.data(),
                             has_bias ? bias.data() : std::span<const T>{}, out);
  conv_mac_counter() += s.macs();

  std::vector<Tensor<T>> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result<T>(
      {s.batch, s.out_channels, s.out_h(), s.out_w()}, std::move(out),
      std::move(inputs), [s, has_bias](Node<T>& n) {
        Node<T>& xi = in(n, 0);
        Node<T>& wi = in(n, 1);
        if (xi.requires_grad) {
          kernels::conv2d_backward_input<T>(s, n.grad, wi.value, xi.grad);
        }
        const bool want_b = has_bias && in(n, 2).requires_grad;
        if (wi.requires_grad || want_b) {
          std::vector<T> scratch_w;
          std::span<T> gw = wi.grad;
          if (!wi.requires_grad) {
            scratch_w.assign(wi.value.size(), T(0));
            gw = scratch_w;
          }
          std::span<T> gb = want_b ? std::span<T>(in(n, 2).grad) : std::span<T>{};
          kernels::conv2d_backward_weight<T>(s, xi.value, n.grad, gw, gb);
        }
      });
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias) {
  require_rank(x, 2, "linear input");
  require_rank(weight, 2, "linear weight");
  const std::size_t N = x.dim(0), I = x.dim(1), O = weight.dim(0);
  if (weight.dim(1) != I) {
    throw ShapeError("linear: weight " + shape_string(weight.shape()) +
                     " does not match input " + shape_string(x.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != O)) {
    throw ShapeError("linear: bias " + shape_string(bias.shape()));
  }
  std::vector<T> out(N * O);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      T acc = has_bias ? bias.data()[o] : T(0);
      for (std::size_t i = 0; i < I; ++i)
        acc += weight.data()[o * I + i] * x.data()[n * I + i];
      out[n * O + o] = acc;
    }
  std::vector<Tensor<T>> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result<T>(
      {N, O}, std::move(out), std::move(inputs), [N, I, O, has_bias](Node<T>& n) {
        Node<T>& xi = in(n, 0);
        Node<T>& wi = in(n, 1);
        for (std::size_t b = 0; b < N; ++b)
          for (std::size_t o = 0; o < O; ++o) {
            const T g = n.grad[b * O + o];
            if (xi.requires_grad)
              for (std::size_t i = 0; i < I; ++i)
                xi.grad[b * I + i] += g * wi.value[o * I + i];
            if (wi.requires_grad)
              for (std::size_t i = 0; i < I; ++i)
                wi.grad[o * I + i] += g * xi.value[b * I + i];
            if (has_bias && in(n, 2).requires_grad) in(n, 2).grad[o] += g;
          }
      });
}

// --- normalisation -----------------------------------------------------------

template <class T>
Tensor<T> group_norm(const Tensor<T>& x, std::size_t groups,
                     const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps) {
  require_rank(x, 4, "group_norm");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (groups == 0 || C % groups != 0) {
    throw ParameterError("group_norm: " + std::to_string(C) +
                         " channels not divisible into " +
                         std::to_string(groups) + " groups");
  }
  if (gamma.numel() != C || beta.numel() != C) {
    throw ShapeError("group_norm: affine terms must have " + std::to_string(C) +
                     " entries");
  }
  const std::size_t cg = C / groups, m = cg * HW;
  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(N * groups);
  std::vector<T> out(x.numel());
  const T* xv = x.data().data();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t base = (n * C + g * cg) * HW;
      double mu = 0.0;
      for (std::size_t i = 0; i < m; ++i) mu += xv[base + i];
      mu /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = xv[base + i] - mu;
        var += d * d;
      }
      var /= static_cast<double>(m);
      const double is = 1.0 / std::sqrt(var + eps);
      (*inv_std)[n * groups + g] = is;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t c = g * cg + i / HW;
        const T h = static_cast<T>((xv[base + i] - mu) * is);
        (*xhat)[base + i] = h;
        out[base + i] = gamma.data()[c] * h + beta.data()[c];
      }
    }
  return make_result<T>(
      x.shape(), std::move(out), {x, gamma, beta},
      [N, C, HW, groups, cg, m, xhat, inv_std](Node<T>& n) {
        Node<T>& xi = in(n, 0);
        Node<T>& ga = in(n, 1);
        Node<T>& be = in(n, 2);
        for (std::size_t b = 0; b < N; ++b)
          for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t base = (b * C + g * cg) * HW;
            double sum_d = 0.0, sum_dh = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
              const std::size_t c = g * cg + i / HW;
              const double gy = n.grad[base + i];
              const double h = (*xhat)[base + i];
              if (ga.requires_grad) ga.grad[c] += static_cast<T>(gy * h);
              if (be.requires_grad) be.grad[c] += static_cast<T>(gy);
              const double d = gy * ga.value[c];
              sum_d += d;
              sum_dh += d * h;
            }
            if (!xi.requires_grad) continue;
            const double md = sum_d / static_cast<double>(m);
            const double mdh = sum_dh / static_cast<double>(m);
            const double is = (*inv_std)[b * groups + g];
            for (std::size_t i = 0; i < m; ++i) {
              const std::size_t c = g * cg + i / HW;
              const double d = static_cast<double>(n.grad[base + i]) * ga.value[c];
              const double h = (*xhat)[base + i];
              xi.grad[base + i] += static_cast<T>(is * (d - md - h * mdh));
            }
          }
      });
}

// --- resampling --------------------------------------------------------------

template <class T>
Tensor<T> avg_pool2x(const Tensor<T>& x) {
  require_rank(x, 4, "avg_pool2x");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 != 0 || W % 2 != 0) {
    throw DimensionError("avg_pool2x: spatial size " + std::to_string(H) + "x" +
                         std::to_string(W) + " is not even");
  }
  const std::size_t h = H / 2, w = W / 2, planes = N * C;
  std::vector<T> out(planes * h * w);
  const T* v = x.data().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) {
        const T* s = v + (p * H + 2 * y) * W + 2 * xx;
        out[(p * h + y) * w + xx] = T(0.25) * ((s[0] + s[1]) + (s[W] + s[W + 1]));
      }
  return make_result<T>({N, C, h, w}, std::move(out), {x},
                        [planes, H, W, h, w](Node<T>& n) {
                          Node<T>& xi = in(n, 0);
                          for (std::size_t p = 0; p < planes; ++p)
                            for (std::size_t y = 0; y < h; ++y)
                              for (std::size_t xx = 0; xx < w; ++xx) {
                                const T g = T(0.25) * n.grad[(p * h + y) * w + xx];
                                T* d = xi.grad.data() + (p * H + 2 * y) * W + 2 * xx;
                                d[0] += g;
                                d[1] += g;
                                d[W] += g;
                                d[W + 1] += g;
                              }
                        });
}

template <class T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
  require_rank(x, 4, "upsample_nearest2x");
  const std::size_t N = x.dim(0), C = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t H = 2 * h, W = 2 * w, planes = N * C;
  std::vector<T> out(planes * H * W);
  const T* v = x.data().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t xx = 0; xx < W; ++xx)
        out[(p * H + y) * W + xx] = v[(p * h + y / 2) * w + xx / 2];
  return make_result<T>({N, C, H, W}, std::move(out), {x},
                        [planes, H, W, h, w](Node<T>& n) {
                          Node<T>& xi = in(n, 0);
                          for (std::size_t p = 0; p < planes; ++p)
                            for (std::size_t y = 0; y < H; ++y)
                              for (std::size_t xx = 0; xx < W; ++xx)
                                xi.grad[(p * h + y / 2) * w + xx / 2] +=
                                    n.grad[(p * H + y) * W + xx];
                        });
}

// --- channel plumbing ----------------------------------------------------------

template <class T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& v) {
  require_rank(x, 4, "add_channel_bias");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (v.rank() != 2 || v.dim(0) != N || v.dim(1) != C) {
    throw ShapeError("add_channel_bias: bias " + shape_string(v.shape()) +
                     " does not match " + shape_string(x.shape()));
  }
  std::vector<T> out(x.numel());
  for (std::size_t p = 0; p < N * C; ++p)
    for (std::size_t i = 0; i < HW; ++i)
      out[p * HW + i] = x.data()[p * HW + i] + v.data()[p];
  return make_result<T>(x.shape(), std::move(out), {x, v}, [N, C, HW](Node<T>& n) {
    Node<T>& xi = in(n, 0);
    Node<T>& vi = in(n, 1);
    for (std::size_t p = 0; p < N * C; ++p) {
      T acc = 0;
      for (std::size_t i = 0; i < HW; ++i) {
        const T g = n.grad[p * HW + i];
        if (xi.requires_grad) xi.grad[p * HW + i] += g;
        acc += g;
      }
      if (vi.requires_grad) vi.grad[p] += acc;
    }
  });
}

template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Tensor<T>& first = parts.front();
  require_rank(first, 4, "concat_channels");
  const std::size_t N = first.dim(0), H = first.dim(2), W = first.dim(3);
  std::vector<std::size_t> chans;
  std::size_t C = 0;
  for (const auto& p : parts) {
    require_rank(p, 4, "concat_channels");
    if (p.dim(0) != N || p.dim(2) != H || p.dim(3) != W) {
      throw ShapeError("concat_channels: " + shape_string(p.shape()) +
                       " incompatible with " + shape_string(first.shape()));
    }
    chans.push_back(p.dim(1));
    C += p.dim(1);
  }
  const std::size_t HW = H * W;
  std::vector<T> out(N * C * HW);
  for (std::size_t n = 0; n < N; ++n) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const T* src = parts[k].data().data() + n * chans[k] * HW;
      std::copy(src, src + chans[k] * HW, out.data() + (n * C + off) * HW);
      off += chans[k];
    }
  }
  return make_result<T>({N, C, H, W}, std::move(out), parts,
                        [N, C, HW, chans](Node<T>& n) {
                          for (std::size_t b = 0; b < N; ++b) {
                            std::size_t off = 0;
                            for (std::size_t k = 0; k < chans.size(); ++k) {
                              Node<T>& p = in(n, k);
                              if (p.requires_grad) {
                                const T* g = n.grad.data() + (b * C + off) * HW;
                                T* d = p.grad.data() + b * chans[k] * HW;
                                for (std::size_t i = 0; i < chans[k] * HW; ++i)
                                  d[i] += g[i];
                              }
                              off += chans[k];
                            }
                          }
                        });
}

template <class T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t begin,
                         std::size_t count) {
  require_rank(x, 4, "slice_channels");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (begin + count > C || count == 0) {
    throw ShapeError("slice_channels: [" + std::to_string(begin) + "," +
                     std::to_string(begin + count) + ") out of " +
                     std::to_string(C) + " channels");
  }
  std::vector<T> out(N * count * HW);
  for (std::size_t n = 0; n < N; ++n) {
    const T* src = x.data().data() + (n * C + begin) * HW;
    std::copy(src, src + count * HW, out.data() + n * count * HW);
  }
  return make_result<T>({N, count, x.dim(2), x.dim(3)}, std::move(out), {x},
                        [N, C, HW, begin, count](Node<T>& n) {
                          Node<T>& xi = in(n, 0);
                          for (std::size_t b = 0; b < N; ++b) {
                            T* d = xi.grad.data() + (b * C + begin) * HW;
                            const T* g = n.grad.data() + b * count * HW;
                            for (std::size_t i = 0; i < count * HW; ++i) d[i] += g[i];
                          }
                        });
}

// --- Haar --------------------------------------------------------------------

namespace {

// Per item: src [C,H,W] -> dst [4C,H/2,W/2] (or += when accumulate).
template <class T>
void haar_fwd_items(const T* src, std::size_t N, std::size_t C, std::size_t H,
                    std::size_t W, T* dst, bool accumulate) {
  const std::size_t q = C * (H / 2) * (W / 2);
  std::vector<T> tmp(accumulate ? 4 * q : 0);
  for (std::size_t n = 0; n < N; ++n) {
    const T* s = src + n * C * H * W;
    T* d = accumulate ? tmp.data() : dst + n * 4 * q;
    kernels::haar_forward<T>({s, C * H * W}, C, H, W, {d, q}, {d + q, q},
                             {d + 2 * q, q}, {d + 3 * q, q});
    if (accumulate) {
      T* o = dst + n * 4 * q;
      for (std::size_t i = 0; i < 4 * q; ++i) o[i] += tmp[i];
    }
  }
}

// Per item: src [4C,h,w] -> dst [C,2h,2w] (or += when accumulate).
template <class T>
void haar_inv_items(const T* src, std::size_t N, std::size_t C, std::size_t h,
                    std::size_t w, T* dst, bool accumulate) {
  const std::size_t q = C * h * w;
  std::vector<T> tmp(accumulate ? 4 * q : 0);
  for (std::size_t n = 0; n < N; ++n) {
    const T* s = src + n * 4 * q;
    T* d = accumulate ? tmp.data() : dst + n * 4 * q;
    kernels::haar_inverse<T>({s, q}, {s + q, q}, {s + 2 * q, q},
                             {s + 3 * q, q}, C, 2 * h, 2 * w, {d, 4 * q});
    if (accumulate) {
      T* o = dst + n * 4 * q;
      for (std::size_t i = 0; i < 4 * q; ++i) o[i] += tmp[i];
    }
  }
}

}  // namespace

template <class T>
Tensor<T> haar_dwt(const Tensor<T>& x) {
  require_rank(x, 4, "haar_dwt");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 != 0) throw DimensionError("haar_dwt: height " + std::to_string(H) + " is odd");
  if (W % 2 != 0) throw DimensionError("haar_dwt: width " + std::to_string(W) + " is odd");
  std::vector<T> out(x.numel());
  haar_fwd_items(x.data().data(), N, C, H, W, out.data(), false);
  // The transform is orthonormal, so its adjoint is its inverse.
  return make_result<T>({N, 4 * C, H / 2, W / 2}, std::move(out), {x},
                        [N, C, H, W](Node<T>& n) {
                          haar_inv_items(n.grad.data(), N, C, H / 2, W / 2,
                                         in(n, 0).grad.data(), true);
                        });
}

template <class T>
Tensor<T> haar_idwt(const Tensor<T>& x) {
  require_rank(x, 4, "haar_idwt");
  const std::size_t N = x.dim(0), C4 = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (C4 % 4 != 0) {
    throw ShapeError("haar_idwt: channel count " + std::to_string(C4) +
                     " is not a multiple of 4");
  }
  const std::size_t C = C4 / 4;
  std::vector<T> out(x.numel());
  haar_inv_items(x.data().data(), N, C, h, w, out.data(), false);
  return make_result<T>({N, C, 2 * h, 2 * w}, std::move(out), {x},
                        [N, C, h, w](Node<T>& n) {
                          haar_fwd_items(n.grad.data(), N, C, 2 * h, 2 * w,
                                         in(n, 0).grad.data(), true);
                        });
}

// --- filtering / SSIM ----------------------------------------------------------

template <class T>
Tensor<T> gaussian_filter(const Tensor<T>& x, std::span<const double> taps) {
  require_rank(x, 4, "gaussian_filter");
  if (taps.size() % 2 == 0) throw ParameterError("gaussian_filter: even tap count");
  const std::size_t planes = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  std::vector<T> t(taps.begin(), taps.end());
  std::vector<T> out(x.numel());
  kernels::filter_separable<T>(x.data(), planes, H, W, t, out);
  return make_result<T>(x.shape(), std::move(out), {x},
                        [planes, H, W, t](Node<T>& n) {
                          kernels::filter_separable_adjoint<T>(
                              n.grad, planes, H, W, t, in(n, 0).grad);
                        });
}

template <class T>
Tensor<T> ssim(const Tensor<T>& a, const Tensor<T>& b,
               const metrics::SsimConfig& config) {
  require_same(a, b, "ssim");
  require_rank(a, 4, "ssim");
  const auto win = static_cast<std::size_t>(config.window);
  if (a.dim(2) < win || a.dim(3) < win) {
    throw DimensionError("ssim: spatial size " + shape_string(a.shape()) +
                         " smaller than the window");
  }
  const std::vector<double> taps = metrics::ssim_window(config);
  const T c1 = static_cast<T>(config.c1()), c2 = static_cast<T>(config.c2());
  const auto mu_a = gaussian_filter(a, taps);
  const auto mu_b = gaussian_filter(b, taps);
  const auto mu_aa = mul(mu_a, mu_a);
  const auto mu_bb = mul(mu_b, mu_b);
  const auto mu_ab = mul(mu_a, mu_b);
  const auto var_a = sub(gaussian_filter(mul(a, a), taps), mu_aa);
  const auto var_b = sub(gaussian_filter(mul(b, b), taps), mu_bb);
  const auto cov = sub(gaussian_filter(mul(a, b), taps), mu_ab);
  const auto num = mul(add_scalar(scale(mu_ab, T(2)), c1),
                       add_scalar(scale(cov, T(2)), c2));
  const auto den = mul(add_scalar(add(mu_aa, mu_bb), c1),
                       add_scalar(add(var_a, var_b), c2));
  return mean(div(num, den));
}

template <class T>
Tensor<T> time_embedding(std::span<const int> timesteps, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) {
    throw ParameterError("time_embedding: dim must be even and positive, got " +
                         std::to_string(dim));
  }
  const std::size_t half = dim / 2;
  std::vector<T> out(timesteps.size() * dim);
  for (std::size_t n = 0; n < timesteps.size(); ++n) {
    for (std::size_t i = 0; i < half; ++i) {
      const double freq =
          std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
      const double arg = static_cast<double>(timesteps[n]) * freq;
      out[n * dim + i] = static_cast<T>(std::sin(arg));
      out[n * dim + half + i] = static_cast<T>(std::cos(arg));
    }
  }
  return Tensor<T>({timesteps.size(), dim}, std::move(out));
}

#define WAVEFR_INSTANTIATE_OPS(T)                                               \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> div<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                           \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                      \
  template Tensor<T> relu<T>(const Tensor<T>&);                               \
  template Tensor<T> silu<T>(const Tensor<T>&);                               \
  template Tensor<T> sum<T>(const Tensor<T>&);                                \
  template Tensor<T> mean<T>(const Tensor<T>&);                               \
  template Tensor<T> mse_loss<T>(const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> l1_loss<T>(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&,            \
                               const Tensor<T>&, std::size_t, std::size_t);   \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&,            \
                               const Tensor<T>&);                             \
  template Tensor<T> group_norm<T>(const Tensor<T>&, std::size_t,             \
                                   const Tensor<T>&, const Tensor<T>&,        \
                                   double);                                   \
  template Tensor<T> avg_pool2x<T>(const Tensor<T>&);                         \
  template Tensor<T> upsample_nearest2x<T>(const Tensor<T>&);                 \
  template Tensor<T> add_channel_bias<T>(const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> concat_channels<T>(const std::vector<Tensor<T>>&);       \
  template Tensor<T> slice_channels<T>(const Tensor<T>&, std::size_t,         \
                                       std::size_t);                          \
  template Tensor<T> haar_dwt<T>(const Tensor<T>&);                           \
  template Tensor<T> haar_idwt<T>(const Tensor<T>&);                          \
  template Tensor<T> gaussian_filter<T>(const Tensor<T>&,                     \
                                        std::span<const double>);             \
  template Tensor<T> ssim<T>(const Tensor<T>&, const Tensor<T>&,              \
                             const metrics::SsimConfig&);                     \
  template Tensor<T> time_embedding<T>(std::span<const int>, std::size_t);

WAVEFR_INSTANTIATE_OPS(float)
WAVEFR_INSTANTIATE_OPS(double)

}  // namespace wfr::nn
