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

#include <vector>

#include "wavefr/kernels/kernels.hpp"

namespace wfr::kernels {

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * n;
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

namespace {

// Source index table for every (output position, tap) of one axis.
std::vector<std::ptrdiff_t> reflect_table(std::size_t n, std::size_t taps) {
  const auto r = static_cast<std::ptrdiff_t>(taps / 2);
  std::vector<std::ptrdiff_t> t(n * taps);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < taps; ++k) {
      t[i * taps + k] = reflect_index(static_cast<std::ptrdiff_t>(i) +
                                          static_cast<std::ptrdiff_t>(k) - r,
                                      static_cast<std::ptrdiff_t>(n));
    }
  }
  return t;
}

}  // namespace

template <class T>
void filter_separable(std::span<const T> src, std::size_t planes,
                      std::size_t h, std::size_t w, std::span<const T> taps,
                      std::span<T> dst) {
  const std::size_t nt = taps.size();
  const auto xt = reflect_table(w, nt);
  const auto yt = reflect_table(h, nt);
  const auto np = static_cast<std::ptrdiff_t>(planes);
#pragma omp parallel
  {
    std::vector<T> tmp(h * w);
#pragma omp for schedule(static)
    for (std::ptrdiff_t pl = 0; pl < np; ++pl) {
      const T* in = src.data() + pl * h * w;
      T* out = dst.data() + pl * h * w;
      for (std::size_t y = 0; y < h; ++y) {
        const T* row = in + y * w;
        T* trow = tmp.data() + y * w;
        for (std::size_t x = 0; x < w; ++x) {
          const std::ptrdiff_t* idx = xt.data() + x * nt;
          T acc = 0;
          for (std::size_t k = 0; k < nt; ++k) acc += taps[k] * row[idx[k]];
          trow[x] = acc;
        }
      }
      for (std::size_t y = 0; y < h; ++y) {
        T* orow = out + y * w;
        const std::ptrdiff_t* idx = yt.data() + y * nt;
        for (std::size_t x = 0; x < w; ++x) orow[x] = 0;
        for (std::size_t k = 0; k < nt; ++k) {
          const T c = taps[k];
          const T* trow = tmp.data() + idx[k] * w;
          for (std::size_t x = 0; x < w; ++x) orow[x] += c * trow[x];
        }
      }
    }
  }
}

template <class T>
void filter_separable_adjoint(std::span<const T> grad_dst, std::size_t planes,
                              std::size_t h, std::size_t w,
                              std::span<const T> taps, std::span<T> grad_src) {
  const std::size_t nt = taps.size();
  const auto xt = reflect_table(w, nt);
  const auto yt = reflect_table(h, nt);
  const auto np = static_cast<std::ptrdiff_t>(planes);
#pragma omp parallel
  {
    std::vector<T> tmp(h * w);
#pragma omp for schedule(static)
    for (std::ptrdiff_t pl = 0; pl < np; ++pl) {
      const T* g = grad_dst.data() + pl * h * w;
      T* gs = grad_src.data() + pl * h * w;
      std::fill(tmp.begin(), tmp.end(), T(0));
      // Transpose of the vertical pass.
      for (std::size_t y = 0; y < h; ++y) {
        const T* grow = g + y * w;
        const std::ptrdiff_t* idx = yt.data() + y * nt;
        for (std::size_t k = 0; k < nt; ++k) {
          const T c = taps[k];
          T* trow = tmp.data() + idx[k] * w;
          for (std::size_t x = 0; x < w; ++x) trow[x] += c * grow[x];
        }
      }
      // Transpose of the horizontal pass.
      for (std::size_t y = 0; y < h; ++y) {
        const T* trow = tmp.data() + y * w;
        T* srow = gs + y * w;
        for (std::size_t x = 0; x < w; ++x) {
          const std::ptrdiff_t* idx = xt.data() + x * nt;
          const T v = trow[x];
          for (std::size_t k = 0; k < nt; ++k) srow[idx[k]] += taps[k] * v;
        }
      }
    }
  }
}

template void filter_separable<float>(std::span<const float>, std::size_t,
                                      std::size_t, std::size_t,
                                      std::span<const float>, std::span<float>);
template void filter_separable<double>(std::span<const double>, std::size_t,
                                       std::size_t, std::size_t,
                                       std::span<const double>,
                                       std::span<double>);
template void filter_separable_adjoint<float>(std::span<const float>,
                                              std::size_t, std::size_t,
                                              std::size_t,
                                              std::span<const float>,
                                              std::span<float>);
template void filter_separable_adjoint<double>(std::span<const double>,
                                               std::size_t, std::size_t,
                                               std::size_t,
                                               std::span<const double>,
                                               std::span<double>);

}  // namespace wfr::kernels
