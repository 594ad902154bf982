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

#include "wavefr/kernels/kernels.hpp"

namespace wfr::kernels {

template <class T>
void haar_forward(std::span<const T> src, std::size_t planes, std::size_t h,
                  std::size_t w, std::span<T> ll, std::span<T> lh,
                  std::span<T> hl, std::span<T> hh) {
  const std::size_t h2 = h / 2, w2 = w / 2;
  const auto rows = static_cast<std::ptrdiff_t>(planes * h2);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t pl = static_cast<std::size_t>(r) / h2;
    const std::size_t y = static_cast<std::size_t>(r) % h2;
    const T* top = src.data() + (pl * h + 2 * y) * w;
    const T* bot = top + w;
    const std::size_t o = (pl * h2 + y) * w2;
    for (std::size_t x = 0; x < w2; ++x) {
      const T a = top[2 * x], b = top[2 * x + 1];
      const T c = bot[2 * x], d = bot[2 * x + 1];
      ll[o + x] = T(0.5) * ((a + b) + (c + d));
      lh[o + x] = T(0.5) * ((a - b) + (c - d));
      hl[o + x] = T(0.5) * ((a + b) - (c + d));
      hh[o + x] = T(0.5) * ((a - b) - (c - d));
    }
  }
}

template <class T>
void haar_inverse(std::span<const T> ll, std::span<const T> lh,
                  std::span<const T> hl, std::span<const T> hh,
                  std::size_t planes, std::size_t h, std::size_t w,
                  std::span<T> dst) {
  const std::size_t h2 = h / 2, w2 = w / 2;
  const auto rows = static_cast<std::ptrdiff_t>(planes * h2);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t pl = static_cast<std::size_t>(r) / h2;
    const std::size_t y = static_cast<std::size_t>(r) % h2;
    T* top = dst.data() + (pl * h + 2 * y) * w;
    T* bot = top + w;
    const std::size_t o = (pl * h2 + y) * w2;
    for (std::size_t x = 0; x < w2; ++x) {
      const T s = ll[o + x], p = lh[o + x], q = hl[o + x], u = hh[o + x];
      top[2 * x] = T(0.5) * ((s + p) + (q + u));
      top[2 * x + 1] = T(0.5) * ((s - p) + (q - u));
      bot[2 * x] = T(0.5) * ((s + p) - (q + u));
      bot[2 * x + 1] = T(0.5) * ((s - p) - (q - u));
    }
  }
}

template void haar_forward<float>(std::span<const float>, std::size_t,
                                  std::size_t, std::size_t, std::span<float>,
                                  std::span<float>, std::span<float>,
                                  std::span<float>);
template void haar_forward<double>(std::span<const double>, std::size_t,
                                   std::size_t, std::size_t, std::span<double>,
                                   std::span<double>, std::span<double>,
                                   std::span<double>);
template void haar_inverse<float>(std::span<const float>, std::span<const float>,
                                  std::span<const float>, std::span<const float>,
                                  std::size_t, std::size_t, std::size_t,
                                  std::span<float>);
template void haar_inverse<double>(std::span<const double>,
                                   std::span<const double>,
                                   std::span<const double>,
                                   std::span<const double>, std::size_t,
                                   std::size_t, std::size_t, std::span<double>);

}  // namespace wfr::kernels
