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


// Parallel kernels against the serial reference implementations.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include "test_util.hpp"
#include "wavefr/kernels/kernels.hpp"

using namespace wfr;
using namespace wfr::kernels;
using wfr::testing::max_abs;
using wfr::testing::random_vector;

namespace {

std::vector<Conv2dShape> conv_cases() {
  return {
      {1, 1, 5, 5, 1, 3, 1, 1},   {2, 3, 8, 7, 4, 3, 1, 1},  {3, 5, 9, 9, 6, 1, 1, 0},
      {2, 4, 10, 6, 3, 3, 2, 1},  {1, 2, 6, 6, 5, 5, 1, 2},  {4, 16, 8, 8, 16, 3, 1, 1},
      {1, 3, 4, 4, 2, 2, 2, 0},   {2, 7, 11, 13, 9, 3, 1, 0},
  };
}

}  // namespace

TEST_CASE("reflect index mirrors about the half-sample point") {
  CHECK(reflect_index(-1, 4) == 0);
  CHECK(reflect_index(-2, 4) == 1);
  CHECK(reflect_index(4, 4) == 3);
  CHECK(reflect_index(5, 4) == 2);
  CHECK(reflect_index(2, 4) == 2);
  CHECK(reflect_index(-9, 4) == 0);  // periodic with period 2n
}

TEST_CASE("conv forward matches the serial reference") {
  RngStream rng(11, 0);
  for (const auto& s : conv_cases()) {
    const auto in = random_vector<double>(s.input_size(), rng);
    const auto w = random_vector<double>(s.weight_size(), rng);
    const auto b = random_vector<double>(s.out_channels, rng);
    std::vector<double> got(s.output_size()), want(s.output_size());
    conv2d_forward<double>(s, in, w, b, got);
    reference::conv2d_forward<double>(s, in, w, b, want);
    CHECK(max_abs(got, want) < 1e-12);
  }
}

TEST_CASE("conv backward passes match the serial reference") {
  RngStream rng(12, 0);
  for (const auto& s : conv_cases()) {
    const auto in = random_vector<double>(s.input_size(), rng);
    const auto w = random_vector<double>(s.weight_size(), rng);
    const auto go = random_vector<double>(s.output_size(), rng);
    // Both accumulate: start from the same non-zero buffers.
    auto gi = random_vector<double>(s.input_size(), rng);
    auto gi_ref = gi;
    conv2d_backward_input<double>(s, go, w, gi);
    reference::conv2d_backward_input<double>(s, go, w, gi_ref);
    CHECK(max_abs(gi, gi_ref) < 1e-12);

    auto gw = random_vector<double>(s.weight_size(), rng);
    auto gb = random_vector<double>(s.out_channels, rng);
    auto gw_ref = gw;
    auto gb_ref = gb;
    conv2d_backward_weight<double>(s, in, go, gw, gb);
    reference::conv2d_backward_weight<double>(s, in, go, gw_ref, gb_ref);
    CHECK(max_abs(gw, gw_ref) < 1e-11);
    CHECK(max_abs(gb, gb_ref) < 1e-11);
  }
}

TEST_CASE("conv results do not depend on the thread count") {
  RngStream rng(13, 0);
  const Conv2dShape s{6, 8, 12, 12, 8, 3, 1, 1};
  const auto in = random_vector<float>(s.input_size(), rng);
  const auto w = random_vector<float>(s.weight_size(), rng);
  const auto b = random_vector<float>(s.out_channels, rng);
  const auto go = random_vector<float>(s.output_size(), rng);
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    std::vector<float> out(s.output_size()), gi(s.input_size()), gw(s.weight_size()),
        gb(s.out_channels);
    conv2d_forward<float>(s, in, w, b, out);
    conv2d_backward_input<float>(s, go, w, gi);
    conv2d_backward_weight<float>(s, in, go, gw, gb);
    out.insert(out.end(), gi.begin(), gi.end());
    out.insert(out.end(), gw.begin(), gw.end());
    out.insert(out.end(), gb.begin(), gb.end());
    return out;
  };
  const auto one = run(1);
  const auto four = run(4);
  omp_set_num_threads(omp_get_num_procs());
  CHECK(one == four);
}

TEST_CASE("haar kernels match the serial reference and invert") {
  RngStream rng(14, 0);
  for (auto [planes, h, w] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 2, 2},
                              {3, 8, 6},
                              {5, 32, 64}}) {
    const auto src = random_vector<double>(planes * h * w, rng);
    const std::size_t q = planes * h * w / 4;
    std::vector<double> a(4 * q), r(4 * q);
    std::span<double> A(a), R(r);
    haar_forward<double>(src, planes, h, w, A.subspan(0, q), A.subspan(q, q),
                         A.subspan(2 * q, q), A.subspan(3 * q, q));
    reference::haar_forward<double>(src, planes, h, w, R.subspan(0, q), R.subspan(q, q),
                                    R.subspan(2 * q, q), R.subspan(3 * q, q));
    CHECK(max_abs(a, r) < 1e-15);
    std::vector<double> back(src.size()), back_ref(src.size());
    haar_inverse<double>(A.subspan(0, q), A.subspan(q, q), A.subspan(2 * q, q),
                         A.subspan(3 * q, q), planes, h, w, back);
    reference::haar_inverse<double>(A.subspan(0, q), A.subspan(q, q), A.subspan(2 * q, q),
                                    A.subspan(3 * q, q), planes, h, w, back_ref);
    CHECK(max_abs(back, back_ref) < 1e-15);
    CHECK(max_abs(back, src) < 1e-12);
  }
}

TEST_CASE("separable filter matches the reference; adjoint satisfies <Ax,y> = <x,A'y>") {
  RngStream rng(15, 0);
  for (auto [planes, h, w, r] :
       {std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>{1, 11, 11, 5},
        {3, 16, 9, 2},
        {2, 5, 7, 3},
        {1, 4, 4, 6}}) {
    auto taps = random_vector<double>(2 * r + 1, rng, 0.0, 1.0);
    const auto x = random_vector<double>(planes * h * w, rng);
    std::vector<double> got(x.size()), want(x.size());
    filter_separable<double>(x, planes, h, w, taps, got);
    reference::filter_separable<double>(x, planes, h, w, taps, want);
    CHECK(max_abs(got, want) < 1e-12);

    const auto y = random_vector<double>(x.size(), rng);
    std::vector<double> aty(x.size());
    filter_separable_adjoint<double>(y, planes, h, w, taps, aty);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      lhs += got[i] * y[i];
      rhs += x[i] * aty[i];
    }
    CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
  }
}
