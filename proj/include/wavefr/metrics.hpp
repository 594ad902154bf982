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

#ifndef WAVEFR_METRICS_HPP_
#define WAVEFR_METRICS_HPP_

#include <vector>

#include "wavefr/image.hpp"

namespace wfr::metrics {

struct SsimConfig {
  int window = 11;        // odd, Gaussian window side
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

// Normalised 1D Gaussian window; the 2D window is its outer product.
std::vector<double> ssim_window(const SsimConfig& config);

// 10·log10(peak² / mse); +infinity when mse == 0.
double psnr_from_mse(double mse, double peak = 1.0);

double mse(const Image& a, const Image& b);

// Throws ShapeError on shape mismatch.
double psnr(const Image& a, const Image& b, double peak = 1.0);

// Mean SSIM over all pixels and channels, windows reflected at borders.
// Both spatial sides must be at least config.window.
double ssim(const Image& a, const Image& b, const SsimConfig& config = {});

}  // namespace wfr::metrics

#endif  // WAVEFR_METRICS_HPP_
