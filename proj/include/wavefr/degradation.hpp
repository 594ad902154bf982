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

// Synthetic low-quality image generation:
//
//   x = resize_up( jpeg_q( resize_down(blur_sigma(y), 1/s) + noise_delta ) )
//
// optionally applied twice ("second order") with freshly drawn parameters
// for the second pass.

#ifndef WAVEFR_DEGRADATION_HPP_
#define WAVEFR_DEGRADATION_HPP_

#include <array>
#include <vector>

#include "wavefr/image.hpp"
#include "wavefr/rng.hpp"

namespace wfr::degradation {

struct DegradationParams {
  double sigma = 0.1;   // blur std, pixels
  double scale = 1.0;   // downsampling factor
  double delta = 0.0;   // noise std on the 0-255 scale
  int quality = 95;     // JPEG quality factor
  bool second_order = false;
};

// Closed intervals for sample_params.
struct DegradationRanges {
  std::array<double, 2> sigma{0.1, 15.0};
  std::array<double, 2> scale{0.8, 32.0};
  std::array<double, 2> delta{0.0, 20.0};
  std::array<int, 2> quality{30, 95};
};

// Odd-length taps, radius max(1, ceil(3·sigma)), summing to 1.
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian blur, horizontal then vertical, symmetric reflection.
Image blur(const Image& image, double sigma);

// Bilinear resampling with half-pixel-centred coordinates.
Image resize(const Image& image, std::size_t out_h, std::size_t out_w);

// Adds N(0, (delta/255)^2) to every element, in data order. No clamping.
Image add_gaussian_noise(const Image& image, double delta, RngStream& rng);

// 8-bit-style JPEG quantisation round trip (no entropy coding, no chroma
// subsampling). Three-channel images go through YCbCr; other channel counts
// are treated as independent luminance planes.
Image jpeg_artifact(const Image& image, int quality);

// IJG quality scaling of a base quantisation table.
std::array<int, 64> scaled_quant_table(const std::array<int, 64>& base,
                                       int quality);
const std::array<int, 64>& luma_quant_base();
const std::array<int, 64>& chroma_quant_base();

DegradationParams sample_params(RngStream& rng, bool second_order,
                                const DegradationRanges& ranges = {});

// Intermediate size round(H/s) with a floor of 1; output has the input shape
// and lies in [0,1]. rng is advanced by two split() calls per invocation.
Image degrade(const Image& image, const DegradationParams& params,
              RngStream& rng, const DegradationRanges& ranges = {});

}  // namespace wfr::degradation

#endif  // WAVEFR_DEGRADATION_HPP_
