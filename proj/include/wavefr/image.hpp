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

#ifndef WAVEFR_IMAGE_HPP_
#define WAVEFR_IMAGE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wfr {

// Planar float image. Element (c, y, x) lives at data[(c * height + y) * width + x],
// which is also the memory layout of a 1×C×H×W tensor. Pixel-domain images
// are nominally in [0,1]; wavelet sub-bands reuse the type and may be signed.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane_size() const { return height * width; }
  bool empty() const { return data.empty(); }

  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }

  std::span<float> plane(std::size_t c) {
    return {data.data() + c * plane_size(), plane_size()};
  }
  std::span<const float> plane(std::size_t c) const {
    return {data.data() + c * plane_size(), plane_size()};
  }

  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  // "HxWxC", used in error messages.
  std::string shape_string() const;
};

// Clamp every element to [lo, hi] in place.
void clamp(Image& img, float lo = 0.0f, float hi = 1.0f);

// Sum of squared elements, accumulated in double.
double energy(const Image& img);

// Largest |a - b| over all elements. Shapes must agree.
double max_abs_diff(const Image& a, const Image& b);

}  // namespace wfr

#endif  // WAVEFR_IMAGE_HPP_
