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

#include "wavefr/image.hpp"

#include <algorithm>
#include <cmath>

#include "wavefr/error.hpp"

namespace wfr {

std::string Image::shape_string() const {
  return std::to_string(height) + "x" + std::to_string(width) + "x" +
         std::to_string(channels);
}

void clamp(Image& img, float lo, float hi) {
  for (float& v : img.data) v = std::clamp(v, lo, hi);
}

double energy(const Image& img) {
  double e = 0.0;
  for (float v : img.data) e += static_cast<double>(v) * v;
  return e;
}

double max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: shape " + a.shape_string() + " vs " +
                     b.shape_string());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
  }
  return m;
}

}  // namespace wfr
