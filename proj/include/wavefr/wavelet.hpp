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

// Orthonormal 2D Haar transform and multi-level pyramids.
//
// Sub-band naming: lh responds to horizontal differences (a-b), hl to
// vertical differences (top-bottom), hh to the diagonal. Sub-bands are never
// clamped; only pixel-domain images are clamped, at I/O boundaries.

#ifndef WAVEFR_WAVELET_HPP_
#define WAVEFR_WAVELET_HPP_

#include <cstddef>
#include <vector>

#include "wavefr/image.hpp"

namespace wfr::wavelet {

struct SubbandSet {
  Image ll, lh, hl, hh;
};

struct DetailBands {
  Image lh, hl, hh;
};

// high[j-1] holds the detail bands of level j (j = 1 is the finest); ll is
// the level-J approximation.
struct SubbandPyramid {
  std::vector<DetailBands> high;
  Image ll;

  std::size_t levels() const { return high.size(); }
};

// Throws DimensionError naming the odd axis.
SubbandSet dwt2(const Image& image);

// Throws ShapeError when the four bands disagree.
Image idwt2(const SubbandSet& bands);
Image idwt2(const Image& ll, const DetailBands& detail);

// Requires H and W divisible by 2^levels and levels >= 1.
SubbandPyramid decompose(const Image& image, std::size_t levels);

// Inverse of decompose; throws ShapeError if the level shapes do not chain.
Image reconstruct(const SubbandPyramid& pyramid);

}  // namespace wfr::wavelet

#endif  // WAVEFR_WAVELET_HPP_
