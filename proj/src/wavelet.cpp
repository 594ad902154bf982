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

#include "wavefr/wavelet.hpp"

#include <span>

#include "wavefr/error.hpp"
#include "wavefr/kernels/kernels.hpp"

namespace wfr::wavelet {
namespace {

void check_shape(const Image& ref, const Image& other, const char* name) {
  if (!ref.same_shape(other)) {
    throw ShapeError(std::string("idwt2: sub-band ") + name + " has shape " +
                     other.shape_string() + ", expected " + ref.shape_string());
  }
}

}  // namespace

SubbandSet dwt2(const Image& image) {
  if (image.height % 2 != 0) {
    throw DimensionError("dwt2: height " + std::to_string(image.height) +
                         " is odd");
  }
  if (image.width % 2 != 0) {
    throw DimensionError("dwt2: width " + std::to_string(image.width) +
                         " is odd");
  }
  const std::size_t h2 = image.height / 2, w2 = image.width / 2;
  SubbandSet out{Image(h2, w2, image.channels), Image(h2, w2, image.channels),
                 Image(h2, w2, image.channels), Image(h2, w2, image.channels)};
  kernels::haar_forward<float>(image.data, image.channels, image.height,
                               image.width, out.ll.data, out.lh.data,
                               out.hl.data, out.hh.data);
  return out;
}

Image idwt2(const SubbandSet& bands) {
  check_shape(bands.ll, bands.lh, "lh");
  check_shape(bands.ll, bands.hl, "hl");
  check_shape(bands.ll, bands.hh, "hh");
  const Image& ll = bands.ll;
  Image out(ll.height * 2, ll.width * 2, ll.channels);
  kernels::haar_inverse<float>(ll.data, bands.lh.data, bands.hl.data,
                               bands.hh.data, ll.channels, out.height,
                               out.width, out.data);
  return out;
}

Image idwt2(const Image& ll, const DetailBands& detail) {
  check_shape(ll, detail.lh, "lh");
  check_shape(ll, detail.hl, "hl");
  check_shape(ll, detail.hh, "hh");
  Image out(ll.height * 2, ll.width * 2, ll.channels);
  kernels::haar_inverse<float>(ll.data, detail.lh.data, detail.hl.data,
                               detail.hh.data, ll.channels, out.height,
                               out.width, out.data);
  return out;
}

SubbandPyramid decompose(const Image& image, std::size_t levels) {
  if (levels == 0) throw ParameterError("decompose: levels must be >= 1");
  const std::size_t m = std::size_t{1} << levels;
  if (image.height % m != 0 || image.width % m != 0) {
    throw DimensionError("decompose: " + std::to_string(levels) +
                         " levels need height and width divisible by " +
                         std::to_string(m) + ", got " +
                         std::to_string(image.height) + "x" +
                         std::to_string(image.width));
  }
  SubbandPyramid p;
  p.high.reserve(levels);
  Image current = image;
  for (std::size_t j = 0; j < levels; ++j) {
    SubbandSet s = dwt2(current);
    p.high.push_back({std::move(s.lh), std::move(s.hl), std::move(s.hh)});
    current = std::move(s.ll);
  }
  p.ll = std::move(current);
  return p;
}

Image reconstruct(const SubbandPyramid& pyramid) {
  if (pyramid.high.empty()) return pyramid.ll;
  Image current = pyramid.ll;
  for (std::size_t j = pyramid.high.size(); j-- > 0;) {
    const DetailBands& d = pyramid.high[j];
    if (!current.same_shape(d.lh)) {
      throw ShapeError("reconstruct: level " + std::to_string(j + 1) +
                       " bands are " + d.lh.shape_string() +
                       " but the coarser level yields " +
                       current.shape_string());
    }
    current = idwt2(current, d);
  }
  return current;
}

}  // namespace wfr::wavelet
