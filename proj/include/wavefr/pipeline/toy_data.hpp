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


// Procedural face-like images: a background gradient, a head ellipse with
// hair, eyes, brows, nose shading and a mouth, plus a band-limited sinusoidal
// texture that puts energy into the detail bands.

#ifndef WAVEFR_PIPELINE_TOY_DATA_HPP_
#define WAVEFR_PIPELINE_TOY_DATA_HPP_

#include <cstdint>
#include <vector>

#include "wavefr/degradation.hpp"
#include "wavefr/image.hpp"
#include "wavefr/rng.hpp"

namespace wfr::pipeline {

Image toy_face(std::size_t size, std::size_t channels, RngStream& rng);

// Image i is drawn from RngStream(seed, stream_id("toy-face", first + i)).
std::vector<Image> toy_faces(std::size_t count, std::size_t size,
                             std::size_t channels, std::uint64_t seed,
                             std::size_t first = 0);

// Detail-band energy of a `levels`-deep Haar pyramid over total energy.
double high_frequency_fraction(const Image& image, std::size_t levels);

// Degraded copy of image i drawn from RngStream(seed, stream_id(tag, i)),
// with parameters sampled from `ranges`.
Image degrade_indexed(const Image& image, std::uint64_t seed,
                      std::string_view tag, std::uint64_t index,
                      const degradation::DegradationRanges& ranges,
                      bool second_order);

}  // namespace wfr::pipeline

#endif  // WAVEFR_PIPELINE_TOY_DATA_HPP_
