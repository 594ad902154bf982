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


// Binary Netpbm I/O: P6 for 3-channel images, P5 for 1-channel ones, 8 bits
// per sample. Writing quantises round(255 · clamp(v, 0, 1)).

#ifndef WAVEFR_PIPELINE_PPM_HPP_
#define WAVEFR_PIPELINE_PPM_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wavefr/image.hpp"

namespace wfr::pipeline {

std::vector<std::uint8_t> encode_ppm(const Image& image);
Image decode_ppm(const std::vector<std::uint8_t>& bytes,
                 const std::string& origin = "<memory>");

// Throw IoError naming the path on any failure.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

// Sorted regular files with a .ppm or .pgm extension.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace wfr::pipeline

#endif  // WAVEFR_PIPELINE_PPM_HPP_
