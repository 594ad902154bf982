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


#include "wavefr/pipeline/ppm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "wavefr/error.hpp"

namespace wfr::pipeline {

namespace fs = std::filesystem;

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw ShapeError("ppm: only 1 or 3 channels can be written, got " +
                     image.shape_string());
  }
  if (image.empty()) throw ShapeError("ppm: empty image");
  const std::string header = std::string(image.channels == 3 ? "P6" : "P5") +
                             "\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.size());
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < image.channels; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        out.push_back(static_cast<std::uint8_t>(std::lround(255.0f * v)));
      }
    }
  }
  return out;
}

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string next_token(const std::vector<std::uint8_t>& b, std::size_t& pos,
                       const std::string& origin) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos])) tok.push_back(static_cast<char>(b[pos++]));
  if (tok.empty()) throw IoError(origin + ": truncated PPM header");
  return tok;
}

std::size_t parse_size(const std::string& tok, const std::string& origin) {
  std::size_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9' || v > 1000000) {
      throw IoError(origin + ": bad PPM header field '" + tok + "'");
    }
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

}  // namespace

Image decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos, origin);
  std::size_t channels;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw IoError(origin + ": not a binary PPM/PGM (magic '" + magic + "')");
  }
  const std::size_t w = parse_size(next_token(bytes, pos, origin), origin);
  const std::size_t h = parse_size(next_token(bytes, pos, origin), origin);
  const std::size_t maxval = parse_size(next_token(bytes, pos, origin), origin);
  if (w == 0 || h == 0) throw IoError(origin + ": zero image dimension");
  if (maxval != 255) {
    throw IoError(origin + ": only 8-bit images supported (maxval " +
                  std::to_string(maxval) + ")");
  }
  ++pos;  // single whitespace byte after maxval
  if (bytes.size() < pos + w * h * channels) {
    throw IoError(origin + ": truncated pixel data");
  }
  Image img(h, w, channels);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        img.at(c, y, x) = static_cast<float>(bytes[pos++]) / 255.0f;
  return img;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" + path.parent_path().string() +
                    "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Image read_ppm(const fs::path& path) {
  return decode_ppm(read_file(path), path.string());
}

void write_ppm(const fs::path& path, const Image& image) {
  write_file(path, encode_ppm(image));
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("'" + dir.string() + "' is not a directory");
  }
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace wfr::pipeline
