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


#include "wavefr/pipeline/toy_data.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "wavefr/error.hpp"
#include "wavefr/wavelet.hpp"

namespace wfr::pipeline {

namespace {

using Rgb = std::array<double, 3>;

struct Ellipse {
  double cx, cy, rx, ry;
  // > 0 inside; roughly signed distance in units of the smaller radius.
  double inside(double x, double y) const {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    return 1.0 - std::sqrt(dx * dx + dy * dy);
  }
};

// Anti-aliased coverage of an ellipse; `soft` is the edge width in
// normalised units.
double coverage(const Ellipse& e, double x, double y, double soft) {
  const double d = e.inside(x, y) * std::min(e.rx, e.ry) / soft;
  return std::clamp(0.5 + d, 0.0, 1.0);
}

void blend(Rgb& px, const Rgb& col, double a) {
  for (int c = 0; c < 3; ++c) px[c] += a * (col[c] - px[c]);
}

Rgb jitter(const Rgb& base, double amount, RngStream& rng) {
  Rgb out;
  const double gain = rng.uniform(1.0 - amount, 1.0 + amount);
  for (int c = 0; c < 3; ++c) {
    out[c] = std::clamp(base[c] * gain + rng.uniform(-0.05, 0.05), 0.0, 1.0);
  }
  return out;
}

}  // namespace

Image toy_face(std::size_t size, std::size_t channels, RngStream& rng) {
  if (size == 0) throw ParameterError("toy_face: size must be positive");
  if (channels != 1 && channels != 3) {
    throw ParameterError("toy_face: channels must be 1 or 3");
  }
  const Rgb bg_top{rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9)};
  const Rgb bg_bot{rng.uniform(0.1, 0.7), rng.uniform(0.1, 0.7), rng.uniform(0.1, 0.7)};
  const Rgb skin = jitter({0.86, 0.66, 0.52}, 0.3, rng);
  const Rgb hair = jitter({0.25, 0.17, 0.10}, 0.8, rng);
  const Rgb lips = jitter({0.75, 0.30, 0.30}, 0.2, rng);
  const Rgb iris = jitter({0.20, 0.25, 0.35}, 0.6, rng);
  const Rgb white{0.95, 0.95, 0.93};

  const Ellipse head{0.5 + rng.uniform(-0.04, 0.04), 0.54 + rng.uniform(-0.03, 0.03),
                     0.28 + rng.uniform(-0.03, 0.03), 0.36 + rng.uniform(-0.03, 0.03)};
  const Ellipse hair_cap{head.cx, head.cy - 0.08, head.rx * 1.12, head.ry * 0.98};
  const double hair_line = head.cy - head.ry * rng.uniform(0.35, 0.6);
  const double eye_dx = head.rx * rng.uniform(0.36, 0.44);
  const double eye_y = head.cy - head.ry * rng.uniform(0.05, 0.15);
  const double eye_r = head.rx * rng.uniform(0.16, 0.21);
  const double mouth_y = head.cy + head.ry * rng.uniform(0.45, 0.55);
  const Ellipse mouth{head.cx, mouth_y, head.rx * rng.uniform(0.3, 0.45),
                      head.ry * rng.uniform(0.06, 0.1)};
  const Ellipse nose{head.cx, head.cy + head.ry * 0.2, head.rx * 0.12, head.ry * 0.16};

  // Band-limited texture: a few oriented sinusoids at mid/high frequency.
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<Wave, 6> waves;
  for (auto& w : waves) {
    const double f = rng.uniform(0.12, 0.4) * static_cast<double>(size);  // cycles per image
    const double th = rng.uniform(0.0, std::numbers::pi);
    w = {f * std::cos(th), f * std::sin(th), rng.uniform(0.0, 2 * std::numbers::pi),
         rng.uniform(0.01, 0.03)};
  }

  const double soft = 0.7 / static_cast<double>(size);
  Image img(size, size, channels);
  for (std::size_t py = 0; py < size; ++py) {
    for (std::size_t px = 0; px < size; ++px) {
      const double x = (px + 0.5) / size, y = (py + 0.5) / size;
      Rgb p;
      for (int c = 0; c < 3; ++c) p[c] = bg_top[c] + (bg_bot[c] - bg_top[c]) * y;
      blend(p, hair, coverage(hair_cap, x, y, soft));
      const double face = coverage(head, x, y, soft) *
                          std::clamp(0.5 + (y - hair_line) / soft, 0.0, 1.0);
      blend(p, skin, face);
      blend(p, Rgb{skin[0] * 0.8, skin[1] * 0.7, skin[2] * 0.7},
            0.6 * face * coverage(nose, x, y, 3 * soft));
      for (double s : {-1.0, 1.0}) {
        const double ex = head.cx + s * eye_dx;
        blend(p, white, face * coverage({ex, eye_y, eye_r, eye_r * 0.6}, x, y, soft));
        blend(p, iris, face * coverage({ex, eye_y, eye_r * 0.5, eye_r * 0.5}, x, y, soft));
        blend(p, hair, face * coverage({ex, eye_y - eye_r * 1.3, eye_r * 1.1, eye_r * 0.25},
                                       x, y, soft));
      }
      blend(p, lips, face * coverage(mouth, x, y, soft));

      double tex = 0.0;
      for (const auto& w : waves) {
        tex += w.amp * std::sin(2 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
      }
      for (int c = 0; c < 3; ++c) p[c] = std::clamp(p[c] + tex, 0.0, 1.0);

      if (channels == 3) {
        for (std::size_t c = 0; c < 3; ++c) img.at(c, py, px) = static_cast<float>(p[c]);
      } else {
        img.at(0, py, px) = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
      }
    }
  }
  return img;
}

std::vector<Image> toy_faces(std::size_t count, std::size_t size, std::size_t channels,
                             std::uint64_t seed, std::size_t first) {
  std::vector<Image> out(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng(seed, stream_id("toy-face", first + i));
    out[i] = toy_face(size, channels, rng);
  }
  return out;
}

double high_frequency_fraction(const Image& image, std::size_t levels) {
  const auto pyr = wavelet::decompose(image, levels);
  double detail = 0.0;
  for (const auto& d : pyr.high) detail += energy(d.lh) + energy(d.hl) + energy(d.hh);
  const double total = detail + energy(pyr.ll);
  return total > 0.0 ? detail / total : 0.0;
}

Image degrade_indexed(const Image& image, std::uint64_t seed, std::string_view tag,
                      std::uint64_t index, const degradation::DegradationRanges& ranges,
                      bool second_order) {
  RngStream rng(seed, stream_id(tag, index));
  const auto params = degradation::sample_params(rng, second_order, ranges);
  return degradation::degrade(image, params, rng, ranges);
}

}  // namespace wfr::pipeline
