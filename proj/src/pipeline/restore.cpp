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


#include "wavefr/pipeline/restore.hpp"

#include <algorithm>
#include <chrono>

#include "wavefr/error.hpp"
#include "wavefr/pipeline/toy_data.hpp"
#include "wavefr/wavelet.hpp"

namespace wfr::pipeline {

using nlohmann::json;
using nn::Tensor;

Tensor<float> images_to_tensor(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("images_to_tensor: no images");
  const Image& f = images.front();
  Tensor<float> t({images.size(), f.channels, f.height, f.width});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(f)) {
      throw ShapeError("images_to_tensor: image " + std::to_string(i) + " is " +
                       images[i].shape_string() + ", expected " + f.shape_string());
    }
    std::copy(images[i].data.begin(), images[i].data.end(),
              t.data().begin() + static_cast<std::ptrdiff_t>(i * f.size()));
  }
  return t;
}

std::vector<Image> tensor_to_images(const Tensor<float>& t) {
  if (t.rank() != 4) throw ShapeError("tensor_to_images: need [N,C,H,W]");
  std::vector<Image> out;
  for (std::size_t n = 0; n < t.dim(0); ++n) {
    Image img(t.dim(2), t.dim(3), t.dim(1));
    const auto begin = t.data().begin() + static_cast<std::ptrdiff_t>(n * img.size());
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(img.size()), img.data.begin());
    out.push_back(std::move(img));
  }
  return out;
}

Image normalize_ll(const Image& ll, std::size_t levels) {
  const float s = static_cast<float>(std::size_t{1} << (levels - 1));
  Image out = ll;
  for (float& v : out.data) v = v / s - 1.0f;
  return out;
}

Image denormalize_ll(const Image& ll, std::size_t levels) {
  const float s = static_cast<float>(std::size_t{1} << (levels - 1));
  Image out = ll;
  for (float& v : out.data) v = (v + 1.0f) * s;
  return out;
}

TrainingSet make_training_set(const std::vector<Image>& hq, const RunConfig& config) {
  const std::size_t K = config.degradations_per_image;
  TrainingSet set;
  set.hq.resize(hq.size() * K);
  set.lq.resize(hq.size() * K);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t n = 0; n < hq.size() * K; ++n) {
    set.hq[n] = hq[n / K];
    set.lq[n] = degrade_indexed(hq[n / K], config.seed, "train-degrade", n,
                                config.degradation, config.second_order);
  }
  return set;
}

std::vector<Image> degrade_test_set(const std::vector<Image>& hq, const RunConfig& config) {
  std::vector<Image> out(hq.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < hq.size(); ++i) {
    out[i] = degrade_indexed(hq[i], config.seed, "test-degrade", i, config.degradation,
                             config.second_order);
  }
  return out;
}

std::vector<diffusion::LcdPair> lcd_pairs(const TrainingSet& set, std::size_t levels) {
  std::vector<diffusion::LcdPair> out(set.hq.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < set.hq.size(); ++i) {
    out[i].target = normalize_ll(wavelet::decompose(set.hq[i], levels).ll, levels);
    out[i].condition = normalize_ll(wavelet::decompose(set.lq[i], levels).ll, levels);
  }
  return out;
}

std::vector<hfr::HfrPair> hfr_pairs(const TrainingSet& set) {
  std::vector<hfr::HfrPair> out;
  out.reserve(set.hq.size());
  for (std::size_t i = 0; i < set.hq.size(); ++i) out.push_back({set.hq[i], set.lq[i]});
  return out;
}

namespace {

json schedule_json(const RunConfig& c) {
  return {{"steps", c.schedule_steps},
          {"beta_start", c.beta_start},
          {"beta_end", c.beta_end}};
}

json lcd_arch(const RunConfig& c) {
  return {{"base_channels", c.lcd.base_channels},
          {"channel_mults", c.lcd.channel_mults},
          {"res_blocks", c.lcd.res_blocks},
          {"embed_dim", c.lcd.embed_dim},
          {"groups", c.lcd.groups}};
}

json hfr_arch(const RunConfig& c) {
  return {{"base_channels", c.hfr.base_channels}, {"groups", c.hfr.groups}};
}

void expect_field(const Checkpoint& ck, const char* field, const json& want) {
  if (!ck.metadata.contains(field)) {
    throw ContractError("checkpoint metadata lacks '" + std::string(field) + "'");
  }
  if (ck.metadata.at(field) != want) {
    throw ContractError("checkpoint field '" + std::string(field) + "' is " +
                        ck.metadata.at(field).dump() + ", configuration expects " +
                        want.dump());
  }
}

}  // namespace

json lcd_metadata(const RunConfig& c, std::size_t trained_steps) {
  return {{"kind", "lcd"},
          {"levels", c.levels},
          {"channels", c.channels},
          {"schedule", schedule_json(c)},
          {"architecture", lcd_arch(c)},
          {"trained_steps", trained_steps},
          {"batch_size", c.lcd_train.batch_size},
          {"lr", c.lcd_train.lr},
          {"seed", c.seed}};
}

json hfr_metadata(const RunConfig& c, std::size_t trained_steps) {
  return {{"kind", "hfr"},
          {"levels", c.levels},
          {"channels", c.channels},
          {"architecture", hfr_arch(c)},
          {"trained_steps", trained_steps},
          {"batch_size", c.hfr_train.batch_size},
          {"lr", c.hfr_train.lr},
          {"alpha", c.hfr_train.loss.alpha},
          {"lambda", c.hfr_train.loss.lambda},
          {"seed", c.seed}};
}

diffusion::Denoiser<float> denoiser_from_checkpoint(const Checkpoint& ck,
                                                    const RunConfig& c) {
  expect_field(ck, "kind", "lcd");
  expect_field(ck, "levels", c.levels);
  expect_field(ck, "channels", c.channels);
  expect_field(ck, "schedule", schedule_json(c));
  expect_field(ck, "architecture", lcd_arch(c));
  return diffusion::Denoiser<float>(c.lcd, checkpoint_params(ck));
}

hfr::HfrNet<float> hfr_from_checkpoint(const Checkpoint& ck, const RunConfig& c) {
  expect_field(ck, "kind", "hfr");
  expect_field(ck, "levels", c.levels);
  expect_field(ck, "channels", c.channels);
  expect_field(ck, "architecture", hfr_arch(c));
  return hfr::HfrNet<float>(c.hfr, checkpoint_params(ck));
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "LCD+HFR1+HFR2";
    case Variant::kNoHfr1: return "LCD+HFR2";
    case Variant::kNoHfr2: return "LCD+HFR1";
    case Variant::kNoHfr: return "LCD";
  }
  return "?";
}

std::array<std::vector<Image>, 4> Restorer::restore_variants(std::span<const Image> lq,
                                                             std::uint64_t seed,
                                                             std::size_t first) const {
  if (config.levels != 2) {
    throw ContractError("restore: 'levels' must be 2 (the HFR network recovers two "
                        "detail levels), got " + std::to_string(config.levels));
  }
  std::array<std::vector<Image>, 4> out;
  if (lq.empty()) return out;
  for (const auto& img : lq) {
    if (img.channels != config.channels) {
      throw ContractError("restore: image has " + std::to_string(img.channels) +
                          " channels, 'channels' is " + std::to_string(config.channels));
    }
    if (img.height % 4 != 0 || img.width % 4 != 0) {
      throw DimensionError("restore: image " + img.shape_string() +
                           " must have height and width divisible by 4");
    }
  }
  const nn::NoGradGuard no_grad;
  const auto schedule = config.schedule();
  constexpr std::size_t kChunk = 16;
  for (std::size_t begin = 0; begin < lq.size(); begin += kChunk) {
    const auto chunk = lq.subspan(begin, std::min(kChunk, lq.size() - begin));
    const Tensor<float> x = images_to_tensor(chunk);
    const auto bands = hfr::two_level_bands(x);
    // Model-space conditioning: ll2 / 2 - 1.
    Tensor<float> cond(bands.ll2.shape());
    for (std::size_t i = 0; i < cond.numel(); ++i) {
      cond.data()[i] = bands.ll2.data()[i] / 2.0f - 1.0f;
    }
    std::vector<RngStream> rngs;
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      rngs.emplace_back(seed, stream_id("restore", first + begin + k));
    }
    const Tensor<float> y =
        diffusion::sample(lcd.model(), cond, schedule, config.sampler,
                          config.sample_steps, std::span<RngStream>(rngs));
    Tensor<float> ll2(y.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) ll2.data()[i] = (y.data()[i] + 1.0f) * 2.0f;
    const auto rec = hfr(bands.h1, bands.h2);
    for (Variant v : kAllVariants) {
      const bool use1 = v == Variant::kFull || v == Variant::kNoHfr2;
      const bool use2 = v == Variant::kFull || v == Variant::kNoHfr1;
      const Tensor<float> ll1 =
          nn::haar_idwt(nn::concat_channels<float>({ll2, use2 ? rec.xH2 : bands.h2}));
      const Tensor<float> img =
          nn::haar_idwt(nn::concat_channels<float>({ll1, use1 ? rec.xH1 : bands.h1}));
      for (Image& im : tensor_to_images(img)) {
        clamp(im);
        out[static_cast<std::size_t>(v)].push_back(std::move(im));
      }
    }
  }
  return out;
}

std::vector<Image> Restorer::restore(std::span<const Image> lq, std::uint64_t seed,
                                     std::size_t first) const {
  return std::move(restore_variants(lq, seed, first)[0]);
}

std::vector<StepCost> denoiser_step_costs(const RunConfig& config,
                                          std::span<const std::size_t> levels,
                                          std::size_t repeats) {
  const nn::NoGradGuard no_grad;
  std::vector<StepCost> out;
  for (std::size_t J : levels) {
    StepCost cost;
    cost.level = J;
    cost.band_size = config.image_size >> J;
    if (cost.band_size == 0 || (cost.band_size << J) != config.image_size) {
      throw DimensionError("step cost: image size " + std::to_string(config.image_size) +
                           " is not divisible by 2^" + std::to_string(J));
    }
    RngStream rng(config.seed, stream_id("cost-probe", J));
    const diffusion::Denoiser<float> model(config.lcd, rng);
    const nn::Shape shape{1, config.channels, cost.band_size, cost.band_size};
    Tensor<float> y(shape), cond(shape);
    for (float& v : y.data()) v = static_cast<float>(rng.normal());
    for (float& v : cond.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const std::vector<int> t{config.schedule_steps / 2 + 1};

    const std::uint64_t before = nn::conv_mac_counter();
    (void)model(y, cond, t);  // also warms caches
    cost.macs = nn::conv_mac_counter() - before;

    std::vector<double> times;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, repeats); ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)model(y, cond, t);
      times.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
    cost.seconds = times[times.size() / 2];
    out.push_back(cost);
  }
  return out;
}

}  // namespace wfr::pipeline
