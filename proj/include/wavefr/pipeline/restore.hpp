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


// End-to-end orchestration: training-set assembly, checkpoint metadata,
// restoration and the efficiency probe.
//
// Restoration: decompose the LQ image two levels deep, sample the level-2 ll
// band with the conditional denoiser, recover both detail triples with the
// HFR network, reconstruct, clamp. The degradation model is never consulted.

#ifndef WAVEFR_PIPELINE_RESTORE_HPP_
#define WAVEFR_PIPELINE_RESTORE_HPP_

#include <array>
#include <span>
#include <vector>

#include "json.hpp"
#include "wavefr/diffusion.hpp"
#include "wavefr/hfr.hpp"
#include "wavefr/image.hpp"
#include "wavefr/pipeline/checkpoint.hpp"
#include "wavefr/pipeline/config.hpp"

namespace wfr::pipeline {

// Stack same-shape images into [N,C,H,W] and back.
nn::Tensor<float> images_to_tensor(std::span<const Image> images);
std::vector<Image> tensor_to_images(const nn::Tensor<float>& t);

// Maps a level-J ll band from [0, 2^J] to [-1, 1] (ll / 2^(J-1) - 1) and back.
Image normalize_ll(const Image& ll, std::size_t levels);
Image denormalize_ll(const Image& ll, std::size_t levels);

struct TrainingSet {
  std::vector<Image> hq;  // one entry per LQ variant
  std::vector<Image> lq;
};

// degradations_per_image LQ variants per HQ image; variant k of image i uses
// stream_id("train-degrade", i * K + k).
TrainingSet make_training_set(const std::vector<Image>& hq, const RunConfig& config);
// LQ copy of test image i uses stream_id("test-degrade", i).
std::vector<Image> degrade_test_set(const std::vector<Image>& hq, const RunConfig& config);

std::vector<diffusion::LcdPair> lcd_pairs(const TrainingSet& set, std::size_t levels);
std::vector<hfr::HfrPair> hfr_pairs(const TrainingSet& set);

nlohmann::json lcd_metadata(const RunConfig& config, std::size_t trained_steps);
nlohmann::json hfr_metadata(const RunConfig& config, std::size_t trained_steps);

// Throw ContractError naming the first metadata field that disagrees with
// the run configuration.
diffusion::Denoiser<float> denoiser_from_checkpoint(const Checkpoint& ckpt,
                                                    const RunConfig& config);
hfr::HfrNet<float> hfr_from_checkpoint(const Checkpoint& ckpt, const RunConfig& config);

enum class Variant { kFull = 0, kNoHfr1 = 1, kNoHfr2 = 2, kNoHfr = 3 };
inline constexpr std::array<Variant, 4> kAllVariants{
    Variant::kFull, Variant::kNoHfr1, Variant::kNoHfr2, Variant::kNoHfr};
const char* variant_name(Variant v);

struct Restorer {
  const diffusion::Denoiser<float>& lcd;
  const hfr::HfrNet<float>& hfr;
  const RunConfig& config;

  // Image k is sampled from RngStream(seed, stream_id("restore", first + k)),
  // so results do not depend on how a set is split into calls.
  std::vector<Image> restore(std::span<const Image> lq, std::uint64_t seed,
                             std::size_t first = 0) const;

  // All four ablation variants from one shared low-frequency sample:
  // result[v][k] for variant v, image k.
  std::array<std::vector<Image>, 4> restore_variants(std::span<const Image> lq,
                                                     std::uint64_t seed,
                                                     std::size_t first = 0) const;
};

struct StepCost {
  std::size_t level = 0;      // DWT level J; 0 = full resolution
  std::size_t band_size = 0;  // spatial side fed to the denoiser
  double seconds = 0.0;       // wall time per denoiser evaluation
  std::uint64_t macs = 0;     // convolution multiply-accumulates per evaluation
};

// One denoiser evaluation on a single image at each requested level, same
// backbone configuration throughout; timing is the median of `repeats`.
std::vector<StepCost> denoiser_step_costs(const RunConfig& config,
                                          std::span<const std::size_t> levels,
                                          std::size_t repeats);

}  // namespace wfr::pipeline

#endif  // WAVEFR_PIPELINE_RESTORE_HPP_
