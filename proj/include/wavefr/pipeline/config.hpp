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


// Run configuration. Parsed from JSON layered over the defaults below;
// unknown keys are rejected so typos do not silently fall back to defaults.
// to_json() echoes every resolved field.

#ifndef WAVEFR_PIPELINE_CONFIG_HPP_
#define WAVEFR_PIPELINE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "wavefr/degradation.hpp"
#include "wavefr/diffusion.hpp"
#include "wavefr/hfr.hpp"

namespace wfr::pipeline {

struct RunConfig {
  std::size_t image_size = 64;
  std::size_t levels = 2;
  std::size_t channels = 3;

  std::size_t train_count = 500;
  std::size_t test_count = 50;
  std::size_t degradations_per_image = 4;  // LQ variants per training image

  degradation::DegradationRanges degradation;
  bool second_order = false;

  int schedule_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  diffusion::DenoiserConfig lcd;
  diffusion::LcdTrainConfig lcd_train;
  hfr::HfrConfig hfr;
  hfr::HfrTrainConfig hfr_train;

  diffusion::Sampler sampler = diffusion::Sampler::kDdim;
  int sample_steps = 250;

  std::uint64_t seed = 0;

  diffusion::NoiseSchedule schedule() const;
};

nlohmann::json to_json(const RunConfig& config);
// Throws ParameterError naming the offending key.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Throws ParameterError/DimensionError naming the offending field.
void validate(const RunConfig& config);

const char* sampler_name(diffusion::Sampler s);

}  // namespace wfr::pipeline

#endif  // WAVEFR_PIPELINE_CONFIG_HPP_
