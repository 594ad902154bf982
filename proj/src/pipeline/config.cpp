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


#include "wavefr/pipeline/config.hpp"

#include "wavefr/error.hpp"
#include "wavefr/pipeline/ppm.hpp"

namespace wfr::pipeline {

using nlohmann::json;

diffusion::NoiseSchedule RunConfig::schedule() const {
  return diffusion::make_schedule(schedule_steps, beta_start, beta_end);
}

const char* sampler_name(diffusion::Sampler s) {
  return s == diffusion::Sampler::kAncestral ? "ancestral" : "ddim";
}

json to_json(const RunConfig& c) {
  json j;
  j["image_size"] = c.image_size;
  j["levels"] = c.levels;
  j["channels"] = c.channels;
  j["data"] = {{"train_count", c.train_count},
               {"test_count", c.test_count},
               {"degradations_per_image", c.degradations_per_image}};
  j["degradation"] = {{"sigma", c.degradation.sigma},
                      {"scale", c.degradation.scale},
                      {"delta", c.degradation.delta},
                      {"quality", c.degradation.quality},
                      {"second_order", c.second_order}};
  j["schedule"] = {{"steps", c.schedule_steps},
                   {"beta_start", c.beta_start},
                   {"beta_end", c.beta_end}};
  j["lcd"] = {{"base_channels", c.lcd.base_channels},
              {"channel_mults", c.lcd.channel_mults},
              {"res_blocks", c.lcd.res_blocks},
              {"embed_dim", c.lcd.embed_dim},
              {"groups", c.lcd.groups},
              {"train_steps", c.lcd_train.steps},
              {"batch_size", c.lcd_train.batch_size},
              {"lr", c.lcd_train.lr}};
  j["hfr"] = {{"base_channels", c.hfr.base_channels},
              {"groups", c.hfr.groups},
              {"train_steps", c.hfr_train.steps},
              {"batch_size", c.hfr_train.batch_size},
              {"lr", c.hfr_train.lr},
              {"alpha", c.hfr_train.loss.alpha},
              {"lambda", c.hfr_train.loss.lambda}};
  j["sampler"] = {{"method", sampler_name(c.sampler)}, {"steps", c.sample_steps}};
  j["seed"] = c.seed;
  return j;
}

namespace {

bool compatible(const json& def, const json& v) {
  if (def.is_number_unsigned()) return v.is_number_unsigned();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  return def.type() == v.type();
}

// Overlays `user` onto `base` in place; both are objects.
void overlay(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) {
    throw ParameterError("config: '" + (path.empty() ? "<root>" : path) +
                         "' must be an object");
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ParameterError("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), key);
    } else if (slot.is_array()) {
      if (!it.value().is_array()) {
        throw ParameterError("config: '" + key + "' must be an array");
      }
      for (const auto& e : it.value()) {
        if (!slot.empty() && !compatible(slot.front(), e)) {
          throw ParameterError("config: '" + key + "' has an element of the wrong type");
        }
      }
      slot = it.value();
    } else {
      if (!compatible(slot, it.value())) {
        throw ParameterError("config: '" + key + "' has the wrong type (expected " +
                             std::string(slot.type_name()) + ")");
      }
      slot = it.value();
    }
  }
}

template <class V>
std::array<V, 2> range(const json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<V>>();
  if (v.size() != 2) {
    throw ParameterError(std::string("config: 'degradation.") + key +
                         "' must have two entries");
  }
  if (v[0] > v[1]) {
    throw ParameterError(std::string("config: 'degradation.") + key +
                         "' lower bound exceeds upper bound");
  }
  return {v[0], v[1]};
}

}  // namespace

RunConfig config_from_json(const json& user) {
  json j = to_json(RunConfig{});
  overlay(j, user, "");
  RunConfig c;
  c.image_size = j["image_size"];
  c.levels = j["levels"];
  c.channels = j["channels"];
  c.train_count = j["data"]["train_count"];
  c.test_count = j["data"]["test_count"];
  c.degradations_per_image = j["data"]["degradations_per_image"];
  const json& d = j["degradation"];
  c.degradation.sigma = range<double>(d, "sigma");
  c.degradation.scale = range<double>(d, "scale");
  c.degradation.delta = range<double>(d, "delta");
  c.degradation.quality = range<int>(d, "quality");
  c.second_order = d["second_order"];
  c.schedule_steps = j["schedule"]["steps"];
  c.beta_start = j["schedule"]["beta_start"];
  c.beta_end = j["schedule"]["beta_end"];
  const json& l = j["lcd"];
  c.lcd.image_channels = c.channels;
  c.lcd.base_channels = l["base_channels"];
  c.lcd.channel_mults = l["channel_mults"].get<std::vector<std::size_t>>();
  c.lcd.res_blocks = l["res_blocks"];
  c.lcd.embed_dim = l["embed_dim"];
  c.lcd.groups = l["groups"];
  c.lcd_train.steps = l["train_steps"];
  c.lcd_train.batch_size = l["batch_size"];
  c.lcd_train.lr = l["lr"];
  const json& h = j["hfr"];
  c.hfr.image_channels = c.channels;
  c.hfr.base_channels = h["base_channels"];
  c.hfr.groups = h["groups"];
  c.hfr_train.steps = h["train_steps"];
  c.hfr_train.batch_size = h["batch_size"];
  c.hfr_train.lr = h["lr"];
  c.hfr_train.loss.alpha = h["alpha"];
  c.hfr_train.loss.lambda = h["lambda"];
  const std::string method = j["sampler"]["method"];
  if (method == "ddim") {
    c.sampler = diffusion::Sampler::kDdim;
  } else if (method == "ancestral") {
    c.sampler = diffusion::Sampler::kAncestral;
  } else {
    throw ParameterError("config: 'sampler.method' must be \"ddim\" or \"ancestral\", got \"" +
                         method + "\"");
  }
  c.sample_steps = j["sampler"]["steps"];
  c.seed = j["seed"];
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

void validate(const RunConfig& c) {
  if (c.channels != 1 && c.channels != 3) {
    throw ParameterError("config: 'channels' must be 1 or 3");
  }
  if (c.levels < 1) throw ParameterError("config: 'levels' must be >= 1");
  const std::size_t div = std::size_t{1} << c.levels;
  if (c.image_size == 0 || c.image_size % div != 0) {
    throw DimensionError("config: 'image_size' " + std::to_string(c.image_size) +
                         " must be divisible by 2^levels = " + std::to_string(div));
  }
  if (c.lcd.channel_mults.empty()) {
    throw ParameterError("config: 'lcd.channel_mults' must not be empty");
  }
  const std::size_t band = c.image_size / div;
  const std::size_t lcd_div = std::size_t{1} << (c.lcd.channel_mults.size() - 1);
  if (band % lcd_div != 0) {
    throw DimensionError("config: low-frequency band size " + std::to_string(band) +
                         " must be divisible by " + std::to_string(lcd_div) +
                         " for 'lcd.channel_mults'");
  }
  if (c.lcd.embed_dim == 0 || c.lcd.embed_dim % 2 != 0) {
    throw ParameterError("config: 'lcd.embed_dim' must be even and positive");
  }
  if (c.schedule_steps < 1) throw ParameterError("config: 'schedule.steps' must be >= 1");
  if (!(c.beta_start > 0 && c.beta_start <= c.beta_end && c.beta_end < 1)) {
    throw ParameterError("config: need 0 < 'schedule.beta_start' <= 'schedule.beta_end' < 1");
  }
  if (c.sample_steps < 1 || c.sample_steps > c.schedule_steps) {
    throw ParameterError("config: 'sampler.steps' must be in [1, schedule.steps]");
  }
  if (c.sampler == diffusion::Sampler::kAncestral && c.sample_steps != c.schedule_steps) {
    throw ParameterError("config: ancestral 'sampler.steps' must equal 'schedule.steps'");
  }
  if (c.lcd_train.batch_size == 0 || c.hfr_train.batch_size == 0) {
    throw ParameterError("config: batch sizes must be positive");
  }
  if (c.degradations_per_image == 0) {
    throw ParameterError("config: 'data.degradations_per_image' must be positive");
  }
  if (c.hfr_train.loss.alpha < 0 || c.hfr_train.loss.lambda < 0) {
    throw ParameterError("config: 'hfr.alpha' and 'hfr.lambda' must be >= 0");
  }
  const auto& r = c.degradation;
  if (r.sigma[0] <= 0) throw ParameterError("config: 'degradation.sigma' must be > 0");
  if (r.scale[0] <= 0) throw ParameterError("config: 'degradation.scale' must be > 0");
  if (r.delta[0] < 0) throw ParameterError("config: 'degradation.delta' must be >= 0");
  if (r.quality[0] < 1 || r.quality[1] > 100) {
    throw ParameterError("config: 'degradation.quality' must lie in [1, 100]");
  }
}

}  // namespace wfr::pipeline
