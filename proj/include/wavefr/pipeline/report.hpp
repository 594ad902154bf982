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


// PSNR/SSIM evaluation over matching image sets, as JSON and as an aligned
// text table. An infinite PSNR (identical images) is written as "inf".

#ifndef WAVEFR_PIPELINE_REPORT_HPP_
#define WAVEFR_PIPELINE_REPORT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "wavefr/image.hpp"

namespace wfr::pipeline {

struct ImageScore {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<ImageScore> images;
  std::vector<std::string> missing;  // present on one side only
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

ImageScore score(const std::string& name, const Image& restored, const Image& reference);
void finalize(EvalReport& report);  // recomputes the means

// Matches files by name; unmatched names go to `missing`, the rest are scored.
EvalReport evaluate_dirs(const std::filesystem::path& restored,
                         const std::filesystem::path& reference);

nlohmann::json psnr_json(double psnr);
double psnr_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
std::string format_table(const EvalReport& report);

}  // namespace wfr::pipeline

#endif  // WAVEFR_PIPELINE_REPORT_HPP_
