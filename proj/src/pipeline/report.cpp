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


#include "wavefr/pipeline/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "wavefr/error.hpp"
#include "wavefr/metrics.hpp"
#include "wavefr/pipeline/ppm.hpp"

namespace wfr::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

ImageScore score(const std::string& name, const Image& restored, const Image& reference) {
  return {name, metrics::psnr(restored, reference), metrics::ssim(restored, reference)};
}

void finalize(EvalReport& r) {
  double p = 0.0, s = 0.0;
  for (const auto& im : r.images) {
    p += im.psnr;
    s += im.ssim;
  }
  const double n = static_cast<double>(r.images.size());
  r.mean_psnr = r.images.empty() ? 0.0 : p / n;
  r.mean_ssim = r.images.empty() ? 0.0 : s / n;
}

EvalReport evaluate_dirs(const fs::path& restored, const fs::path& reference) {
  std::map<std::string, fs::path> a, b;
  for (const auto& p : list_images(restored)) a[p.filename().string()] = p;
  for (const auto& p : list_images(reference)) b[p.filename().string()] = p;
  EvalReport r;
  std::vector<std::string> names;
  for (const auto& [name, p] : a) {
    if (b.count(name)) {
      names.push_back(name);
    } else {
      r.missing.push_back(name);
    }
  }
  for (const auto& [name, p] : b) {
    if (!a.count(name)) r.missing.push_back(name);
  }
  std::sort(r.missing.begin(), r.missing.end());
  r.images.resize(names.size());
  std::vector<std::string> errors(names.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < names.size(); ++i) {
    try {
      r.images[i] = score(names[i], read_ppm(a[names[i]]), read_ppm(b[names[i]]));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw IoError("eval: " + e);
  }
  finalize(r);
  return r;
}

json psnr_json(double psnr) {
  if (std::isinf(psnr)) return "inf";
  return psnr;
}

double psnr_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw ParameterError("report: bad PSNR value " + j.dump());
  }
  return j.get<double>();
}

json to_json(const EvalReport& r) {
  json images = json::array();
  for (const auto& im : r.images) {
    images.push_back({{"name", im.name}, {"psnr", psnr_json(im.psnr)}, {"ssim", im.ssim}});
  }
  return {{"images", images},
          {"missing", r.missing},
          {"mean_psnr", psnr_json(r.mean_psnr)},
          {"mean_ssim", r.mean_ssim},
          {"count", r.images.size()}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  for (const auto& im : j.at("images")) {
    r.images.push_back({im.at("name").get<std::string>(), psnr_from_json(im.at("psnr")),
                        im.at("ssim").get<double>()});
  }
  r.missing = j.at("missing").get<std::vector<std::string>>();
  r.mean_psnr = psnr_from_json(j.at("mean_psnr"));
  r.mean_ssim = j.at("mean_ssim").get<double>();
  return r;
}

std::string format_table(const EvalReport& r) {
  std::size_t w = 5;
  for (const auto& im : r.images) w = std::max(w, im.name.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %10s  %8s\n", static_cast<int>(w), "image",
                "PSNR(dB)", "SSIM");
  out += buf;
  auto row = [&](const std::string& name, double p, double s) {
    std::snprintf(buf, sizeof buf, "%-*s  %10.4f  %8.5f\n", static_cast<int>(w),
                  name.c_str(), p, s);
    out += buf;
  };
  for (const auto& im : r.images) row(im.name, im.psnr, im.ssim);
  row("mean", r.mean_psnr, r.mean_ssim);
  for (const auto& m : r.missing) out += "missing: " + m + "\n";
  return out;
}

}  // namespace wfr::pipeline
