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


// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails. Pass criterion numbers on the
// command line to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "json.hpp"
#include "op_cases.hpp"
#include "ssim_oracle.hpp"
#include "test_util.hpp"
#include "wavefr/degradation.hpp"
#include "wavefr/diffusion.hpp"
#include "wavefr/metrics.hpp"
#include "wavefr/pipeline/config.hpp"
#include "wavefr/pipeline/restore.hpp"
#include "wavefr/pipeline/toy_data.hpp"
#include "wavefr/wavelet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wfr;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kWaveletMaxErr = 1e-5;
constexpr double kWaveletEnergyRel = 1e-5;
constexpr double kWaveletSeconds = 5.0;
constexpr double kInversionTol = 1e-6;
constexpr double kOracleMeanTol = 0.02;
constexpr double kOracleStdRel = 0.05;
constexpr double kOracleSeconds = 120.0;
constexpr int kOracleDdimSteps = 50;
constexpr double kGradTol = 1e-4;
constexpr int kGradTrials = 20;
constexpr double kGradSeconds = 120.0;
constexpr double kNoiseStdRel = 0.03;
constexpr double kJpeg95MinPsnr = 35.0;
constexpr double kRestoreGainDb = 1.0;
constexpr std::size_t kMaxLcdSteps = 10000;
constexpr std::size_t kMaxHfrSteps = 5000;
constexpr double kPipelineSeconds = 1800.0;
constexpr double kCostRatio = 4.0;
constexpr double kSsimOracleTol = 1e-6;
constexpr double kSsimIdentityTol = 1e-12;

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Moments {
  double mean = 0.0, sd = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(s / static_cast<double>(v.size() - 1));
  return m;
}

// ---------------------------------------------------------------- 1
Result wavelet_exactness() {
  const auto t0 = Clock::now();
  double worst_err = 0.0, worst_energy = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    RngStream rng(1, stream_id("accept-wavelet", i));
    const std::size_t h = 8 * static_cast<std::size_t>(rng.uniform_int(2, 16));
    const std::size_t w = 8 * static_cast<std::size_t>(rng.uniform_int(2, 16));
    const std::size_t c = i % 2 ? 3 : 1;
    const Image img = testing::random_image(h, w, c, rng);
    const double e0 = energy(img);
    for (std::size_t J = 1; J <= 3; ++J) {
      const auto pyr = wavelet::decompose(img, J);
      worst_err = std::max(worst_err, max_abs_diff(wavelet::reconstruct(pyr), img));
      double e = energy(pyr.ll);
      for (const auto& d : pyr.high) e += energy(d.lh) + energy(d.hl) + energy(d.hh);
      worst_energy = std::max(worst_energy, std::abs(e - e0) / e0);
    }
  }
  const double secs = seconds_since(t0);
  return {worst_err <= kWaveletMaxErr && worst_energy <= kWaveletEnergyRel &&
              secs < kWaveletSeconds,
          fmt("max |x - idwt(dwt(x))| %.2e, energy rel err %.2e, %.2f s", worst_err,
              worst_energy, secs)};
}

// ---------------------------------------------------------------- 2
Result schedule_identities() {
  using namespace diffusion;
  bool ok = true;
  const auto s = make_schedule(1000, 1e-4, 0.02);
  for (int t = 1; t <= 1000; ++t) {
    ok &= s.beta[t] > 0.0 && s.beta[t] < 1.0;
    ok &= t == 1 || s.beta[t] > s.beta[t - 1];
    ok &= s.alpha_bar[t] < s.alpha_bar[t - 1];
  }
  double prod = 1.0;
  for (int t = 1; t <= 1000; ++t) prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0);
  const double abar_T = s.alpha_bar[1000];
  ok &= std::abs(abar_T - prod) <= 1e-10 * prod;
  ok &= std::abs(abar_T - 4e-5) <= 0.1 * 4e-5;

  // Inversion: with eps_hat equal to the true noise, the final step recovers y0.
  RngStream rng(2, 0);
  const nn::Shape shape{4, 3, 5, 5};
  nn::Tensor<double> y0(shape), eps(shape), zero(shape);
  for (double& v : y0.data()) v = rng.uniform(-1.0, 1.0);
  for (double& v : eps.data()) v = rng.normal();
  double worst = 0.0;
  {
    const std::vector<int> t(4, 1);
    const auto yt = q_sample(y0, t, eps, s);
    const auto back = ancestral_step(yt, 1, eps, zero, s);
    worst = std::max(worst, testing::max_abs(back.data(), y0.data()));
  }
  for (int t : {1, 10, 250, 1000}) {
    const std::vector<int> tt(4, t);
    const auto yt = q_sample(y0, tt, eps, s);
    const auto back = ddim_step(yt, t, 0, eps, s);
    worst = std::max(worst, testing::max_abs(back.data(), y0.data()));
  }
  ok &= worst <= kInversionTol;
  ok &= ddim_timesteps(1000, 4) == std::vector<int>{1000, 750, 500, 250};
  return {ok, fmt("alpha_bar_T %.4e (independent %.4e), inversion err %.2e", abar_T, prod,
                  worst)};
}

// ---------------------------------------------------------------- 3
Result oracle_sampling(const pipeline::RunConfig& toy) {
  using namespace diffusion;
  const auto t0 = Clock::now();
  const std::size_t n = 2000;
  const auto s = toy.schedule();
  const auto oracle = gaussian_oracle_denoiser<double>({0.3}, 0.04, s);
  const nn::Tensor<double> cond({n, 1, 1, 1});
  auto draw = [&](Sampler m, int steps, std::uint64_t seed) {
    std::vector<RngStream> rngs;
    for (std::size_t i = 0; i < n; ++i) rngs.emplace_back(seed, stream_id("accept-oracle", i));
    const auto out = sample(oracle, cond, s, m, steps, rngs);
    return moments(out.data());
  };
  const Moments a = draw(Sampler::kAncestral, s.steps, 31);
  const Moments d = draw(Sampler::kDdim, kOracleDdimSteps, 32);
  const double secs = seconds_since(t0);
  auto within = [](const Moments& m) {
    return std::abs(m.mean - 0.3) <= kOracleMeanTol &&
           std::abs(m.sd - 0.2) <= kOracleStdRel * 0.2;
  };
  return {within(a) && within(d) && secs < kOracleSeconds,
          fmt("T=%d: ancestral mean %.4f std %.4f, DDIM-%d mean %.4f std %.4f "
              "(target 0.3 +-%.2f, 0.2 +-%.0f%%), %.1f s",
              s.steps, a.mean, a.sd, kOracleDdimSteps, d.mean, d.sd, kOracleMeanTol,
              100 * kOracleStdRel, secs)};
}

// ---------------------------------------------------------------- 4
Result gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  auto cases = testing::operator_cases();
  for (auto& c : testing::network_cases()) cases.push_back(std::move(c));
  for (const auto& c : cases) {
    RngStream rng(4, stream_id("accept-grad-" + c.name, 0));
    for (int i = 0; i < kGradTrials; ++i) {
      const double e = c.trial(rng);
      if (!(e <= worst)) {
        worst = e;
        worst_name = c.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < kGradTol && secs < kGradSeconds,
          fmt("%zu cases x %d trials, worst relative error %.2e (%s), %.1f s", cases.size(),
              kGradTrials, worst, worst_name.c_str(), secs)};
}

// ---------------------------------------------------------------- 5
Result degradation_checks() {
  using namespace degradation;
  bool ok = true;
  const auto faces = pipeline::toy_faces(100, 64, 3, 5);

  const DegradationRanges ranges;
  const Image a = pipeline::degrade_indexed(faces[0], 9, "degrade", 3, ranges, true);
  const Image b = pipeline::degrade_indexed(faces[0], 9, "degrade", 3, ranges, true);
  const bool deterministic = a.data == b.data;
  ok &= deterministic;

  const Image flat(256, 256, 3, 0.5f);
  RngStream nr(5, stream_id("accept-noise", 0));
  const Image noisy = add_gaussian_noise(flat, 20.0, nr);
  std::vector<double> dev(noisy.data.begin(), noisy.data.end());
  const double sd = moments(dev).sd, target = 20.0 / 255.0;
  ok &= std::abs(sd - target) <= kNoiseStdRel * target;

  double worst_q95 = 1e9;
  for (std::size_t i = 0; i < 20; ++i) {
    worst_q95 = std::min(worst_q95, metrics::psnr(jpeg_artifact(faces[i], 95), faces[i]));
  }
  ok &= worst_q95 >= kJpeg95MinPsnr;

  const DegradationParams harsh{10.0, 16.0, 15.0, 35, false};
  const DegradationParams mild{0.5, 2.0, 2.0, 90, false};
  double p_harsh = 0.0, p_mild = 0.0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    RngStream r1(5, stream_id("accept-harsh", i)), r2(5, stream_id("accept-mild", i));
    p_harsh += metrics::psnr(degrade(faces[i], harsh, r1), faces[i]);
    p_mild += metrics::psnr(degrade(faces[i], mild, r2), faces[i]);
  }
  p_harsh /= faces.size();
  p_mild /= faces.size();
  ok &= p_harsh < p_mild;
  return {ok, fmt("deterministic %s, noise std %.5f (target %.5f), JPEG q95 min PSNR %.2f dB, "
                  "harsh %.2f dB < mild %.2f dB",
                  deterministic ? "yes" : "no", sd, target, worst_q95, p_harsh, p_mild)};
}

// ---------------------------------------------------------------- CLI helpers
int run_cli(const fs::path& cwd, const std::string& args, const fs::path& log) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" WAVEFR_CLI_PATH "' " + args +
                          " >>'" + log.string() + "' 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

struct PipelineRun {
  bool ok = false;
  std::string error;
  double seconds = 0.0;
  std::map<std::string, double> psnr;
};

// Full run with the acceptance configuration; shared by criteria 6 and 7.
const PipelineRun& acceptance_pipeline() {
  static std::optional<PipelineRun> cached;
  if (cached) return *cached;
  PipelineRun r;
  const fs::path work = fs::path(WAVEFR_ACCEPT_WORK) / "full";
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path log = work / "log.txt";
  const std::string cfg = "--config '" WAVEFR_CONFIG_DIR "/acceptance.json' ";
  const std::vector<std::string> steps{
      cfg + "--out train_hq gen-data",
      cfg + "--out test_hq gen-data --count 50 --first 500",
      cfg + "--out test_lq degrade --in test_hq",
      cfg + "--out lcd train-lcd --hq train_hq",
      cfg + "--out hfr train-hfr --hq train_hq",
      cfg + "--out ablate ablate --in test_lq --reference test_hq --lcd lcd/lcd.wfck "
            "--hfr hfr/hfr.wfck",
  };
  const auto t0 = Clock::now();
  for (const auto& s : steps) {
    const int rc = run_cli(work, s, log);
    if (rc != 0) {
      r.error = fmt("'%s' exited with %d (see %s)", s.c_str(), rc, log.c_str());
      cached = r;
      return *cached;
    }
  }
  r.seconds = seconds_since(t0);
  const json ablation = read_json(work / "ablate" / "ablation.json");
  for (const auto& row : ablation["variants"]) {
    const auto& p = row["mean_psnr"];
    r.psnr[row["variant"].get<std::string>()] =
        p.is_number() ? p.get<double>() : std::numeric_limits<double>::infinity();
  }
  r.ok = true;
  cached = r;
  return *cached;
}

// ---------------------------------------------------------------- 6
Result restoration_gain(const pipeline::RunConfig& c) {
  const auto& r = acceptance_pipeline();
  if (!r.ok) return {false, r.error};
  const double lq = r.psnr.at("LQ"), full = r.psnr.at("LCD+HFR1+HFR2");
  const bool budget = c.lcd_train.steps <= kMaxLcdSteps && c.hfr_train.steps <= kMaxHfrSteps &&
                      r.seconds <= kPipelineSeconds;
  return {budget && full >= lq + kRestoreGainDb,
          fmt("restored %.3f dB vs LQ %.3f dB (gain %+.3f, need >= %.1f); %zu LCD + %zu HFR "
              "steps, pipeline %.0f s",
              full, lq, full - lq, kRestoreGainDb, c.lcd_train.steps, c.hfr_train.steps,
              r.seconds)};
}

// ---------------------------------------------------------------- 7
Result ablation_order() {
  const auto& r = acceptance_pipeline();
  if (!r.ok) return {false, r.error};
  const double full = r.psnr.at("LCD+HFR1+HFR2"), h2 = r.psnr.at("LCD+HFR2"),
               h1 = r.psnr.at("LCD+HFR1"), lcd = r.psnr.at("LCD");
  return {full > h1 && full > h2 && h1 > lcd && h2 > lcd,
          fmt("LCD+HFR1+HFR2 %.3f, LCD+HFR1 %.3f, LCD+HFR2 %.3f, LCD %.3f dB", full, h1, h2,
              lcd)};
}

// ---------------------------------------------------------------- 8
Result denoiser_cost(const pipeline::RunConfig& c) {
  const std::vector<std::size_t> levels{0, 2};
  const auto costs = pipeline::denoiser_step_costs(c, levels, 7);
  const double ratio = costs[0].seconds / costs[1].seconds;
  return {ratio >= kCostRatio,
          fmt("J=0 %.3f ms, J=2 %.3f ms per evaluation, ratio %.2f (MAC ratio %.2f)",
              1e3 * costs[0].seconds, 1e3 * costs[1].seconds, ratio,
              static_cast<double>(costs[0].macs) / static_cast<double>(costs[1].macs))};
}

// ---------------------------------------------------------------- 9
Result metric_exactness() {
  bool ok = metrics::psnr_from_mse(0.01) == 20.0;
  ok &= std::isinf(metrics::psnr_from_mse(0.0));
  RngStream rng(9, 0);
  double id_err = 0.0, oracle_err = 0.0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t h = 11 + 3 * i, w = 40 - 2 * i, c = i % 2 ? 3 : 1;
    const Image a = testing::random_image(h, w, c, rng);
    Image b = a;
    for (float& v : b.data) v = std::clamp(v + static_cast<float>(0.2 * rng.normal()), 0.0f, 1.0f);
    id_err = std::max(id_err, std::abs(metrics::ssim(a, a) - 1.0));
    oracle_err = std::max(oracle_err, std::abs(metrics::ssim(a, b) - testing::direct_ssim(a, b)));
  }
  ok &= id_err <= kSsimIdentityTol && oracle_err <= kSsimOracleTol;
  return {ok, fmt("PSNR(mse=0.01) = %.17g, |SSIM(x,x) - 1| %.1e, SSIM vs direct %.1e",
                  metrics::psnr_from_mse(0.01), id_err, oracle_err)};
}

// ---------------------------------------------------------------- 10
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    if (e.path().filename() == "timing.json" || e.path().filename() == "log.txt") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[rel] = ss.str();
  }
  return out;
}

Result reproducibility() {
  const fs::path base = fs::path(WAVEFR_ACCEPT_WORK) / "repro";
  fs::remove_all(base);
  const std::string cfg = "--config '" WAVEFR_CONFIG_DIR "/smoke.json' ";
  const std::vector<std::string> steps{
      cfg + "--out train_hq gen-data",
      cfg + "--out test_hq gen-data --count 3 --first 100",
      cfg + "--out test_lq degrade --in test_hq",
      cfg + "--out bands decompose --in test_hq/face_00100.ppm",
      cfg + "--out lcd train-lcd --hq train_hq",
      cfg + "--out hfr train-hfr --hq train_hq",
      cfg + "--out restored restore --in test_lq --lcd lcd/lcd.wfck --hfr hfr/hfr.wfck",
      cfg + "--out eval eval --restored restored --reference test_hq",
      cfg + "--out ablate ablate --in test_lq --reference test_hq --lcd lcd/lcd.wfck "
            "--hfr hfr/hfr.wfck --repeats 1",
  };
  std::vector<std::map<std::string, std::string>> trees;
  for (const char* name : {"a", "b"}) {
    const fs::path dir = base / name;
    fs::create_directories(dir);
    for (const auto& s : steps) {
      const int rc = run_cli(dir, s, dir / "log.txt");
      if (rc != 0) return {false, fmt("run %s: '%s' exited with %d", name, s.c_str(), rc)};
    }
    trees.push_back(tree_bytes(dir));
  }
  std::size_t differing = 0;
  std::string first;
  for (const auto& [k, v] : trees[0]) {
    const auto it = trees[1].find(k);
    if (it == trees[1].end() || it->second != v) {
      if (differing++ == 0) first = k;
    }
  }
  differing += trees[1].size() > trees[0].size() ? trees[1].size() - trees[0].size() : 0;
  return {differing == 0 && trees[0].size() == trees[1].size(),
          differing == 0 ? fmt("%zu files byte-identical across two runs", trees[0].size())
                         : fmt("%zu files differ (first: %s)", differing, first.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const auto config = pipeline::load_config(WAVEFR_CONFIG_DIR "/acceptance.json");

  const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
      {"Haar DWT perfect reconstruction and energy", wavelet_exactness},
      {"noise schedule and sampler identities", schedule_identities},
      {"Gaussian-oracle sampling moments", [&] { return oracle_sampling(config); }},
      {"finite-difference gradients", gradients},
      {"degradation model", degradation_checks},
      {"restoration beats LQ input", [&] { return restoration_gain(config); }},
      {"HFR ablation ordering", ablation_order},
      {"denoiser cost at J=2 vs full resolution", [&] { return denoiser_cost(config); }},
      {"metric exactness", metric_exactness},
      {"pipeline reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("%s  criterion %2d  %s: %s\n", r.pass ? "PASS" : "FAIL", n, criteria[i].first,
                r.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
