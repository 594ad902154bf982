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


// Command-line front end: data generation, degradation, training,
// restoration, evaluation and ablation. Exit codes: 0 success, 1 usage
// error, 2 data or contract error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wavefr/error.hpp"
#include "wavefr/metrics.hpp"
#include "wavefr/pipeline/checkpoint.hpp"
#include "wavefr/pipeline/config.hpp"
#include "wavefr/pipeline/ppm.hpp"
#include "wavefr/pipeline/report.hpp"
#include "wavefr/pipeline/restore.hpp"
#include "wavefr/pipeline/toy_data.hpp"
#include "wavefr/wavelet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wfr;
using namespace wfr::pipeline;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

RunConfig resolve(const Globals& g) {
  RunConfig c = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  return c;
}

fs::path out_dir(const Globals& g) {
  if (g.out.empty()) throw ParameterError("--out is required for this command");
  return g.out;
}

void write_resolved(const fs::path& out, const std::string& command,
                    const RunConfig& c, const json& args) {
  const json j = {{"command", command}, {"config", to_json(c)}, {"args", args}};
  write_text(out / "resolved_config.json", j.dump(2) + "\n");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<Image> read_all(const std::vector<fs::path>& paths) {
  std::vector<Image> out(paths.size());
  std::vector<std::string> errors(paths.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < paths.size(); ++i) {
    try {
      out[i] = read_ppm(paths[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw IoError(e);
  }
  return out;
}

std::vector<fs::path> require_images(const std::string& dir) {
  auto paths = list_images(dir);
  if (paths.empty()) throw IoError("no .ppm/.pgm images in '" + dir + "'");
  return paths;
}

// HQ/LQ training pairs matched by file name. Without an LQ directory the LQ
// side is synthesised from the run configuration.
TrainingSet load_pairs(const std::string& hq_dir, const std::string& lq_dir,
                       const RunConfig& c) {
  const auto hq_paths = require_images(hq_dir);
  const auto hq = read_all(hq_paths);
  if (lq_dir.empty()) return make_training_set(hq, c);
  std::vector<fs::path> lq_paths;
  for (const auto& p : hq_paths) {
    const fs::path q = fs::path(lq_dir) / p.filename();
    if (!fs::exists(q)) throw IoError("missing LQ counterpart '" + q.string() + "'");
    lq_paths.push_back(q);
  }
  TrainingSet set;
  set.hq = hq;
  set.lq = read_all(lq_paths);
  return set;
}

std::string loss_csv(const std::vector<double>& losses) {
  std::string s = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, losses[i]);
    s += buf;
  }
  return s;
}

auto progress(const char* what, std::size_t total) {
  const std::size_t every = std::max<std::size_t>(1, total / 20);
  return [what, total, every](std::size_t step, double loss) {
    if ((step + 1) % every == 0 || step + 1 == total) {
      std::fprintf(stderr, "[%s] step %zu/%zu loss %.5f\n", what, step + 1, total, loss);
    }
  };
}

Image band_view(const Image& band, double offset, double scale) {
  Image v = band;
  for (float& x : v.data) x = static_cast<float>(offset + x / scale);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavefr: frequency-domain face restoration toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config_path, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", seed_value, "global 64-bit seed (overrides config)");
  app.add_option("--out", g.out, "output directory");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write procedural toy face images");
  std::size_t gen_count = 0, gen_size = 0, gen_first = 0;
  gen->add_option("--count", gen_count, "number of images (default: data.train_count)");
  gen->add_option("--size", gen_size, "side length in pixels (default: image_size)");
  gen->add_option("--first", gen_first, "index of the first image")->default_val(0);

  // degrade
  auto* deg = app.add_subcommand("degrade", "synthesise LQ copies of a directory");
  std::string deg_in;
  deg->add_option("--in", deg_in, "directory of HQ images")->required();

  // decompose
  auto* dec = app.add_subcommand("decompose", "write the Haar sub-bands of one image");
  std::string dec_in;
  std::size_t dec_levels = 0;
  dec->add_option("--in", dec_in, "input image")->required();
  dec->add_option("--levels", dec_levels, "decomposition depth (default: levels)");

  // train-lcd / train-hfr
  std::string lcd_hq, lcd_lq, hfr_hq, hfr_lq;
  auto* tl = app.add_subcommand("train-lcd", "train the low-frequency denoiser");
  tl->add_option("--hq", lcd_hq, "directory of HQ images")->required();
  tl->add_option("--lq", lcd_lq, "matching LQ images (default: synthesised)");
  auto* th = app.add_subcommand("train-hfr", "train the high-frequency recovery network");
  th->add_option("--hq", hfr_hq, "directory of HQ images")->required();
  th->add_option("--lq", hfr_lq, "matching LQ images (default: synthesised)");

  // restore
  auto* rs = app.add_subcommand("restore", "restore a directory of LQ images");
  std::string rs_in, rs_lcd, rs_hfr;
  rs->add_option("--in", rs_in, "directory of LQ images")->required();
  rs->add_option("--lcd", rs_lcd, "denoiser checkpoint")->required();
  rs->add_option("--hfr", rs_hfr, "HFR checkpoint")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "PSNR/SSIM of restored images against references");
  std::string ev_restored, ev_reference;
  ev->add_option("--restored", ev_restored, "restored images")->required();
  ev->add_option("--reference", ev_reference, "reference images")->required();

  // ablate
  auto* ab = app.add_subcommand("ablate", "HFR ablation and denoiser cost per level");
  std::string ab_in, ab_ref, ab_lcd, ab_hfr;
  std::size_t ab_repeats = 5;
  ab->add_option("--in", ab_in, "directory of LQ images")->required();
  ab->add_option("--reference", ab_ref, "matching HQ images")->required();
  ab->add_option("--lcd", ab_lcd, "denoiser checkpoint")->required();
  ab->add_option("--hfr", ab_hfr, "HFR checkpoint")->required();
  ab->add_option("--repeats", ab_repeats, "timing repetitions per level")->default_val(5);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*seed_opt) g.seed = seed_value;

  try {
    const RunConfig c = resolve(g);

    if (*gen) {
      const fs::path out = out_dir(g);
      const std::size_t n = gen_count ? gen_count : c.train_count;
      const std::size_t size = gen_size ? gen_size : c.image_size;
      const auto images = toy_faces(n, size, c.channels, c.seed, gen_first);
      char name[32];
      for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(name, sizeof name, "face_%05zu.ppm", gen_first + i);
        write_ppm(out / name, images[i]);
      }
      write_resolved(out, "gen-data", c, {{"count", n}, {"size", size}, {"first", gen_first}});
      std::fprintf(stderr, "wrote %zu images to %s\n", n, out.string().c_str());
      return 0;
    }

    if (*deg) {
      const fs::path out = out_dir(g);
      const auto paths = require_images(deg_in);
      const auto hq = read_all(paths);
      std::vector<Image> lq(hq.size());
#pragma omp parallel for schedule(dynamic)
      for (std::size_t i = 0; i < hq.size(); ++i) {
        lq[i] = degrade_indexed(hq[i], c.seed, "degrade", i, c.degradation, c.second_order);
      }
      for (std::size_t i = 0; i < hq.size(); ++i) write_ppm(out / paths[i].filename(), lq[i]);
      write_resolved(out, "degrade", c, {{"in", deg_in}});
      return 0;
    }

    if (*dec) {
      const fs::path out = out_dir(g);
      const std::size_t J = dec_levels ? dec_levels : c.levels;
      const auto pyr = wavelet::decompose(read_ppm(dec_in), J);
      const double scale_ll = static_cast<double>(std::size_t{1} << J);
      write_ppm(out / ("ll" + std::to_string(J) + ".ppm"), band_view(pyr.ll, 0.0, scale_ll));
      for (std::size_t j = 1; j <= J; ++j) {
        const auto& d = pyr.high[j - 1];
        const double s = static_cast<double>(std::size_t{1} << j);
        const std::string k = std::to_string(j);
        write_ppm(out / ("lh" + k + ".ppm"), band_view(d.lh, 0.5, s));
        write_ppm(out / ("hl" + k + ".ppm"), band_view(d.hl, 0.5, s));
        write_ppm(out / ("hh" + k + ".ppm"), band_view(d.hh, 0.5, s));
      }
      write_resolved(out, "decompose", c, {{"in", dec_in}, {"levels", J}});
      return 0;
    }

    if (*tl) {
      const fs::path out = out_dir(g);
      const auto set = load_pairs(lcd_hq, lcd_lq, c);
      RngStream init(c.seed, stream_id("lcd-init", 0));
      diffusion::Denoiser<float> model(c.lcd, init);
      const auto losses =
          diffusion::train_lcd(model, lcd_pairs(set, c.levels), c.schedule(), c.lcd_train,
                               c.seed, progress("lcd", c.lcd_train.steps));
      save_checkpoint(out / "lcd.wfck",
                      make_checkpoint(model.params(), lcd_metadata(c, losses.size())));
      write_text(out / "lcd_loss.csv", loss_csv(losses));
      write_resolved(out, "train-lcd", c, {{"hq", lcd_hq}, {"lq", lcd_lq}});
      return 0;
    }

    if (*th) {
      const fs::path out = out_dir(g);
      const auto set = load_pairs(hfr_hq, hfr_lq, c);
      RngStream init(c.seed, stream_id("hfr-init", 0));
      hfr::HfrNet<float> net(c.hfr, init);
      const auto losses = hfr::train_hfr(net, hfr_pairs(set), c.hfr_train, c.seed,
                                         progress("hfr", c.hfr_train.steps));
      save_checkpoint(out / "hfr.wfck",
                      make_checkpoint(net.params(), hfr_metadata(c, losses.size())));
      write_text(out / "hfr_loss.csv", loss_csv(losses));
      write_resolved(out, "train-hfr", c, {{"hq", hfr_hq}, {"lq", hfr_lq}});
      return 0;
    }

    if (*rs) {
      const fs::path out = out_dir(g);
      const auto lcd = denoiser_from_checkpoint(load_checkpoint(rs_lcd), c);
      const auto hnet = hfr_from_checkpoint(load_checkpoint(rs_hfr), c);
      const auto paths = require_images(rs_in);
      const auto lq = read_all(paths);
      const auto restored = Restorer{lcd, hnet, c}.restore(lq, c.seed);
      for (std::size_t i = 0; i < paths.size(); ++i) {
        write_ppm(out / paths[i].filename(), restored[i]);
      }
      write_resolved(out, "restore", c, {{"in", rs_in}, {"lcd", rs_lcd}, {"hfr", rs_hfr}});
      return 0;
    }

    if (*ev) {
      const fs::path out = out_dir(g);
      const auto report = evaluate_dirs(ev_restored, ev_reference);
      write_json(out / "report.json", to_json(report));
      write_text(out / "report.txt", format_table(report));
      write_resolved(out, "eval", c, {{"restored", ev_restored}, {"reference", ev_reference}});
      std::cout << format_table(report);
      if (!report.missing.empty()) {
        std::fprintf(stderr, "error: %zu image(s) without a counterpart\n",
                     report.missing.size());
        return 2;
      }
      return 0;
    }

    if (*ab) {
      const fs::path out = out_dir(g);
      const auto lcd = denoiser_from_checkpoint(load_checkpoint(ab_lcd), c);
      const auto hnet = hfr_from_checkpoint(load_checkpoint(ab_hfr), c);
      const auto paths = require_images(ab_in);
      const auto lq = read_all(paths);
      std::vector<fs::path> ref_paths;
      for (const auto& p : paths) {
        const fs::path q = fs::path(ab_ref) / p.filename();
        if (!fs::exists(q)) throw IoError("missing reference '" + q.string() + "'");
        ref_paths.push_back(q);
      }
      const auto ref = read_all(ref_paths);
      const auto variants = Restorer{lcd, hnet, c}.restore_variants(lq, c.seed);

      json rows = json::array();
      std::string table = "variant          PSNR(dB)      SSIM\n";
      char buf[128];
      auto add_row = [&](const std::string& name, const std::vector<Image>& imgs) {
        EvalReport r;
        for (std::size_t i = 0; i < imgs.size(); ++i) {
          r.images.push_back(score(paths[i].filename().string(), imgs[i], ref[i]));
        }
        finalize(r);
        rows.push_back({{"variant", name},
                        {"mean_psnr", psnr_json(r.mean_psnr)},
                        {"mean_ssim", r.mean_ssim}});
        std::snprintf(buf, sizeof buf, "%-14s  %10.4f  %8.5f\n", name.c_str(), r.mean_psnr,
                      r.mean_ssim);
        table += buf;
      };
      add_row("LQ", lq);
      for (Variant v : kAllVariants) add_row(variant_name(v), variants[static_cast<int>(v)]);
      write_json(out / "ablation.json", {{"variants", rows}});
      write_text(out / "ablation.txt", table);
      std::cout << table;

      // Wall-clock timings are not reproducible; they go to their own file.
      const std::vector<std::size_t> levels{0, 1, 2, 3};
      json costs = json::array();
      std::cout << "\nlevel  band   ms/step        MACs/step\n";
      for (const auto& s : denoiser_step_costs(c, levels, ab_repeats)) {
        costs.push_back({{"level", s.level},
                         {"band_size", s.band_size},
                         {"seconds", s.seconds},
                         {"macs", s.macs}});
        std::snprintf(buf, sizeof buf, "J=%zu    %4zu  %8.3f  %15llu\n", s.level, s.band_size,
                      1e3 * s.seconds, static_cast<unsigned long long>(s.macs));
        std::cout << buf;
      }
      write_json(out / "timing.json", {{"denoiser_step", costs}});
      write_resolved(out, "ablate", c,
                     {{"in", ab_in}, {"reference", ab_ref}, {"lcd", ab_lcd}, {"hfr", ab_hfr}});
      return 0;
    }
  } catch (const wfr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
