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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <limits>

#include "test_util.hpp"
#include "wavefr/error.hpp"
#include "wavefr/metrics.hpp"
#include "wavefr/pipeline/checkpoint.hpp"
#include "wavefr/pipeline/config.hpp"
#include "wavefr/pipeline/ppm.hpp"
#include "wavefr/pipeline/report.hpp"
#include "wavefr/pipeline/restore.hpp"
#include "wavefr/pipeline/toy_data.hpp"

using namespace wfr;
using namespace wfr::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wavefr_pipeline_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Image quantised(const Image& img) {
  Image q = img;
  for (float& v : q.data) v = static_cast<float>(std::lround(255.0f * std::clamp(v, 0.0f, 1.0f))) / 255.0f;
  return q;
}

RunConfig tiny_run() {
  RunConfig c;
  c.image_size = 16;
  c.schedule_steps = 20;
  c.beta_start = 1e-3;
  c.beta_end = 0.2;
  c.sample_steps = 5;
  c.lcd.base_channels = 4;
  c.lcd.channel_mults = {1, 2};
  c.lcd.embed_dim = 8;
  c.lcd.groups = 2;
  c.hfr.base_channels = 4;
  c.hfr.groups = 2;
  c.degradations_per_image = 2;
  return c;
}

}  // namespace

TEST_CASE("PPM round trip is exact after quantisation") {
  RngStream rng(1, 0);
  for (std::size_t ch : {1u, 3u}) {
    const Image img = quantised(wfr::testing::random_image(7, 5, ch, rng));
    const auto bytes = encode_ppm(img);
    CHECK(bytes[0] == 'P');
    CHECK(bytes[1] == (ch == 3 ? '6' : '5'));
    const Image back = decode_ppm(bytes);
    CHECK(back.same_shape(img));
    CHECK(back.data == img.data);
    CHECK(encode_ppm(back) == bytes);
  }
}

TEST_CASE("PPM quantises with rounding and clamping") {
  Image img(1, 4, 1);
  img.data = {-0.5f, 0.5f, 0.9999f, 2.0f};
  const auto bytes = encode_ppm(img);
  const std::vector<std::uint8_t> px(bytes.end() - 4, bytes.end());
  CHECK(px == std::vector<std::uint8_t>{0, 128, 255, 255});
}

TEST_CASE("PPM decoding accepts comments and rejects malformed input") {
  const std::string text = "P5\n# a comment\n2 1\n255\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  bytes.push_back(0);
  bytes.push_back(255);
  const Image img = decode_ppm(bytes);
  CHECK(img.width == 2);
  CHECK(img.data[1] == 1.0f);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_ppm(bytes), IoError);
  const std::string p3 = "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(decode_ppm(std::vector<std::uint8_t>(p3.begin(), p3.end())), IoError);
  const std::string deep = "P5\n1 1\n65535\n\x01\x02";
  CHECK_THROWS_AS(decode_ppm(std::vector<std::uint8_t>(deep.begin(), deep.end())), IoError);
}

TEST_CASE("missing files raise IoError naming the path") {
  try {
    read_ppm("/nonexistent/dir/face.ppm");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/face.ppm") != std::string::npos);
  }
  CHECK_THROWS_AS(list_images("/nonexistent/dir"), IoError);
}

TEST_CASE("list_images is sorted and filters extensions") {
  const auto dir = scratch("list");
  for (const char* n : {"b.ppm", "a.pgm", "c.txt", "a.ppm"}) write_text(dir / n, "x");
  const auto files = list_images(dir);
  REQUIRE(files.size() == 3);
  CHECK(files[0].filename() == "a.pgm");
  CHECK(files[1].filename() == "a.ppm");
  CHECK(files[2].filename() == "b.ppm");
}

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.metadata = {{"kind", "lcd"}, {"levels", 2}};
  c.tensors.push_back({"z.w", {2, 2}, {1.0f, -2.5f, 3.25f, 0.0f}});
  c.tensors.push_back({"a.b", {3}, {std::numeric_limits<float>::denorm_min(), -0.0f, 1e30f}});
  return c;
}

}  // namespace

TEST_CASE("checkpoint encode/decode is bit-identical and sorted") {
  const auto bytes = encode_checkpoint(sample_checkpoint());
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "WFCK");
  CHECK(bytes[4] == kCheckpointVersion);
  const Checkpoint back = decode_checkpoint(bytes);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].name == "a.b");
  CHECK(back.tensors[1].shape == nn::Shape{2, 2});
  CHECK(std::signbit(back.tensors[0].data[1]));
  CHECK(back.metadata == sample_checkpoint().metadata);
  CHECK(encode_checkpoint(back) == bytes);

  const auto dir = scratch("ckpt");
  save_checkpoint(dir / "x.wfck", back);
  CHECK(read_file(dir / "x.wfck") == bytes);
  CHECK(encode_checkpoint(load_checkpoint(dir / "x.wfck")) == bytes);
}

TEST_CASE("checkpoint rejects version mismatch, corruption and duplicates") {
  auto bytes = encode_checkpoint(sample_checkpoint());
  auto wrong = bytes;
  wrong[4] = 2;
  try {
    decode_checkpoint(wrong);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), IoError);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(truncated), IoError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), IoError);

  Checkpoint dup = sample_checkpoint();
  dup.tensors.push_back(dup.tensors.front());
  CHECK_THROWS_AS(encode_checkpoint(dup), ContractError);
  Checkpoint bad = sample_checkpoint();
  bad.tensors[0].shape = {3, 3};
  CHECK_THROWS_AS(encode_checkpoint(bad), ContractError);
}

TEST_CASE("parameter stores survive a checkpoint") {
  RngStream rng(2, 0);
  nn::ParameterStore<float> ps;
  nn::add_res_block(ps, "rb", 2, 4, 3, rng);
  const auto back = checkpoint_params(decode_checkpoint(encode_checkpoint(make_checkpoint(ps, {}))));
  REQUIRE(back.size() == ps.size());
  for (const auto& [name, t] : ps) {
    CHECK(back.get(name).shape() == t.shape());
    CHECK(back.get(name).values() == t.values());
  }
}

TEST_CASE("config: defaults echo and overlay") {
  const RunConfig d = config_from_json(json::object());
  CHECK(d.levels == 2);
  CHECK(d.sample_steps == 250);
  CHECK(to_json(config_from_json(to_json(d))) == to_json(d));

  const RunConfig c = config_from_json(
      json::parse(R"({"image_size": 32, "schedule": {"steps": 200}, "sampler": {"steps": 50},
                      "degradation": {"sigma": [0.5, 2.0]}, "seed": 9})"));
  CHECK(c.image_size == 32);
  CHECK(c.schedule_steps == 200);
  CHECK(c.beta_start == 1e-4);
  CHECK(c.degradation.sigma == std::array<double, 2>{0.5, 2.0});
  CHECK(c.seed == 9);
  const json echo = to_json(c);
  CHECK(echo["schedule"]["steps"] == 200);
  CHECK(echo["lcd"]["channel_mults"] == json::array({1, 2, 2}));
}

TEST_CASE("config: unknown keys and bad values are named") {
  auto message = [](const char* text) -> std::string {
    try {
      config_from_json(json::parse(text));
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message(R"({"lcd": {"base_chanels": 8}})").find("lcd.base_chanels") != std::string::npos);
  CHECK(message(R"({"levels": "two"})").find("levels") != std::string::npos);
  CHECK(message(R"({"image_size": 60, "levels": 3})").find("image_size") != std::string::npos);
  CHECK(message(R"({"sampler": {"steps": 2000}})").find("sampler.steps") != std::string::npos);
  CHECK(message(R"({"sampler": {"method": "ancestral"}})").find("ancestral") != std::string::npos);
  CHECK(message(R"({"sampler": {"method": "euler"}})").find("sampler.method") != std::string::npos);
  CHECK(message(R"({"degradation": {"quality": [0, 95]}})").find("quality") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/c.json"), IoError);
}

TEST_CASE("toy faces are deterministic, in range, and have detail energy") {
  const auto a = toy_faces(10, 64, 3, 7), b = toy_faces(10, 64, 3, 7);
  const auto c = toy_faces(3, 64, 3, 7, 4);
  double hf = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(a[i].data == b[i].data);
    CHECK(a[i].height == 64);
    CHECK(a[i].channels == 3);
    for (float v : a[i].data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    hf += high_frequency_fraction(a[i], 2);
  }
  CHECK(c[0].data == a[4].data);
  CHECK(a[0].data != a[1].data);
  CHECK(hf / 10 >= 0.01);
  CHECK(encode_ppm(a[3]) == encode_ppm(b[3]));
}

TEST_CASE("high_frequency_fraction on simple images") {
  CHECK(high_frequency_fraction(Image(8, 8, 1, 0.5f), 2) == 0.0);
  Image checker(8, 8, 1);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) checker.at(0, y, x) = (x + y) % 2 ? 1.0f : -1.0f;
  CHECK(high_frequency_fraction(checker, 1) == doctest::Approx(1.0));
}

TEST_CASE("report JSON round trips, including the infinite sentinel") {
  EvalReport r;
  r.images = {{"a.ppm", std::numeric_limits<double>::infinity(), 1.0}, {"b.ppm", 23.5, 0.75}};
  r.missing = {"c.ppm"};
  finalize(r);
  CHECK(std::isinf(r.mean_psnr));
  const json j = to_json(r);
  CHECK(j["images"][0]["psnr"] == "inf");
  const json j2 = to_json(report_from_json(json::parse(j.dump())));
  CHECK(j2 == j);
  CHECK(format_table(r).find("b.ppm") != std::string::npos);
  CHECK(psnr_from_json(psnr_json(12.5)) == 12.5);
  CHECK_THROWS_AS(psnr_from_json("nan"), ParameterError);
}

TEST_CASE("evaluate_dirs scores matches and lists missing files") {
  const auto ref = scratch("eval_ref"), res = scratch("eval_res");
  const auto faces = toy_faces(3, 16, 3, 1);
  for (std::size_t i = 0; i < 3; ++i) write_ppm(ref / ("f" + std::to_string(i) + ".ppm"), faces[i]);
  write_ppm(res / "f0.ppm", faces[0]);
  write_ppm(res / "f1.ppm", faces[2]);
  write_ppm(res / "extra.ppm", faces[2]);
  const auto r = evaluate_dirs(res, ref);
  REQUIRE(r.images.size() == 2);
  CHECK(r.images[0].name == "f0.ppm");
  CHECK(std::isinf(r.images[0].psnr));
  CHECK(r.images[0].ssim == 1.0);
  CHECK(std::isfinite(r.images[1].psnr));
  CHECK(r.missing == std::vector<std::string>{"extra.ppm", "f2.ppm"});
}

TEST_CASE("normalize_ll maps [0, 2^J] onto [-1, 1] and back") {
  Image ll(1, 3, 1);
  ll.data = {0.0f, 2.0f, 4.0f};
  const Image n = normalize_ll(ll, 2);
  CHECK(n.data == std::vector<float>{-1.0f, 0.0f, 1.0f});
  CHECK(denormalize_ll(n, 2).data == ll.data);
  CHECK(normalize_ll(ll, 1).data == std::vector<float>{-1.0f, 1.0f, 3.0f});
}

TEST_CASE("training sets: K variants per image, deterministic, paired bands") {
  const RunConfig c = tiny_run();
  const auto hq = toy_faces(3, 16, 3, 2);
  const auto s1 = make_training_set(hq, c), s2 = make_training_set(hq, c);
  REQUIRE(s1.lq.size() == 6);
  CHECK(s1.hq[3].data == hq[1].data);
  CHECK(s1.lq[2].data != s1.lq[3].data);
  for (std::size_t i = 0; i < 6; ++i) CHECK(s1.lq[i].data == s2.lq[i].data);
  const auto lp = lcd_pairs(s1, 2);
  CHECK(lp[0].target.height == 4);
  const auto test = degrade_test_set(hq, c);
  CHECK(test.size() == 3);
  CHECK(test[0].data != s1.lq[0].data);
}

TEST_CASE("restoration: shape, determinism, split independence, variants") {
  const RunConfig c = tiny_run();
  RngStream r1(1, 0), r2(2, 0);
  diffusion::Denoiser<float> lcd(c.lcd, r1);
  hfr::HfrNet<float> hfr(c.hfr, r2);
  for (auto& [n, t] : lcd.params())
    for (float& v : t.data()) v += 0.05f * static_cast<float>(r1.normal());
  for (auto& [n, t] : hfr.params())
    for (float& v : t.data()) v += 0.05f * static_cast<float>(r2.normal());
  const auto lq = degrade_test_set(toy_faces(4, 16, 3, 3), c);
  const Restorer restorer{lcd, hfr, c};
  const auto a = restorer.restore(lq, 5);
  const auto b = restorer.restore(lq, 5);
  const auto tail = restorer.restore(std::span(lq).subspan(2), 5, 2);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i].same_shape(lq[i]));
    CHECK(a[i].data == b[i].data);
    for (float v : a[i].data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  CHECK(tail[0].data == a[2].data);
  CHECK(restorer.restore(lq, 6)[0].data != a[0].data);

  const auto v = restorer.restore_variants(lq, 5);
  CHECK(v[0][1].data == a[1].data);
  CHECK(v[1][1].data != v[0][1].data);
  CHECK(v[3][1].data != v[2][1].data);
  CHECK(std::string(variant_name(Variant::kNoHfr)) == "LCD");

  RunConfig three = c;
  three.levels = 3;
  CHECK_THROWS_AS(Restorer({lcd, hfr, three}).restore(lq, 5), ContractError);
}

TEST_CASE("checkpoint metadata mismatches name the field") {
  const RunConfig c = tiny_run();
  RngStream rng(3, 0);
  diffusion::Denoiser<float> lcd(c.lcd, rng);
  hfr::HfrNet<float> hfr(c.hfr, rng);
  const Checkpoint lc = make_checkpoint(lcd.params(), lcd_metadata(c, 0));
  const Checkpoint hc = make_checkpoint(hfr.params(), hfr_metadata(c, 0));
  CHECK_NOTHROW(denoiser_from_checkpoint(lc, c));
  CHECK_NOTHROW(hfr_from_checkpoint(hc, c));

  auto expect_field = [](auto fn, const std::string& field) {
    try {
      fn();
      FAIL("expected ContractError");
    } catch (const ContractError& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  RunConfig other = c;
  other.schedule_steps = 40;
  other.sample_steps = 5;
  expect_field([&] { denoiser_from_checkpoint(lc, other); }, "steps");
  other = c;
  other.lcd.base_channels = 8;
  expect_field([&] { denoiser_from_checkpoint(lc, other); }, "base_channels");
  expect_field([&] { denoiser_from_checkpoint(hc, c); }, "kind");
  other = c;
  other.hfr.base_channels = 8;
  expect_field([&] { hfr_from_checkpoint(hc, other); }, "base_channels");
}

TEST_CASE("denoiser step cost falls with decomposition depth") {
  RunConfig c = tiny_run();
  c.image_size = 32;
  const std::vector<std::size_t> levels{0, 1, 2};
  const auto costs = denoiser_step_costs(c, levels, 3);
  REQUIRE(costs.size() == 3);
  CHECK(costs[0].band_size == 32);
  CHECK(costs[2].band_size == 8);
  CHECK(costs[0].macs == 4 * costs[1].macs);
  CHECK(costs[1].macs == 4 * costs[2].macs);
}
