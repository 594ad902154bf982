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

#include <cmath>
#include <numeric>
#include <tuple>

#include "test_util.hpp"
#include "wavefr/diffusion.hpp"
#include "wavefr/error.hpp"

using namespace wfr;
using namespace wfr::diffusion;
using TensorD = nn::Tensor<double>;

namespace {

TensorD filled(const nn::Shape& s, RngStream& rng, bool gaussian = true) {
  TensorD t(s);
  for (double& v : t.data()) v = gaussian ? rng.normal() : rng.uniform(-1.0, 1.0);
  return t;
}

std::vector<RngStream> streams(std::size_t n, std::uint64_t seed) {
  std::vector<RngStream> r;
  for (std::size_t i = 0; i < n; ++i) r.emplace_back(seed, stream_id("test-sample", i));
  return r;
}

struct Moments {
  double mean = 0.0, var = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

// Predicts a fixed tensor regardless of input.
EpsModel<double> constant_model(TensorD out) {
  return [out](const TensorD&, const TensorD&, std::span<const int>) { return out; };
}

DenoiserConfig tiny_config(std::size_t channels = 3) {
  DenoiserConfig c;
  c.image_channels = channels;
  c.base_channels = 8;
  c.channel_mults = {1, 2};
  c.embed_dim = 16;
  c.groups = 4;
  return c;
}

}  // namespace

TEST_CASE("schedule identities") {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  REQUIRE(s.beta.size() == 1001);
  CHECK(s.alpha_bar[0] == 1.0);
  CHECK(s.beta[1] == 1e-4);
  CHECK(s.beta[1000] == doctest::Approx(0.02).epsilon(1e-12));
  for (int t = 1; t <= 1000; ++t) {
    CHECK(s.beta[t] > 0.0);
    CHECK(s.beta[t] < 1.0);
    if (t > 1) CHECK(s.beta[t] > s.beta[t - 1]);
    CHECK(s.alpha[t] == 1.0 - s.beta[t]);
    CHECK(s.alpha_bar[t] == s.alpha_bar[t - 1] * s.alpha[t]);
    CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
    const double var = s.beta[t] * (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]);
    CHECK(s.sigma[t] * s.sigma[t] == doctest::Approx(var).epsilon(1e-12));
  }
  CHECK(s.sigma[1] == 0.0);
}

TEST_CASE("DDPM default schedule ends near 4e-5") {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  // Independent product over the same linear table.
  double prod = 1.0;
  for (int t = 1; t <= 1000; ++t) prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0);
  CHECK(s.alpha_bar[1000] == doctest::Approx(prod).epsilon(1e-10));
  CHECK(std::abs(s.alpha_bar[1000] - 4.0e-5) <= 0.1 * 4.0e-5);
}

TEST_CASE("single-step schedule") {
  const auto s = make_schedule(1, 0.3, 0.3);
  CHECK(s.alpha_bar[1] == 1.0 - 0.3);
  CHECK(s.beta[1] == 0.3);
}

TEST_CASE("make_schedule rejects invalid ranges") {
  CHECK_THROWS_AS(make_schedule(0, 1e-4, 0.02), ParameterError);
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.02), ParameterError);
  CHECK_THROWS_AS(make_schedule(10, 0.03, 0.02), ParameterError);
  CHECK_THROWS_AS(make_schedule(10, 1e-4, 1.0), ParameterError);
}

TEST_CASE("ddim timesteps are a uniform decreasing stride ending at T") {
  CHECK(ddim_timesteps(1000, 4) == std::vector<int>{1000, 750, 500, 250});
  CHECK(ddim_timesteps(10, 3) == std::vector<int>{10, 6, 3});
  CHECK(ddim_timesteps(5, 5) == std::vector<int>{5, 4, 3, 2, 1});
  CHECK_THROWS_AS(ddim_timesteps(10, 11), ParameterError);
  CHECK_THROWS_AS(ddim_timesteps(10, 0), ParameterError);
}

TEST_CASE("q_sample closed forms") {
  const auto s = make_schedule(100, 1e-3, 0.05);
  RngStream rng(1, 0);
  const TensorD y0 = filled({2, 1, 3, 3}, rng);
  const TensorD zero({2, 1, 3, 3});
  const std::vector<int> t{7, 60};
  const auto y = q_sample(y0, t, zero, s);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < 9; ++i)
      CHECK(y.data()[n * 9 + i] == std::sqrt(s.alpha_bar[t[n]]) * y0.data()[n * 9 + i]);

  const std::vector<int> bad{0, 5};
  CHECK_THROWS_AS(q_sample(y0, bad, zero, s), ParameterError);
  const std::vector<int> past{101, 5};
  CHECK_THROWS_AS(q_sample(y0, past, zero, s), ParameterError);
  const std::vector<int> one{3};
  CHECK_THROWS_AS(q_sample(y0, one, zero, s), ShapeError);
  CHECK_THROWS_AS(q_sample(y0, t, TensorD({2, 1, 3, 2}), s), ShapeError);
}

TEST_CASE("q_sample Monte Carlo moments at t = T") {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  const std::size_t n = 100000;
  RngStream rng(2, 0);
  const TensorD y0({n, 1, 1, 1}, 1.0);
  const TensorD eps = filled({n, 1, 1, 1}, rng);
  const std::vector<int> t(n, 1000);
  const auto y = q_sample(y0, t, eps, s);
  const auto m = moments(y.data());
  const double ab = s.alpha_bar[1000];
  CHECK(std::abs(m.mean - std::sqrt(ab)) <= 0.02);
  CHECK(std::abs(m.var - (1.0 - ab)) <= 0.02 * (1.0 - ab));
}

TEST_CASE("ancestral step at t = 1 inverts q_sample with the true noise") {
  const auto s = make_schedule(200, 5e-4, 0.1);
  RngStream rng(3, 0);
  const TensorD y0 = filled({2, 3, 4, 4}, rng), eps = filled({2, 3, 4, 4}, rng);
  const std::vector<int> t{1, 1};
  const auto y1 = q_sample(y0, t, eps, s);
  const TensorD z = filled({2, 3, 4, 4}, rng);  // ignored at t = 1
  const auto back = ancestral_step(y1, 1, eps, z, s);
  CHECK(wfr::testing::max_abs(back.values(), y0.values()) < 1e-6);
}

TEST_CASE("ancestral step with zero noise estimate is a rescale") {
  const auto s = make_schedule(50, 1e-3, 0.05);
  RngStream rng(4, 0);
  const TensorD y = filled({1, 1, 3, 3}, rng);
  const TensorD zero({1, 1, 3, 3});
  const auto out = ancestral_step(y, 30, zero, zero, s);
  for (std::size_t i = 0; i < 9; ++i)
    CHECK(out.data()[i] == doctest::Approx(y.data()[i] / std::sqrt(s.alpha[30])).epsilon(1e-14));
  CHECK_THROWS_AS(ancestral_step(y, 0, zero, zero, s), ParameterError);
  CHECK_THROWS_AS(ancestral_step(y, 51, zero, zero, s), ParameterError);
}

TEST_CASE("ancestral step draws are reproducible per stream") {
  const auto s = make_schedule(50, 1e-3, 0.05);
  RngStream rng(5, 0);
  const TensorD y = filled({3, 1, 2, 2}, rng), eps = filled({3, 1, 2, 2}, rng);
  auto r1 = streams(3, 9), r2 = streams(3, 9);
  const auto a = ancestral_step(y, 20, eps, s, r1);
  const auto b = ancestral_step(y, 20, eps, s, r2);
  CHECK(a.values() == b.values());
  auto r3 = streams(2, 9);
  CHECK_THROWS_AS(ancestral_step(y, 20, eps, s, r3), ShapeError);
}

TEST_CASE("DDIM step to t_prev = 0 with the true noise recovers y0") {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  RngStream rng(6, 0);
  const TensorD y0 = filled({2, 3, 4, 4}, rng), eps = filled({2, 3, 4, 4}, rng);
  for (int t : {1, 250, 900}) {
    const std::vector<int> tv{t, t};
    const auto yt = q_sample(y0, tv, eps, s);
    const auto back = ddim_step(yt, t, 0, eps, s);
    CHECK(wfr::testing::max_abs(back.values(), y0.values()) < 1e-6);
  }
}

TEST_CASE("DDIM step with zero noise estimate is a rescale") {
  const auto s = make_schedule(100, 1e-3, 0.05);
  RngStream rng(7, 0);
  const TensorD y = filled({1, 1, 3, 3}, rng), zero({1, 1, 3, 3});
  const auto out = ddim_step(y, 40, 39, zero, s);
  const double k = std::sqrt(s.alpha_bar[39] / s.alpha_bar[40]);
  for (std::size_t i = 0; i < 9; ++i) CHECK(out.data()[i] == doctest::Approx(k * y.data()[i]).epsilon(1e-14));
  CHECK_THROWS_AS(ddim_step(y, 40, 40, zero, s), ParameterError);
  CHECK_THROWS_AS(ddim_step(y, 40, 41, zero, s), ParameterError);
  CHECK_THROWS_AS(ddim_step(y, 40, -1, zero, s), ParameterError);
}

TEST_CASE("Gaussian oracle: degenerate prior and argument checks") {
  CHECK(gaussian_posterior_mean(0.7, 0.4, 0.3, 1e-14) == doctest::Approx(0.3).epsilon(1e-9));
  // Unit-variance standard prior: m = sqrt(abar) y_t.
  CHECK(gaussian_posterior_mean(0.7, 0.4, 0.0, 1.0) == doctest::Approx(std::sqrt(0.4) * 0.7));
  const auto s = make_schedule(10, 1e-3, 0.05);
  CHECK_THROWS_AS(gaussian_oracle_denoiser<double>({0.3}, 0.0, s), ParameterError);
  CHECK_THROWS_AS(gaussian_oracle_denoiser<double>({0.3}, -1.0, s), ParameterError);
  const auto oracle = gaussian_oracle_denoiser<double>({0.3}, 0.04, s);
  const std::vector<int> t0{0};
  CHECK_THROWS_AS(oracle(TensorD({1, 1, 1, 1}), TensorD({1, 1, 1, 1}), t0), ParameterError);
}

TEST_CASE("Gaussian oracle predicts the noise of Gaussian data on average") {
  // For y0 ~ N(mu, s2) the oracle output is E[eps | y_t]; its residual
  // against the true eps must be uncorrelated with y_t.
  const auto s = make_schedule(100, 1e-3, 0.05);
  const std::size_t n = 20000;
  RngStream rng(8, 0);
  TensorD y0({n, 1, 1, 1}), eps = filled({n, 1, 1, 1}, rng);
  for (double& v : y0.data()) v = 0.3 + 0.2 * rng.normal();
  const std::vector<int> t(n, 50);
  const auto yt = q_sample(y0, t, eps, s);
  const auto pred = gaussian_oracle_denoiser<double>({0.3}, 0.04, s)(yt, yt, t);
  double cov = 0.0, ym = 0.0, rm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ym += yt.data()[i];
    rm += eps.data()[i] - pred.data()[i];
  }
  ym /= n;
  rm /= n;
  for (std::size_t i = 0; i < n; ++i) cov += (yt.data()[i] - ym) * (eps.data()[i] - pred.data()[i] - rm);
  CHECK(std::abs(rm) < 0.02);
  CHECK(std::abs(cov / n) < 0.02);
}

TEST_CASE("sampling with the Gaussian oracle reaches N(0.3, 0.2^2)") {
  const std::size_t n = 2000;
  const TensorD cond({n, 1, 1, 1});
  const auto s = make_schedule(1000, 1e-4, 0.02);
  const auto oracle = gaussian_oracle_denoiser<double>({0.3}, 0.04, s);
  auto r1 = streams(n, 12), r2 = streams(n, 13);
  const auto a = sample(oracle, cond, s, Sampler::kAncestral, 1000, r1);
  const auto d = sample(oracle, cond, s, Sampler::kDdim, 250, r2);
  const auto ma = moments(a.data()), md = moments(d.data());
  CHECK(std::abs(ma.mean - 0.3) <= 0.02);
  CHECK(std::abs(md.mean - 0.3) <= 0.02);
  CHECK(std::abs(ma.mean - md.mean) < 0.02);
  CHECK(std::abs(std::sqrt(ma.var) - 0.2) <= 0.05 * 0.2);
  CHECK(std::abs(std::sqrt(md.var) - 0.2) <= 0.05 * 0.2);
}

TEST_CASE("sampled moments match the exact Gaussian recursion") {
  // With a Gaussian prior every step is affine in y plus independent noise,
  // so the output distribution is N(m, v) with (m, v) propagated in closed
  // form. This pins the sampler itself, including its discretisation bias.
  const std::size_t n = 4000;
  const TensorD cond({n, 1, 1, 1});
  for (const auto& [T, b0, b1, method, steps] :
       std::vector<std::tuple<int, double, double, Sampler, int>>{
           {200, 5e-4, 0.1, Sampler::kAncestral, 200},
           {200, 5e-4, 0.1, Sampler::kDdim, 50},
           {200, 1e-4, 0.02, Sampler::kDdim, 20}}) {
    const auto s = make_schedule(T, b0, b1);
    const double mu = 0.3, s2 = 0.04;
    double m = 0.0, v = 1.0;
    auto eps_coeffs = [&](int t) {
      const double ab = s.alpha_bar[t], D = ab * s2 + 1.0 - ab;
      const double k = std::sqrt(ab) * s2 / D, c = (1.0 - ab) * mu / D;
      return std::pair{(1.0 - std::sqrt(ab) * k) / std::sqrt(1.0 - ab),
                       -std::sqrt(ab) * c / std::sqrt(1.0 - ab)};
    };
    if (method == Sampler::kAncestral) {
      for (int t = T; t >= 1; --t) {
        const auto [e1, e0] = eps_coeffs(t);
        const double r = s.beta[t] / std::sqrt(1.0 - s.alpha_bar[t]);
        const double g1 = (1.0 - r * e1) / std::sqrt(s.alpha[t]), g0 = -r * e0 / std::sqrt(s.alpha[t]);
        const double var = t > 1 ? s.beta[t] * (1 - s.alpha_bar[t - 1]) / (1 - s.alpha_bar[t]) : 0.0;
        m = g1 * m + g0;
        v = g1 * g1 * v + var;
      }
    } else {
      for (int k = steps; k >= 1; --k) {
        const int t = k * T / steps, tp = (k - 1) * T / steps;
        const auto [e1, e0] = eps_coeffs(t);
        const double ab = s.alpha_bar[t], abp = s.alpha_bar[tp];
        const double x1 = (1.0 - std::sqrt(1.0 - ab) * e1) / std::sqrt(ab);
        const double x0 = -std::sqrt(1.0 - ab) * e0 / std::sqrt(ab);
        const double g1 = std::sqrt(abp) * x1 + std::sqrt(1.0 - abp) * e1;
        const double g0 = std::sqrt(abp) * x0 + std::sqrt(1.0 - abp) * e0;
        m = g1 * m + g0;
        v = g1 * g1 * v;
      }
    }
    auto rngs = streams(n, 30 + static_cast<std::uint64_t>(steps));
    const auto y = sample(gaussian_oracle_denoiser<double>({mu}, s2, s), cond, s, method, steps, rngs);
    const auto got = moments(y.data());
    INFO("T=" << T << " steps=" << steps << " predicted " << m << "/" << std::sqrt(v)
              << " sampled " << got.mean << "/" << std::sqrt(got.var));
    const double se_mean = std::sqrt(v / n), se_var = v * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(got.mean - m) <= 4 * se_mean);
    CHECK(std::abs(got.var - v) <= 4 * se_var);
  }
}

TEST_CASE("sampling with a per-element oracle mean tracks each element") {
  const auto s = make_schedule(200, 5e-4, 0.1);
  const std::size_t n = 1000;
  const TensorD cond({n, 1, 1, 2});
  auto rngs = streams(n, 14);
  const auto y = sample(gaussian_oracle_denoiser<double>({-0.5, 0.8}, 0.01, s), cond, s,
                        Sampler::kDdim, 40, rngs);
  double m0 = 0, m1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m0 += y.data()[2 * i];
    m1 += y.data()[2 * i + 1];
  }
  CHECK(m0 / n == doctest::Approx(-0.5).epsilon(0.02));
  CHECK(m1 / n == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("sample: shape, determinism, step limits") {
  const auto s = make_schedule(20, 1e-3, 0.1);
  RngStream rng(15, 0);
  const TensorD cond = filled({2, 3, 4, 4}, rng);
  const auto oracle = gaussian_oracle_denoiser<double>({0.0}, 0.5, s);
  auto r1 = streams(2, 16), r2 = streams(2, 16);
  const auto a = sample(oracle, cond, s, Sampler::kAncestral, 20, r1);
  const auto b = sample(oracle, cond, s, Sampler::kAncestral, 20, r2);
  CHECK(a.shape() == cond.shape());
  CHECK(a.values() == b.values());
  auto r3 = streams(2, 16);
  CHECK_THROWS_AS(sample(oracle, cond, s, Sampler::kDdim, 21, r3), ParameterError);
  CHECK_THROWS_AS(sample(oracle, cond, s, Sampler::kAncestral, 10, r3), ParameterError);
  auto r4 = streams(1, 16);
  CHECK_THROWS_AS(sample(oracle, cond, s, Sampler::kDdim, 5, r4), ShapeError);
}

TEST_CASE("sampling draws item n only from stream n") {
  // Batch composition must not change an item's result.
  const auto s = make_schedule(20, 1e-3, 0.1);
  const auto oracle = gaussian_oracle_denoiser<double>({0.1}, 0.2, s);
  std::vector<RngStream> both{RngStream(17, 1), RngStream(17, 2)};
  std::vector<RngStream> second{RngStream(17, 2)};
  const auto a = sample(oracle, TensorD({2, 1, 2, 2}), s, Sampler::kAncestral, 20, both);
  const auto b = sample(oracle, TensorD({1, 1, 2, 2}), s, Sampler::kAncestral, 20, second);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.data()[4 + i] == b.data()[i]);
}

TEST_CASE("lcd_loss of a perfect noise predictor is zero") {
  const auto s = make_schedule(50, 1e-3, 0.05);
  RngStream rng(18, 0);
  const TensorD y0 = filled({2, 3, 4, 4}, rng), c = filled({2, 3, 4, 4}, rng),
                eps = filled({2, 3, 4, 4}, rng);
  const std::vector<int> t{3, 40};
  CHECK(lcd_loss(constant_model(eps), y0, c, t, eps, s).item() == 0.0);
  CHECK_THROWS_AS(lcd_loss(constant_model(eps), y0, TensorD({2, 3, 4, 2}), t, eps, s), ShapeError);
}

TEST_CASE("lcd_loss of a freshly initialised denoiser is about one") {
  const auto s = make_schedule(200, 5e-4, 0.1);
  RngStream rng(19, 0);
  Denoiser<double> net(tiny_config(), rng);
  const nn::Shape shape{8, 3, 16, 16};  // 6144 elements
  const TensorD y0 = filled(shape, rng, false), c = filled(shape, rng, false), eps = filled(shape, rng);
  std::vector<int> t(8);
  for (int& v : t) v = static_cast<int>(rng.uniform_int(1, 200));
  const auto eps_hat = net(q_sample(y0, t, eps, s), c, t);
  for (double v : eps_hat.data()) CHECK(v == 0.0);
  CHECK(lcd_loss(net.model(), y0, c, t, eps, s).item() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("denoiser shape contract") {
  RngStream rng(20, 0);
  Denoiser<double> net(tiny_config(), rng);
  CHECK(net.config().in_channels() == 6);
  CHECK(net.params().get("conv_in.w").dim(1) == 6);
  const std::vector<int> t{5, 6};
  const TensorD x({2, 3, 8, 8});
  CHECK(net(x, x, t).shape() == x.shape());
  CHECK_THROWS_AS(net(TensorD({2, 2, 8, 8}), TensorD({2, 2, 8, 8}), t), ShapeError);
  CHECK_THROWS_AS(net(x, TensorD({2, 3, 8, 4}), t), ShapeError);
  const std::vector<int> t1{5};
  CHECK_THROWS_AS(net(x, x, t1), ShapeError);
}

TEST_CASE("denoiser adopts matching parameters and rejects others") {
  RngStream rng(21, 0);
  Denoiser<double> net(tiny_config(), rng);
  Denoiser<double> copy(tiny_config(), net.params());
  RngStream r2(22, 0);
  const TensorD y = filled({1, 3, 8, 8}, r2), c = filled({1, 3, 8, 8}, r2);
  const std::vector<int> t{9};
  CHECK(copy(y, c, t).values() == net(y, c, t).values());

  auto wider = tiny_config();
  wider.base_channels = 16;
  CHECK_THROWS_AS(Denoiser<double>(wider, net.params()), ContractError);
  nn::ParameterStore<double> missing;
  CHECK_THROWS_AS(Denoiser<double>(tiny_config(), missing), ContractError);
}

TEST_CASE("denoiser timestep conditioning changes the prediction") {
  RngStream rng(23, 0);
  Denoiser<double> net(tiny_config(1), rng);
  // Break the zero output head so the prediction depends on the trunk.
  for (double& v : net.params().get("out.w").data()) v = rng.uniform(-0.3, 0.3);
  RngStream r2(24, 0);
  const TensorD y = filled({1, 1, 8, 8}, r2), c = filled({1, 1, 8, 8}, r2);
  const std::vector<int> a{3}, b{150};
  CHECK(wfr::testing::max_abs(net(y, c, a).values(), net(y, c, b).values()) > 1e-4);
}

TEST_CASE("train_lcd rejects empty data") {
  RngStream rng(25, 0);
  Denoiser<float> net(tiny_config(), rng);
  CHECK_THROWS_AS(train_lcd(net, {}, make_schedule(10, 1e-3, 0.05), {}, 0), ContractError);
}
