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

#include "wavefr/diffusion.hpp"

#include <cmath>

#include "wavefr/error.hpp"

namespace wfr::diffusion {

using nn::Tensor;

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) {
    throw ParameterError("make_schedule: T must be >= 1, got " +
                         std::to_string(steps));
  }
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ParameterError("make_schedule: need 0 < beta_start <= beta_end < 1, got " +
                         std::to_string(beta_start) + ", " +
                         std::to_string(beta_end));
  }
  NoiseSchedule s;
  s.steps = steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  const auto n = static_cast<std::size_t>(steps) + 1;
  s.beta.assign(n, 0.0);
  s.alpha.assign(n, 1.0);
  s.alpha_bar.assign(n, 1.0);
  s.sigma.assign(n, 0.0);
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    s.beta[t] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    s.sigma[t] = std::sqrt(s.beta[t] * (1.0 - s.alpha_bar[t - 1]) /
                           (1.0 - s.alpha_bar[t]));
  }
  return s;
}

std::vector<int> ddim_timesteps(int T, int steps) {
  if (steps < 1 || steps > T) {
    throw ParameterError("ddim: step count " + std::to_string(steps) +
                         " must be in [1, " + std::to_string(T) + "]");
  }
  std::vector<int> ts;
  ts.reserve(steps);
  for (int k = steps; k >= 1; --k) {
    ts.push_back(static_cast<int>((static_cast<long long>(k) * T) / steps));
  }
  return ts;
}

namespace {

void check_t(int t, const NoiseSchedule& s, const char* op) {
  if (t < 1 || t > s.steps) {
    throw ParameterError(std::string(op) + ": timestep " + std::to_string(t) +
                         " outside [1, " + std::to_string(s.steps) + "]");
  }
}

template <class T>
void check_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + nn::shape_string(a.shape()) +
                     " vs " + nn::shape_string(b.shape()));
  }
}

template <class T>
std::size_t item_size(const Tensor<T>& x) {
  return x.numel() / x.dim(0);
}

}  // namespace

template <class T>
Tensor<T> q_sample(const Tensor<T>& y0, std::span<const int> t,
                   const Tensor<T>& eps, const NoiseSchedule& schedule) {
  check_same(y0, eps, "q_sample");
  const std::size_t N = y0.dim(0), m = item_size(y0);
  if (t.size() != N) {
    throw ShapeError("q_sample: " + std::to_string(t.size()) +
                     " timesteps for batch of " + std::to_string(N));
  }
  std::vector<T> out(y0.numel());
  for (std::size_t n = 0; n < N; ++n) {
    check_t(t[n], schedule, "q_sample");
    const double ab = schedule.alpha_bar[t[n]];
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    for (std::size_t i = n * m; i < (n + 1) * m; ++i) {
      out[i] = static_cast<T>(a * y0.data()[i] + b * eps.data()[i]);
    }
  }
  return Tensor<T>(y0.shape(), std::move(out));
}

template <class T>
Tensor<T> ancestral_step(const Tensor<T>& y_t, int t, const Tensor<T>& eps_hat,
                         const Tensor<T>& z, const NoiseSchedule& schedule) {
  check_t(t, schedule, "ancestral_step");
  check_same(y_t, eps_hat, "ancestral_step");
  const bool noisy = t > 1;
  if (noisy) check_same(y_t, z, "ancestral_step");
  const double c1 = 1.0 / std::sqrt(schedule.alpha[t]);
  const double c2 = schedule.beta[t] / std::sqrt(1.0 - schedule.alpha_bar[t]);
  const double sig = schedule.sigma[t];
  std::vector<T> out(y_t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = c1 * (y_t.data()[i] - c2 * eps_hat.data()[i]);
    if (noisy) v += sig * z.data()[i];
    out[i] = static_cast<T>(v);
  }
  return Tensor<T>(y_t.shape(), std::move(out));
}

template <class T>
Tensor<T> ancestral_step(const Tensor<T>& y_t, int t, const Tensor<T>& eps_hat,
                         const NoiseSchedule& schedule,
                         std::span<RngStream> rngs) {
  const std::size_t N = y_t.dim(0), m = item_size(y_t);
  if (rngs.size() != N) {
    throw ShapeError("ancestral_step: " + std::to_string(rngs.size()) +
                     " random streams for batch of " + std::to_string(N));
  }
  Tensor<T> z(y_t.shape());
  if (t > 1) {
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = n * m; i < (n + 1) * m; ++i)
        z.data()[i] = static_cast<T>(rngs[n].normal());
  }
  return ancestral_step(y_t, t, eps_hat, z, schedule);
}

template <class T>
Tensor<T> ddim_step(const Tensor<T>& y_t, int t, int t_prev,
                    const Tensor<T>& eps_hat, const NoiseSchedule& schedule) {
  check_t(t, schedule, "ddim_step");
  if (t_prev < 0 || t_prev >= t) {
    throw ParameterError("ddim_step: need 0 <= t_prev < t, got t=" +
                         std::to_string(t) + ", t_prev=" + std::to_string(t_prev));
  }
  check_same(y_t, eps_hat, "ddim_step");
  const double ab = schedule.alpha_bar[t], ap = schedule.alpha_bar[t_prev];
  const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
  const double pa = std::sqrt(ap), pb = std::sqrt(1.0 - ap);
  std::vector<T> out(y_t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double e = eps_hat.data()[i];
    const double x0 = (y_t.data()[i] - sb * e) / sa;
    out[i] = static_cast<T>(pa * x0 + pb * e);
  }
  return Tensor<T>(y_t.shape(), std::move(out));
}

double gaussian_posterior_mean(double y_t, double abar, double mu, double s2) {
  return (std::sqrt(abar) * s2 * y_t + (1.0 - abar) * mu) /
         (abar * s2 + 1.0 - abar);
}

template <class T>
EpsModel<T> gaussian_oracle_denoiser(std::vector<double> mu, double s2,
                                     const NoiseSchedule& schedule) {
  if (!(s2 > 0.0)) {
    throw ParameterError("gaussian_oracle_denoiser: variance must be > 0");
  }
  if (mu.empty()) throw ParameterError("gaussian_oracle_denoiser: empty mean");
  return [mu = std::move(mu), s2, schedule](const Tensor<T>& y_t, const Tensor<T>&,
                                            std::span<const int> t) {
    const std::size_t N = y_t.dim(0), m = y_t.numel() / N;
    if (mu.size() != 1 && mu.size() != m) {
      throw ShapeError("gaussian_oracle_denoiser: mean has " +
                       std::to_string(mu.size()) + " elements, items have " +
                       std::to_string(m));
    }
    std::vector<T> out(y_t.numel());
    for (std::size_t n = 0; n < N; ++n) {
      check_t(t[n], schedule, "gaussian_oracle_denoiser");
      const double ab = schedule.alpha_bar[t[n]];
      for (std::size_t i = 0; i < m; ++i) {
        const double y = y_t.data()[n * m + i];
        const double mean0 = gaussian_posterior_mean(y, ab, mu[mu.size() == 1 ? 0 : i], s2);
        out[n * m + i] = static_cast<T>((y - std::sqrt(ab) * mean0) / std::sqrt(1.0 - ab));
      }
    }
    return Tensor<T>(y_t.shape(), std::move(out));
  };
}

template <class T>
Tensor<T> sample(const EpsModel<T>& model, const Tensor<T>& cond,
                 const NoiseSchedule& schedule, Sampler method, int steps,
                 std::span<RngStream> rngs) {
  if (steps < 1 || steps > schedule.steps) {
    throw ParameterError("sample: step count " + std::to_string(steps) +
                         " must be in [1, T=" + std::to_string(schedule.steps) + "]");
  }
  if (method == Sampler::kAncestral && steps != schedule.steps) {
    throw ParameterError("sample: ancestral sampling visits all T=" +
                         std::to_string(schedule.steps) + " steps, got " +
                         std::to_string(steps));
  }
  const std::size_t N = cond.dim(0), m = item_size(cond);
  if (rngs.size() != N) {
    throw ShapeError("sample: " + std::to_string(rngs.size()) +
                     " random streams for batch of " + std::to_string(N));
  }
  Tensor<T> y(cond.shape());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t i = n * m; i < (n + 1) * m; ++i)
      y.data()[i] = static_cast<T>(rngs[n].normal());

  std::vector<int> tv(N);
  if (method == Sampler::kAncestral) {
    for (int t = schedule.steps; t >= 1; --t) {
      std::fill(tv.begin(), tv.end(), t);
      const Tensor<T> eps = model(y, cond, tv);
      y = ancestral_step(y, t, eps, schedule, rngs);
    }
    return y;
  }
  const std::vector<int> ts = ddim_timesteps(schedule.steps, steps);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const int t = ts[k];
    const int t_prev = k + 1 < ts.size() ? ts[k + 1] : 0;
    std::fill(tv.begin(), tv.end(), t);
    const Tensor<T> eps = model(y, cond, tv);
    y = ddim_step(y, t, t_prev, eps, schedule);
  }
  return y;
}

// --- denoiser network ----------------------------------------------------------

template <class T>
Denoiser<T>::Denoiser(DenoiserConfig config, RngStream& rng)
    : config_(std::move(config)) {
  build(rng);
}

template <class T>
Denoiser<T>::Denoiser(DenoiserConfig config, nn::ParameterStore<T> params)
    : config_(std::move(config)) {
  RngStream dummy(0, 0);
  build(dummy);
  if (params.size() != params_.size()) {
    throw ContractError("denoiser: checkpoint has " + std::to_string(params.size()) +
                        " tensors, architecture expects " +
                        std::to_string(params_.size()));
  }
  for (const auto& [name, t] : params_) {
    if (!params.contains(name)) {
      throw ContractError("denoiser: checkpoint lacks tensor '" + name + "'");
    }
    if (params.get(name).shape() != t.shape()) {
      throw ContractError("denoiser: tensor '" + name + "' has shape " +
                          nn::shape_string(params.get(name).shape()) +
                          ", architecture expects " + nn::shape_string(t.shape()));
    }
  }
  params_ = std::move(params);
}

template <class T>
void Denoiser<T>::build(RngStream& rng) {
  const auto& c = config_;
  if (c.channel_mults.empty()) throw ParameterError("denoiser: no levels");
  if (c.embed_dim == 0 || c.embed_dim % 2 != 0) {
    throw ParameterError("denoiser: embed_dim must be even");
  }
  const std::size_t E = c.embed_dim;
  nn::add_linear(params_, "time.fc1", E, E, rng);
  nn::add_linear(params_, "time.fc2", E, E, rng);
  nn::add_conv(params_, "conv_in", c.in_channels(), c.base_channels, 3, rng);
  std::size_t ch = c.base_channels;
  std::vector<std::size_t> skip_ch;
  const std::size_t L = c.channel_mults.size();
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t out = c.base_channels * c.channel_mults[l];
    for (std::size_t r = 0; r < c.res_blocks; ++r) {
      nn::add_res_block(params_, "enc" + std::to_string(l) + "." + std::to_string(r),
                        ch, out, E, rng);
      ch = out;
      skip_ch.push_back(ch);
    }
  }
  nn::add_res_block(params_, "mid", ch, ch, E, rng);
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t out = c.base_channels * c.channel_mults[l];
    for (std::size_t r = 0; r < c.res_blocks; ++r) {
      const std::size_t sc = skip_ch.back();
      skip_ch.pop_back();
      nn::add_res_block(params_, "dec" + std::to_string(l) + "." + std::to_string(r),
                        ch + sc, out, E, rng);
      ch = out;
    }
    if (l > 0) nn::add_upsample(params_, "up" + std::to_string(l), ch);
  }
  nn::add_norm(params_, "out_norm", ch);
  nn::add_conv(params_, "out", ch, c.out_channels(), 3, rng, /*zero_init=*/true);
}

template <class T>
Tensor<T> Denoiser<T>::operator()(const Tensor<T>& y_t, const Tensor<T>& cond,
                                  std::span<const int> t) const {
  const auto& c = config_;
  if (y_t.rank() != 4 || y_t.dim(1) != c.image_channels) {
    throw ShapeError("denoiser: noisy input " + nn::shape_string(y_t.shape()) +
                     " must be [N," + std::to_string(c.image_channels) + ",H,W]");
  }
  check_same(y_t, cond, "denoiser condition");
  if (t.size() != y_t.dim(0)) {
    throw ShapeError("denoiser: " + std::to_string(t.size()) +
                     " timesteps for batch of " + std::to_string(y_t.dim(0)));
  }
  const Tensor<T> x = nn::concat_channels<T>({y_t, cond});
  if (x.dim(1) != c.in_channels()) {
    throw ContractError("denoiser: conditioning must double the channel count");
  }
  Tensor<T> temb = nn::time_embedding<T>(t, c.embed_dim);
  temb = nn::dense(params_, "time.fc2", nn::silu(nn::dense(params_, "time.fc1", temb)));

  const std::size_t G = c.groups;
  Tensor<T> h = nn::conv(params_, "conv_in", x);
  std::vector<Tensor<T>> skips;
  const std::size_t L = c.channel_mults.size();
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t r = 0; r < c.res_blocks; ++r) {
      h = nn::res_block(params_, "enc" + std::to_string(l) + "." + std::to_string(r),
                        h, temb, G);
      skips.push_back(h);
    }
    if (l + 1 < L) h = nn::resample2x(h, nn::Resample::kDown);
  }
  h = nn::res_block(params_, "mid", h, temb, G);
  for (std::size_t l = L; l-- > 0;) {
    for (std::size_t r = 0; r < c.res_blocks; ++r) {
      const Tensor<T> s = skips.back();
      skips.pop_back();
      h = nn::res_block(params_, "dec" + std::to_string(l) + "." + std::to_string(r),
                        nn::concat_channels<T>({h, s}), temb, G);
    }
    if (l > 0) {
      h = nn::resample2x(h, nn::Resample::kUp, &params_, "up" + std::to_string(l));
    }
  }
  return nn::conv(params_, "out", nn::silu(nn::norm(params_, "out_norm", h, G)));
}

template <class T>
EpsModel<T> Denoiser<T>::model() const {
  return [this](const Tensor<T>& y, const Tensor<T>& c, std::span<const int> t) {
    return (*this)(y, c, t);
  };
}

template <class T>
Tensor<T> lcd_loss(const EpsModel<T>& model, const Tensor<T>& y0,
                   const Tensor<T>& cond, std::span<const int> t,
                   const Tensor<T>& eps, const NoiseSchedule& schedule) {
  check_same(y0, cond, "lcd_loss");
  check_same(y0, eps, "lcd_loss");
  const Tensor<T> y_t = q_sample(y0, t, eps, schedule);
  return nn::mse_loss(model(y_t, cond, t), eps);
}

std::vector<double> train_lcd(Denoiser<float>& model,
                              const std::vector<LcdPair>& data,
                              const NoiseSchedule& schedule,
                              const LcdTrainConfig& config, std::uint64_t seed,
                              const std::function<void(std::size_t, double)>& on_step) {
  if (data.empty()) throw ContractError("train_lcd: empty dataset");
  if (config.batch_size == 0) throw ParameterError("train_lcd: batch size 0");
  const Image& first = data.front().target;
  for (const auto& p : data) {
    if (!p.target.same_shape(first) || !p.condition.same_shape(first)) {
      throw ShapeError("train_lcd: pair shapes differ (" +
                       p.target.shape_string() + " / " +
                       p.condition.shape_string() + " vs " +
                       first.shape_string() + ")");
    }
  }
  const std::size_t B = config.batch_size, m = first.size();
  const nn::Shape shape{B, first.channels, first.height, first.width};
  nn::Adam<float> adam({.lr = config.lr});
  std::vector<double> losses;
  losses.reserve(config.steps);
  std::vector<int> t(B);
  for (std::size_t step = 0; step < config.steps; ++step) {
    RngStream rng(seed, stream_id("lcd-step", step));
    Tensor<float> y0(shape), cond(shape), eps(shape);
    for (std::size_t b = 0; b < B; ++b) {
      const auto idx = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(data.size()) - 1));
      std::copy(data[idx].target.data.begin(), data[idx].target.data.end(),
                y0.data().begin() + b * m);
      std::copy(data[idx].condition.data.begin(), data[idx].condition.data.end(),
                cond.data().begin() + b * m);
      t[b] = static_cast<int>(rng.uniform_int(1, schedule.steps));
    }
    for (float& e : eps.data()) e = static_cast<float>(rng.normal());

    model.params().zero_grad();
    const Tensor<float> loss = lcd_loss<float>(model.model(), y0, cond, t, eps, schedule);
    nn::backward(loss);
    adam.step(model.params());
    losses.push_back(loss.item());
    if (on_step) on_step(step, loss.item());
  }
  return losses;
}

#define WAVEFR_INSTANTIATE_DIFFUSION(T)                                          \
  template Tensor<T> q_sample<T>(const Tensor<T>&, std::span<const int>,       \
                                 const Tensor<T>&, const NoiseSchedule&);      \
  template Tensor<T> ancestral_step<T>(const Tensor<T>&, int, const Tensor<T>&, \
                                       const Tensor<T>&, const NoiseSchedule&); \
  template Tensor<T> ancestral_step<T>(const Tensor<T>&, int, const Tensor<T>&, \
                                       const NoiseSchedule&,                   \
                                       std::span<RngStream>);                  \
  template Tensor<T> ddim_step<T>(const Tensor<T>&, int, int, const Tensor<T>&, \
                                  const NoiseSchedule&);                       \
  template EpsModel<T> gaussian_oracle_denoiser<T>(std::vector<double>, double, \
                                                   const NoiseSchedule&);      \
  template Tensor<T> sample<T>(const EpsModel<T>&, const Tensor<T>&,           \
                               const NoiseSchedule&, Sampler, int,             \
                               std::span<RngStream>);                          \
  template Tensor<T> lcd_loss<T>(const EpsModel<T>&, const Tensor<T>&,         \
                                 const Tensor<T>&, std::span<const int>,       \
                                 const Tensor<T>&, const NoiseSchedule&);      \
  template class Denoiser<T>;

WAVEFR_INSTANTIATE_DIFFUSION(float)
WAVEFR_INSTANTIATE_DIFFUSION(double)

}  // namespace wfr::diffusion
