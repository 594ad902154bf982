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

// Conditional denoising diffusion on the low-frequency sub-band.
//
// Forward process:  y_t = sqrt(abar_t) y_0 + sqrt(1 - abar_t) eps
// Ancestral step:   y_{t-1} = (y_t - beta_t / sqrt(1 - abar_t) eps_hat) / sqrt(alpha_t)
//                             + sigma_t z,      z = 0 at t = 1
// DDIM step (eta=0): x0 = (y_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)
//                    y_prev = sqrt(abar_prev) x0 + sqrt(1 - abar_prev) eps_hat
//
// The noise predictor sees the noisy target and the low-quality condition
// concatenated along channels, so its input has exactly twice the image
// channel count.

#ifndef WAVEFR_DIFFUSION_HPP_
#define WAVEFR_DIFFUSION_HPP_

#include <functional>
#include <span>
#include <vector>

#include "wavefr/image.hpp"
#include "wavefr/nn/layers.hpp"
#include "wavefr/rng.hpp"

namespace wfr::diffusion {

// Tables indexed by timestep 0..T. Index 0 holds the boundary convention
// beta = 0, alpha = alpha_bar = 1, sigma = 0.
struct NoiseSchedule {
  int steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;  // posterior std sqrt(beta_t (1-abar_{t-1}) / (1-abar_t))
};

// Linear beta from beta_start (t=1) to beta_end (t=T).
NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);

enum class Sampler { kAncestral, kDdim };

// DDIM timesteps t_k = floor(k·T / S), k = 1..S, returned in decreasing
// order. Uniform stride over [1, T]; always ends at T.
std::vector<int> ddim_timesteps(int T, int steps);

// eps_theta(y_t, cond, t); one timestep per batch item.
template <class T>
using EpsModel = std::function<nn::Tensor<T>(
    const nn::Tensor<T>& y_t, const nn::Tensor<T>& cond, std::span<const int> t)>;

// No autograd history is recorded on the result.
template <class T>
nn::Tensor<T> q_sample(const nn::Tensor<T>& y0, std::span<const int> t,
                       const nn::Tensor<T>& eps, const NoiseSchedule& schedule);

// Explicit-noise form; z is ignored at t = 1.
template <class T>
nn::Tensor<T> ancestral_step(const nn::Tensor<T>& y_t, int t,
                             const nn::Tensor<T>& eps_hat,
                             const nn::Tensor<T>& z,
                             const NoiseSchedule& schedule);
// Draws z for item n from rngs[n].
template <class T>
nn::Tensor<T> ancestral_step(const nn::Tensor<T>& y_t, int t,
                             const nn::Tensor<T>& eps_hat,
                             const NoiseSchedule& schedule,
                             std::span<RngStream> rngs);

template <class T>
nn::Tensor<T> ddim_step(const nn::Tensor<T>& y_t, int t, int t_prev,
                        const nn::Tensor<T>& eps_hat,
                        const NoiseSchedule& schedule);

// Posterior mean E[y0 | y_t] for the prior y0 ~ N(mu, s2·I):
//   m = (sqrt(abar) s2 y_t + (1 - abar) mu) / (abar s2 + 1 - abar)
double gaussian_posterior_mean(double y_t, double abar, double mu, double s2);

// Exact minimum-MSE noise predictor for Gaussian data N(mu, s2·I); ignores
// the condition. mu holds one value per item element, or a single value
// broadcast to every element.
template <class T>
EpsModel<T> gaussian_oracle_denoiser(std::vector<double> mu, double s2,
                                     const NoiseSchedule& schedule);

// Runs the reverse process from y_T ~ N(0, I) (item n drawn from rngs[n]).
// Ancestral sampling visits every timestep, so steps must equal T; DDIM
// accepts any 1 <= steps <= T.
template <class T>
nn::Tensor<T> sample(const EpsModel<T>& model, const nn::Tensor<T>& cond,
                     const NoiseSchedule& schedule, Sampler method, int steps,
                     std::span<RngStream> rngs);

struct DenoiserConfig {
  std::size_t image_channels = 3;
  std::size_t base_channels = 32;
  std::vector<std::size_t> channel_mults{1, 2, 2};
  std::size_t res_blocks = 1;
  std::size_t embed_dim = 64;
  std::size_t groups = 8;

  std::size_t in_channels() const { return 2 * image_channels; }
  std::size_t out_channels() const { return image_channels; }
};

// U-shaped noise predictor: conv_in, res blocks with per-block timestep
// injection and 2× mean-pool downsampling, a middle block, a decoder with
// concatenated skips and nearest+conv upsampling, and a zero-initialised
// output convolution.
template <class T>
class Denoiser {
 public:
  Denoiser(DenoiserConfig config, RngStream& rng);
  // Adopts trained parameters; throws ContractError when names or shapes
  // differ from what config implies.
  Denoiser(DenoiserConfig config, nn::ParameterStore<T> params);

  nn::Tensor<T> operator()(const nn::Tensor<T>& y_t, const nn::Tensor<T>& cond,
                           std::span<const int> t) const;
  EpsModel<T> model() const;

  const DenoiserConfig& config() const { return config_; }
  nn::ParameterStore<T>& params() { return params_; }
  const nn::ParameterStore<T>& params() const { return params_; }

 private:
  void build(RngStream& rng);

  DenoiserConfig config_;
  nn::ParameterStore<T> params_;
};

// mean((eps - eps_theta(q_sample(y0, t, eps), cond, t))^2)
template <class T>
nn::Tensor<T> lcd_loss(const EpsModel<T>& model, const nn::Tensor<T>& y0,
                       const nn::Tensor<T>& cond, std::span<const int> t,
                       const nn::Tensor<T>& eps, const NoiseSchedule& schedule);

// Paired low-frequency bands in model space (see pipeline::normalize_ll).
struct LcdPair {
  Image target;     // high-quality band
  Image condition;  // low-quality band
};

struct LcdTrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 8;
  double lr = 1e-4;
};

// Each step s draws its batch indices, timesteps and noise from
// RngStream(seed, stream_id("lcd-step", s)). Returns the per-step loss.
std::vector<double> train_lcd(Denoiser<float>& model,
                              const std::vector<LcdPair>& data,
                              const NoiseSchedule& schedule,
                              const LcdTrainConfig& config, std::uint64_t seed,
                              const std::function<void(std::size_t, double)>&
                                  on_step = {});

}  // namespace wfr::diffusion

#endif  // WAVEFR_DIFFUSION_HPP_
