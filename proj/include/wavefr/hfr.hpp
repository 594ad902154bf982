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


// One-pass recovery of the level-1 and level-2 detail bands.
//
// Band tensors hold the (lh, hl, hh) triple of a level concatenated along
// channels, so a colour image gives 9 channels. The level-1 triple enters
// the input head at full band resolution; the level-2 triple goes through a
// small fusion module and joins the encoder one level down, where the
// resolutions match. The last decoder features predict the level-1
// residual, the penultimate ones the level-2 residual.

#ifndef WAVEFR_HFR_HPP_
#define WAVEFR_HFR_HPP_

#include <functional>
#include <vector>

#include "wavefr/image.hpp"
#include "wavefr/metrics.hpp"
#include "wavefr/nn/layers.hpp"
#include "wavefr/rng.hpp"

namespace wfr::hfr {

struct HfrConfig {
  std::size_t image_channels = 3;
  std::size_t base_channels = 32;
  std::size_t groups = 8;

  std::size_t band_channels() const { return 3 * image_channels; }
};

struct HfrLossConfig {
  double alpha = 1.0;    // weight of the reconstructed-image term
  double lambda = 10.0;  // weight of the content loss
};

template <class T>
struct HfrOutput {
  nn::Tensor<T> xH1;
  nn::Tensor<T> xH2;
};

template <class T>
class HfrNet {
 public:
  HfrNet(HfrConfig config, RngStream& rng);
  // Throws ContractError when names or shapes differ from the architecture.
  HfrNet(HfrConfig config, nn::ParameterStore<T> params);

  // xH1 [N,3C,h,w], xH2 [N,3C,h/2,w/2]; h and w must be even.
  HfrOutput<T> operator()(const nn::Tensor<T>& xH1,
                          const nn::Tensor<T>& xH2) const;

  const HfrConfig& config() const { return config_; }
  nn::ParameterStore<T>& params() { return params_; }
  const nn::ParameterStore<T>& params() const { return params_; }

 private:
  void build(RngStream& rng);

  HfrConfig config_;
  nn::ParameterStore<T> params_;
};

// Sub-bands of a two-level decomposition of an NCHW batch.
template <class T>
struct BandTensors {
  nn::Tensor<T> ll1, h1;  // level 1: ll and (lh,hl,hh)
  nn::Tensor<T> ll2, h2;  // level 2
};

// No autograd history is kept.
template <class T>
BandTensors<T> two_level_bands(const nn::Tensor<T>& x);

// Targets for one level j: the HQ detail triple, the HQ ll at level j, and
// the HQ image one level up (the image itself for j = 1).
template <class T>
struct LevelTarget {
  nn::Tensor<T> yH;
  nn::Tensor<T> y_ll;
  nn::Tensor<T> y_parent;
};

//   sum_j  L1(xH_hat_j, yH_j) + alpha · L1(IWT(y_ll_j, xH_hat_j), y_parent_j)
template <class T>
nn::Tensor<T> recovery_loss(const std::vector<nn::Tensor<T>>& xH_hat,
                            const std::vector<LevelTarget<T>>& targets,
                            const HfrLossConfig& config = {});

// 1 − SSIM(IWT(IWT(y_ll2, xH2_hat), xH1_hat), y)
template <class T>
nn::Tensor<T> content_loss(const nn::Tensor<T>& xH1_hat,
                           const nn::Tensor<T>& xH2_hat,
                           const nn::Tensor<T>& y_ll2, const nn::Tensor<T>& y,
                           const metrics::SsimConfig& ssim = {});

// recovery + lambda · content on one batch.
template <class T>
nn::Tensor<T> hfr_loss(const HfrNet<T>& net, const nn::Tensor<T>& lq,
                       const nn::Tensor<T>& hq, const HfrLossConfig& config = {});

struct HfrPair {
  Image hq;
  Image lq;
};

struct HfrTrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 8;
  double lr = 1e-3;  // ×0.1 at 50% and again at 80% of the steps
  HfrLossConfig loss;
};

// Learning rate in effect at a given step.
double hfr_lr_at(const HfrTrainConfig& config, std::size_t step);

// Step s draws its batch from RngStream(seed, stream_id("hfr-step", s)).
// Returns the per-step loss.
std::vector<double> train_hfr(HfrNet<float>& net, const std::vector<HfrPair>& data,
                              const HfrTrainConfig& config, std::uint64_t seed,
                              const std::function<void(std::size_t, double)>&
                                  on_step = {});

}  // namespace wfr::hfr

#endif  // WAVEFR_HFR_HPP_
