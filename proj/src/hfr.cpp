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


#include "wavefr/hfr.hpp"

#include "wavefr/error.hpp"

namespace wfr::hfr {

using nn::Tensor;

template <class T>
HfrNet<T>::HfrNet(HfrConfig config, RngStream& rng) : config_(std::move(config)) {
  build(rng);
}

template <class T>
HfrNet<T>::HfrNet(HfrConfig config, nn::ParameterStore<T> params)
    : config_(std::move(config)) {
  RngStream dummy(0, 0);
  build(dummy);
  if (params.size() != params_.size()) {
    throw ContractError("hfr: checkpoint has " + std::to_string(params.size()) +
                        " tensors, architecture expects " +
                        std::to_string(params_.size()));
  }
  for (const auto& [name, t] : params_) {
    if (!params.contains(name)) {
      throw ContractError("hfr: checkpoint lacks tensor '" + name + "'");
    }
    if (params.get(name).shape() != t.shape()) {
      throw ContractError("hfr: tensor '" + name + "' has shape " +
                          nn::shape_string(params.get(name).shape()) +
                          ", architecture expects " + nn::shape_string(t.shape()));
    }
  }
  params_ = std::move(params);
}

template <class T>
void HfrNet<T>::build(RngStream& rng) {
  const std::size_t B = config_.base_channels, K = config_.band_channels();
  if (B == 0 || config_.image_channels == 0) {
    throw ParameterError("hfr: channel counts must be positive");
  }
  nn::add_conv(params_, "in_head", K, B, 3, rng);
  nn::add_res_block(params_, "enc0", B, B, 0, rng);
  // Fusion: two 3×3 → ReLU → 1×1 blocks on the level-2 triple.
  nn::add_conv(params_, "fuse.a1", K, B, 3, rng);
  nn::add_conv(params_, "fuse.b1", B, B, 1, rng);
  nn::add_conv(params_, "fuse.a2", B, B, 3, rng);
  nn::add_conv(params_, "fuse.b2", B, B, 1, rng);
  nn::add_res_block(params_, "enc1", B + B + K, 2 * B, 0, rng);
  nn::add_res_block(params_, "dec1", 2 * B, 2 * B, 0, rng);
  nn::add_upsample(params_, "up1", 2 * B);
  nn::add_res_block(params_, "dec0", 2 * B + B, B, 0, rng);
  nn::add_norm(params_, "head2.norm", 2 * B);
  nn::add_conv(params_, "head2", 2 * B, K, 3, rng, /*zero_init=*/true);
  nn::add_norm(params_, "head1.norm", B);
  nn::add_conv(params_, "head1", B, K, 3, rng, /*zero_init=*/true);
}

template <class T>
HfrOutput<T> HfrNet<T>::operator()(const Tensor<T>& xH1, const Tensor<T>& xH2) const {
  const std::size_t K = config_.band_channels(), G = config_.groups;
  if (xH1.rank() != 4 || xH2.rank() != 4 || xH1.dim(1) != K || xH2.dim(1) != K) {
    throw ShapeError("hfr: band inputs must be [N," + std::to_string(K) +
                     ",H,W], got " + nn::shape_string(xH1.shape()) + " and " +
                     nn::shape_string(xH2.shape()));
  }
  if (xH1.dim(0) != xH2.dim(0) || xH1.dim(2) != 2 * xH2.dim(2) ||
      xH1.dim(3) != 2 * xH2.dim(3)) {
    throw ShapeError("hfr: level-1 bands " + nn::shape_string(xH1.shape()) +
                     " must be exactly twice the size of level-2 bands " +
                     nn::shape_string(xH2.shape()));
  }
  const Tensor<T> none;
  const auto& ps = params_;

  const Tensor<T> e0 = nn::res_block(ps, "enc0", nn::conv(ps, "in_head", xH1), none, G);

  Tensor<T> f = nn::relu(nn::conv(ps, "fuse.b1", nn::relu(nn::conv(ps, "fuse.a1", xH2))));
  f = nn::relu(nn::conv(ps, "fuse.b2", nn::relu(nn::conv(ps, "fuse.a2", f))));
  const Tensor<T> fused = nn::concat_channels<T>({f, xH2});

  const Tensor<T> e1 = nn::res_block(
      ps, "enc1", nn::concat_channels<T>({nn::resample2x(e0, nn::Resample::kDown), fused}),
      none, G);
  const Tensor<T> d1 = nn::res_block(ps, "dec1", e1, none, G);
  const Tensor<T> up = nn::resample2x(d1, nn::Resample::kUp, &ps, "up1");
  const Tensor<T> d0 = nn::res_block(ps, "dec0", nn::concat_channels<T>({up, e0}), none, G);

  HfrOutput<T> out;
  out.xH2 = nn::add(xH2, nn::conv(ps, "head2", nn::silu(nn::norm(ps, "head2.norm", d1, G))));
  out.xH1 = nn::add(xH1, nn::conv(ps, "head1", nn::silu(nn::norm(ps, "head1.norm", d0, G))));
  return out;
}

template <class T>
BandTensors<T> two_level_bands(const Tensor<T>& x) {
  const Tensor<T> in = x.detach();
  const std::size_t C = in.dim(1);
  BandTensors<T> b;
  const Tensor<T> s1 = nn::haar_dwt(in);
  b.ll1 = nn::slice_channels(s1, 0, C);
  b.h1 = nn::slice_channels(s1, C, 3 * C);
  const Tensor<T> s2 = nn::haar_dwt(b.ll1);
  b.ll2 = nn::slice_channels(s2, 0, C);
  b.h2 = nn::slice_channels(s2, C, 3 * C);
  return b;
}

template <class T>
Tensor<T> recovery_loss(const std::vector<Tensor<T>>& xH_hat,
                        const std::vector<LevelTarget<T>>& targets,
                        const HfrLossConfig& config) {
  if (xH_hat.empty() || xH_hat.size() != targets.size()) {
    throw ShapeError("recovery_loss: " + std::to_string(xH_hat.size()) +
                     " predicted levels vs " + std::to_string(targets.size()) +
                     " targets");
  }
  if (config.alpha < 0.0) throw ParameterError("recovery_loss: alpha < 0");
  Tensor<T> total;
  for (std::size_t j = 0; j < xH_hat.size(); ++j) {
    const auto& tg = targets[j];
    Tensor<T> term = nn::l1_loss(xH_hat[j], tg.yH);
    if (config.alpha > 0.0) {
      const Tensor<T> rec = nn::haar_idwt(nn::concat_channels<T>({tg.y_ll, xH_hat[j]}));
      term = nn::add(term, nn::scale(nn::l1_loss(rec, tg.y_parent),
                                     static_cast<T>(config.alpha)));
    }
    total = total.defined() ? nn::add(total, term) : term;
  }
  return total;
}

template <class T>
Tensor<T> content_loss(const Tensor<T>& xH1_hat, const Tensor<T>& xH2_hat,
                       const Tensor<T>& y_ll2, const Tensor<T>& y,
                       const metrics::SsimConfig& ssim) {
  const Tensor<T> ll1 = nn::haar_idwt(nn::concat_channels<T>({y_ll2, xH2_hat}));
  const Tensor<T> rec = nn::haar_idwt(nn::concat_channels<T>({ll1, xH1_hat}));
  if (rec.shape() != y.shape()) {
    throw ShapeError("content_loss: reconstruction " + nn::shape_string(rec.shape()) +
                     " vs reference " + nn::shape_string(y.shape()));
  }
  return nn::add_scalar(nn::scale(nn::ssim(rec, y, ssim), T(-1)), T(1));
}

template <class T>
Tensor<T> hfr_loss(const HfrNet<T>& net, const Tensor<T>& lq, const Tensor<T>& hq,
                   const HfrLossConfig& config) {
  if (lq.shape() != hq.shape()) {
    throw ShapeError("hfr_loss: LQ " + nn::shape_string(lq.shape()) + " vs HQ " +
                     nn::shape_string(hq.shape()));
  }
  if (config.lambda < 0.0) throw ParameterError("hfr_loss: lambda < 0");
  const BandTensors<T> x = two_level_bands(lq);
  const BandTensors<T> y = two_level_bands(hq);
  const HfrOutput<T> pred = net(x.h1, x.h2);
  const Tensor<T> lr = recovery_loss<T>(
      {pred.xH1, pred.xH2},
      {{y.h1, y.ll1, hq.detach()}, {y.h2, y.ll2, y.ll1}}, config);
  if (config.lambda == 0.0) return lr;
  return nn::add(lr, nn::scale(content_loss(pred.xH1, pred.xH2, y.ll2, hq.detach()),
                               static_cast<T>(config.lambda)));
}

double hfr_lr_at(const HfrTrainConfig& config, std::size_t step) {
  // Integer thresholds so the schedule does not depend on rounding.
  if (10 * step >= 8 * config.steps) return config.lr * 0.01;
  if (2 * step >= config.steps) return config.lr * 0.1;
  return config.lr;
}

std::vector<double> train_hfr(HfrNet<float>& net, const std::vector<HfrPair>& data,
                              const HfrTrainConfig& config, std::uint64_t seed,
                              const std::function<void(std::size_t, double)>& on_step) {
  if (data.empty()) throw ContractError("train_hfr: empty dataset");
  if (config.batch_size == 0) throw ParameterError("train_hfr: batch size 0");
  const Image& first = data.front().hq;
  for (const auto& p : data) {
    if (!p.hq.same_shape(first) || !p.lq.same_shape(first)) {
      throw ShapeError("train_hfr: pair shapes differ (" + p.hq.shape_string() +
                       " / " + p.lq.shape_string() + " vs " +
                       first.shape_string() + ")");
    }
  }
  if (first.height % 4 != 0 || first.width % 4 != 0) {
    throw DimensionError("train_hfr: image size " + first.shape_string() +
                         " must be divisible by 4");
  }
  const std::size_t B = config.batch_size, m = first.size();
  const nn::Shape shape{B, first.channels, first.height, first.width};
  nn::Adam<float> adam({.lr = config.lr});
  std::vector<double> losses;
  losses.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    RngStream rng(seed, stream_id("hfr-step", step));
    Tensor<float> hq(shape), lq(shape);
    for (std::size_t b = 0; b < B; ++b) {
      const auto idx = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(data.size()) - 1));
      std::copy(data[idx].hq.data.begin(), data[idx].hq.data.end(),
                hq.data().begin() + b * m);
      std::copy(data[idx].lq.data.begin(), data[idx].lq.data.end(),
                lq.data().begin() + b * m);
    }
    adam.set_lr(hfr_lr_at(config, step));
    net.params().zero_grad();
    const Tensor<float> loss = hfr_loss(net, lq, hq, config.loss);
    nn::backward(loss);
    adam.step(net.params());
    losses.push_back(loss.item());
    if (on_step) on_step(step, loss.item());
  }
  return losses;
}

#define WAVEFR_INSTANTIATE_HFR(T)                                               \
  template class HfrNet<T>;                                                   \
  template BandTensors<T> two_level_bands<T>(const Tensor<T>&);               \
  template Tensor<T> recovery_loss<T>(const std::vector<Tensor<T>>&,          \
                                      const std::vector<LevelTarget<T>>&,     \
                                      const HfrLossConfig&);                  \
  template Tensor<T> content_loss<T>(const Tensor<T>&, const Tensor<T>&,      \
                                     const Tensor<T>&, const Tensor<T>&,      \
                                     const metrics::SsimConfig&);             \
  template Tensor<T> hfr_loss<T>(const HfrNet<T>&, const Tensor<T>&,          \
                                 const Tensor<T>&, const HfrLossConfig&);

WAVEFR_INSTANTIATE_HFR(float)
WAVEFR_INSTANTIATE_HFR(double)

}  // namespace wfr::hfr
