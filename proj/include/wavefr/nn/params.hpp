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

#ifndef WAVEFR_NN_PARAMS_HPP_
#define WAVEFR_NN_PARAMS_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "wavefr/nn/tensor.hpp"
#include "wavefr/rng.hpp"

namespace wfr::nn {

// Named trainable tensors, iterated in sorted-name order.
template <class T>
class ParameterStore {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  // Registers a leaf with requires_grad set. Throws ContractError on a
  // duplicate name.
  Tensor<T>& add(const std::string& name, Tensor<T> value);

  // Throws ContractError naming the missing parameter.
  const Tensor<T>& get(const std::string& name) const;
  Tensor<T>& get(const std::string& name);
  bool contains(const std::string& name) const { return map_.count(name) != 0; }

  std::size_t size() const { return map_.size(); }
  std::size_t parameter_count() const;

  // Allocates (or resets) every gradient to zero.
  void zero_grad();

  typename Map::iterator begin() { return map_.begin(); }
  typename Map::iterator end() { return map_.end(); }
  typename Map::const_iterator begin() const { return map_.begin(); }
  typename Map::const_iterator end() const { return map_.end(); }

  // Same names and shapes, values converted to U.
  template <class U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& [name, t] : map_) {
      std::vector<U> v(t.data().begin(), t.data().end());
      out.add(name, Tensor<U>(t.shape(), std::move(v)));
    }
    return out;
  }

 private:
  Map map_;
};

// Weight initialisers. He-normal draws N(0, 2/fan_in), redrawing anything
// beyond two standard deviations.
template <class T>
Tensor<T> he_normal(const Shape& shape, std::size_t fan_in, RngStream& rng);

// OIHW kernel with a 1 at the centre tap of every matching (o, i) pair and
// zeros elsewhere; the convolution starts out as the identity map.
template <class T>
Tensor<T> identity_kernel(std::size_t channels, std::size_t k);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moments are keyed by parameter name and created on the
// first step.
template <class T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Throws ContractError when a parameter has no gradient buffer.
  void step(ParameterStore<T>& params);

  void set_lr(double lr) { config_.lr = lr; }
  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return step_; }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::map<std::string, std::vector<T>> m_, v_;
};

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;
extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace wfr::nn

#endif  // WAVEFR_NN_PARAMS_HPP_
