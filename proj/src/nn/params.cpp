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

#include "wavefr/nn/params.hpp"

#include <cmath>

#include "wavefr/error.hpp"

namespace wfr::nn {

template <class T>
Tensor<T>& ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (map_.count(name)) {
    throw ContractError("ParameterStore: duplicate parameter '" + name + "'");
  }
  value.set_requires_grad(true);
  return map_.emplace(name, std::move(value)).first->second;
}

template <class T>
const Tensor<T>& ParameterStore<T>::get(const std::string& name) const {
  auto it = map_.find(name);
  if (it == map_.end()) {
    throw ContractError("ParameterStore: no parameter '" + name + "'");
  }
  return it->second;
}

template <class T>
Tensor<T>& ParameterStore<T>::get(const std::string& name) {
  auto it = map_.find(name);
  if (it == map_.end()) {
    throw ContractError("ParameterStore: no parameter '" + name + "'");
  }
  return it->second;
}

template <class T>
std::size_t ParameterStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : map_) n += t.numel();
  return n;
}

template <class T>
void ParameterStore<T>::zero_grad() {
  for (auto& [name, t] : map_) t.zero_grad();
}

template <class T>
Tensor<T> he_normal(const Shape& shape, std::size_t fan_in, RngStream& rng) {
  const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<T> v(nn::numel(shape));
  for (T& x : v) {
    double z;
    do {
      z = rng.normal();
    } while (std::abs(z) > 2.0);
    x = static_cast<T>(z * std_dev);
  }
  return Tensor<T>(shape, std::move(v));
}

template <class T>
Tensor<T> identity_kernel(std::size_t channels, std::size_t k) {
  Tensor<T> w({channels, channels, k, k});
  const std::size_t c = k / 2;
  for (std::size_t o = 0; o < channels; ++o) {
    w.data()[((o * channels + o) * k + c) * k + c] = T(1);
  }
  return w;
}

template <class T>
void Adam<T>::step(ParameterStore<T>& params) {
  for (auto& [name, p] : params) {
    if (!p.has_grad()) {
      throw ContractError("Adam: parameter '" + name +
                          "' has no gradient; call zero_grad() and backward()");
    }
  }
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (auto& [name, p] : params) {
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() != p.numel()) {
      m.assign(p.numel(), T(0));
      v.assign(p.numel(), T(0));
    }
    auto w = p.data();
    auto g = p.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = mi / c1;
      const double vhat = vi / c2;
      w[i] = static_cast<T>(w[i] - config_.lr * mhat / (std::sqrt(vhat) + config_.eps));
    }
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class Adam<float>;
template class Adam<double>;
template Tensor<float> he_normal<float>(const Shape&, std::size_t, RngStream&);
template Tensor<double> he_normal<double>(const Shape&, std::size_t, RngStream&);
template Tensor<float> identity_kernel<float>(std::size_t, std::size_t);
template Tensor<double> identity_kernel<double>(std::size_t, std::size_t);

}  // namespace wfr::nn
