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

#include "wavefr/metrics.hpp"

#include <cmath>
#include <limits>

#include "wavefr/error.hpp"
#include "wavefr/kernels/kernels.hpp"

namespace wfr::metrics {

std::vector<double> ssim_window(const SsimConfig& config) {
  if (config.window < 1 || config.window % 2 == 0) {
    throw ParameterError("ssim: window must be a positive odd size");
  }
  if (config.sigma <= 0.0) throw ParameterError("ssim: sigma must be > 0");
  const int r = config.window / 2;
  std::vector<double> taps(config.window);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = std::exp(-(i * i) / (2.0 * config.sigma * config.sigma));
    sum += taps[i + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

double psnr_from_mse(double mse_value, double peak) {
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse_value);
}

double mse(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("mse: shape " + a.shape_string() + " vs " +
                     b.shape_string());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b, double peak) {
  if (!a.same_shape(b)) {
    throw ShapeError("psnr: shape " + a.shape_string() + " vs " +
                     b.shape_string());
  }
  return psnr_from_mse(mse(a, b), peak);
}

double ssim(const Image& a, const Image& b, const SsimConfig& config) {
  if (!a.same_shape(b)) {
    throw ShapeError("ssim: shape " + a.shape_string() + " vs " +
                     b.shape_string());
  }
  const auto win = static_cast<std::size_t>(config.window);
  if (a.height < win || a.width < win) {
    throw DimensionError("ssim: image " + a.shape_string() +
                         " is smaller than the " + std::to_string(win) + "x" +
                         std::to_string(win) + " window");
  }
  const std::vector<double> taps = ssim_window(config);
  const std::size_t n = a.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a.data[i];
    y[i] = b.data[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  std::vector<double> mx(n), my(n), mxx(n), myy(n), mxy(n);
  const std::size_t planes = a.channels, h = a.height, w = a.width;
  kernels::filter_separable<double>(x, planes, h, w, taps, mx);
  kernels::filter_separable<double>(y, planes, h, w, taps, my);
  kernels::filter_separable<double>(xx, planes, h, w, taps, mxx);
  kernels::filter_separable<double>(yy, planes, h, w, taps, myy);
  kernels::filter_separable<double>(xy, planes, h, w, taps, mxy);

  const double c1 = config.c1(), c2 = config.c2();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    total += num / den;
  }
  return total / static_cast<double>(n);
}

}  // namespace wfr::metrics
