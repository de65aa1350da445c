#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace tdfb::detail {

inline constexpr double kNormEps = 1e-8;

// y = (x - mean) / sqrt(var + eps), population variance. Returns 1/sqrt(var+eps).
inline double standardize(std::span<const double> x, std::span<double> y) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv_std = 1.0 / std::sqrt(var + kNormEps);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean) * inv_std;
  return inv_std;
}

// dx = inv_std * (dy - mean(dy) - y * mean(dy * y)). Accumulates into dx.
inline void standardize_backward(std::span<const double> y, std::span<const double> dy,
                                 double inv_std, std::span<double> dx) {
  const double n = static_cast<double>(y.size());
  double mean_dy = 0.0, mean_dy_y = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mean_dy += dy[i];
    mean_dy_y += dy[i] * y[i];
  }
  mean_dy /= n;
  mean_dy_y /= n;
  for (std::size_t i = 0; i < y.size(); ++i) {
    dx[i] += inv_std * (dy[i] - mean_dy - y[i] * mean_dy_y);
  }
}

}  // namespace tdfb::detail
