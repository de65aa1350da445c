#pragma once

// Differentiable building blocks of the time-domain front-ends. Each layer
// object caches what its backward pass needs during forward(); backward()
// accumulates parameter gradients (only for trainable Params) and returns the
// gradient with respect to the layer input.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "tdfb/tensor.hpp"

namespace tdfb {

namespace detail {
class RealFft;
class SpectrumBank;
}  // namespace detail

/// Two-tap valid convolution: y[n] = k[0] x[n] + k[1] x[n+1], length L-1.
class PreEmphasis {
 public:
  std::vector<double> forward(std::span<const double> x, const Matrix& kernel);
  std::vector<double> backward(std::span<const double> grad_y, Param& kernel) const;

 private:
  std::vector<double> input_;
  Matrix kernel_;
};

/// Bank of valid cross-correlations, stride 1, no bias:
/// out[c][n] = sum_w filters[c][w] x[n + w], n = 0 .. L - W.
/// Computed through FFTs of the whole sequence.
class Conv1d {
 public:
  Conv1d();
  ~Conv1d();
  Conv1d(Conv1d&&) noexcept;
  Conv1d& operator=(Conv1d&&) noexcept;

  Matrix forward(std::span<const double> x, const Matrix& filters);
  /// Returns the input gradient when `want_input_grad`, otherwise an empty vector.
  std::vector<double> backward(const Matrix& grad_out, Param& filters,
                               bool want_input_grad = true) const;

 private:
  std::size_t length_ = 0;
  std::size_t rows_ = 0;
  std::size_t width_ = 0;
  std::size_t spec_stride_ = 0;
  std::shared_ptr<const detail::RealFft> fft_;
  std::unique_ptr<detail::SpectrumBank> input_spec_;
  std::unique_ptr<detail::SpectrumBank> filter_spec_;
};

/// Sums squares of consecutive row pairs: out[k] = in[2k]^2 + in[2k+1]^2.
/// With (cos, sin) filter pairs this is the squared modulus of a complex
/// convolution.
class SquaredL2Pool {
 public:
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out) const;

 private:
  Matrix input_;
};

class Relu {
 public:
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out) const;

 private:
  Matrix input_;
};

/// Depthwise decimating FIR shared by every channel:
/// out[c][m] = sum_w weights[w] x[c][stride m + w].
class LowpassWindow {
 public:
  explicit LowpassWindow(std::size_t stride = 160) : stride_(stride) {}
  Matrix forward(const Matrix& x, const Matrix& weights);
  Matrix backward(const Matrix& grad_out, Param& weights) const;

 private:
  std::size_t stride_;
  Matrix input_;
  Matrix weights_;
};

/// Per-channel max over windows; gradient goes to the first maximum.
class MaxPool {
 public:
  MaxPool(std::size_t width = 400, std::size_t stride = 160) : width_(width), stride_(stride) {}
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out) const;

 private:
  std::size_t width_;
  std::size_t stride_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> argmax_;
};

/// log(offset + |x|), with sign(0) = 0 in the backward pass.
class LogCompress {
 public:
  explicit LogCompress(double offset);
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out) const;

 private:
  double offset_;
  Matrix input_;
};

/// Per-row mean/variance normalization over the time axis, population
/// variance, eps = 1e-8, no affine terms.
class InstanceNorm {
 public:
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out) const;

 private:
  Matrix output_;
  std::vector<double> inv_std_;
};

/// Number of valid windows of `width` at `stride` over `length` samples,
/// or 0 if the input is shorter than one window.
std::size_t window_count(std::size_t length, std::size_t width, std::size_t stride);

// Stateless forward conveniences.
std::vector<double> preemphasis_forward(std::span<const double> x, const Matrix& kernel);
Matrix conv1d_forward(std::span<const double> x, const Matrix& filters);
Matrix squared_l2_pool(const Matrix& x);
Matrix relu(const Matrix& x);
Matrix lowpass_window(const Matrix& x, const Matrix& weights, std::size_t stride = 160);
Matrix lowpass_maxpool(const Matrix& x, std::size_t width = 400, std::size_t stride = 160);
Matrix log_compress(const Matrix& x, double offset);
Matrix instance_norm(const Matrix& x);

}  // namespace tdfb
