#include "tdfb/layers.hpp"

#include <cmath>
#include <string>

#include "spectral.hpp"
#include "standardize.hpp"
#include "tdfb/errors.hpp"

namespace tdfb {

std::size_t window_count(std::size_t length, std::size_t width, std::size_t stride) {
  if (length < width) return 0;
  return (length - width) / stride + 1;
}

// ---------------------------------------------------------------- PreEmphasis

std::vector<double> PreEmphasis::forward(std::span<const double> x, const Matrix& kernel) {
  if (kernel.rows() != 1 || kernel.cols() != 2) {
    throw ContractViolation("pre-emphasis kernel must be 1x2, got " + kernel.shape_string());
  }
  if (x.size() < 2) throw InputTooShort("pre-emphasis", x.size(), 2);
  input_.assign(x.begin(), x.end());
  kernel_ = kernel;
  std::vector<double> y(x.size() - 1);
  for (std::size_t n = 0; n + 1 < x.size(); ++n) y[n] = kernel[0] * x[n] + kernel[1] * x[n + 1];
  return y;
}

std::vector<double> PreEmphasis::backward(std::span<const double> grad_y, Param& kernel) const {
  if (grad_y.size() + 1 != input_.size()) {
    throw ContractViolation("pre-emphasis backward: gradient length does not match cached input");
  }
  std::vector<double> grad_x(input_.size(), 0.0);
  double g0 = 0.0, g1 = 0.0;
  for (std::size_t n = 0; n < grad_y.size(); ++n) {
    g0 += grad_y[n] * input_[n];
    g1 += grad_y[n] * input_[n + 1];
    grad_x[n] += kernel_[0] * grad_y[n];
    grad_x[n + 1] += kernel_[1] * grad_y[n];
  }
  if (kernel.trainable) {
    require_same_shape(kernel.grad, kernel_, "pre-emphasis backward");
    kernel.grad[0] += g0;
    kernel.grad[1] += g1;
  }
  return grad_x;
}

// --------------------------------------------------------------------- Conv1d

Conv1d::Conv1d() = default;
Conv1d::~Conv1d() = default;
Conv1d::Conv1d(Conv1d&&) noexcept = default;
Conv1d& Conv1d::operator=(Conv1d&&) noexcept = default;

Matrix Conv1d::forward(std::span<const double> x, const Matrix& filters) {
  width_ = filters.cols();
  rows_ = filters.rows();
  length_ = x.size();
  if (length_ < width_) throw InputTooShort("conv1d", length_, width_);
  const std::size_t frames = length_ - width_ + 1;

  // Circular correlation of size n >= L never wraps for valid outputs.
  fft_ = detail::real_fft(detail::good_fft_size(length_));
  const std::size_t n = fft_->size();
  const std::size_t bins = fft_->bins();
  const double scale = 1.0 / static_cast<double>(n);

  if (!input_spec_ || spec_stride_ != fft_->stride() || filter_spec_->rows() != rows_) {
    spec_stride_ = fft_->stride();
    input_spec_ = std::make_unique<detail::SpectrumBank>(1, spec_stride_);
    filter_spec_ = std::make_unique<detail::SpectrumBank>(rows_, spec_stride_);
  }
  fft_->forward(x, input_spec_->row(0));
  const detail::cplx* xs = input_spec_->row(0);

  Matrix out(rows_, frames);
  auto prod = detail::alloc_complex(fft_->stride());
  auto time = detail::alloc_real(n);
  for (std::size_t c = 0; c < rows_; ++c) {
    detail::cplx* fs = filter_spec_->row(c);
    fft_->forward(filters.row(c), fs);
    for (std::size_t k = 0; k < bins; ++k) prod[k] = std::conj(fs[k]) * xs[k];
    fft_->inverse(prod.get(), time.get());
    auto row = out.row(c);
    for (std::size_t t = 0; t < frames; ++t) row[t] = time[t] * scale;
  }
  return out;
}

std::vector<double> Conv1d::backward(const Matrix& grad_out, Param& filters,
                                     bool want_input_grad) const {
  if (!fft_) throw ContractViolation("conv1d backward called before forward");
  const std::size_t frames = length_ - width_ + 1;
  if (grad_out.rows() != rows_ || grad_out.cols() != frames) {
    throw ContractViolation("conv1d backward: gradient shape " + grad_out.shape_string() +
                            " does not match the cached forward output");
  }
  if (filters.value.rows() != rows_ || filters.value.cols() != width_) {
    throw ContractViolation("conv1d backward: filter shape changed since forward");
  }
  const bool want_filter_grad = filters.trainable;
  std::vector<double> grad_x;
  if (!want_filter_grad && !want_input_grad) return grad_x;

  const std::size_t n = fft_->size();
  const std::size_t bins = fft_->bins();
  const double scale = 1.0 / static_cast<double>(n);
  const detail::cplx* xs = input_spec_->row(0);

  auto gspec = detail::alloc_complex(fft_->stride());
  auto prod = detail::alloc_complex(fft_->stride());
  auto acc = detail::alloc_complex(fft_->stride());
  auto time = detail::alloc_real(n);
  if (want_input_grad) {
    for (std::size_t k = 0; k < bins; ++k) acc[k] = 0.0;
  }

  for (std::size_t c = 0; c < rows_; ++c) {
    fft_->forward(grad_out.row(c), gspec.get());
    if (want_filter_grad) {
      // dF[c][w] = sum_n g[c][n] x[n + w]
      for (std::size_t k = 0; k < bins; ++k) prod[k] = std::conj(gspec[k]) * xs[k];
      fft_->inverse(prod.get(), time.get());
      auto grow = filters.grad.row(c);
      for (std::size_t w = 0; w < width_; ++w) grow[w] += time[w] * scale;
    }
    if (want_input_grad) {
      // dx = sum_c g_c (*) f_c, a full linear convolution of length L.
      const detail::cplx* fs = filter_spec_->row(c);
      for (std::size_t k = 0; k < bins; ++k) acc[k] += gspec[k] * fs[k];
    }
  }

  if (want_input_grad) {
    fft_->inverse(acc.get(), time.get());
    grad_x.resize(length_);
    for (std::size_t i = 0; i < length_; ++i) grad_x[i] = time[i] * scale;
  }
  return grad_x;
}

// -------------------------------------------------------------- SquaredL2Pool

Matrix SquaredL2Pool::forward(const Matrix& x) {
  if (x.rows() % 2 != 0) {
    throw ContractViolation("squared_l2_pool: row count must be even, got " +
                            std::to_string(x.rows()));
  }
  input_ = x;
  Matrix out(x.rows() / 2, x.cols());
  for (std::size_t k = 0; k < out.rows(); ++k) {
    auto re = x.row(2 * k);
    auto im = x.row(2 * k + 1);
    auto o = out.row(k);
    for (std::size_t t = 0; t < x.cols(); ++t) o[t] = re[t] * re[t] + im[t] * im[t];
  }
  return out;
}

Matrix SquaredL2Pool::backward(const Matrix& grad_out) const {
  if (grad_out.rows() * 2 != input_.rows() || grad_out.cols() != input_.cols()) {
    throw ContractViolation("squared_l2_pool backward: shape mismatch");
  }
  Matrix grad(input_.rows(), input_.cols());
  for (std::size_t r = 0; r < input_.rows(); ++r) {
    auto g = grad_out.row(r / 2);
    auto x = input_.row(r);
    auto d = grad.row(r);
    for (std::size_t t = 0; t < input_.cols(); ++t) d[t] = 2.0 * x[t] * g[t];
  }
  return grad;
}

// ----------------------------------------------------------------------- Relu

Matrix Relu::forward(const Matrix& x) {
  input_ = x;
  Matrix out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix Relu::backward(const Matrix& grad_out) const {
  require_same_shape(grad_out, input_, "relu backward");
  Matrix grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(input_[i] > 0.0)) grad[i] = 0.0;
  }
  return grad;
}

// -------------------------------------------------------------- LowpassWindow

Matrix LowpassWindow::forward(const Matrix& x, const Matrix& weights) {
  if (weights.rows() != 1) throw ContractViolation("lowpass weights must be a row vector");
  const std::size_t width = weights.cols();
  const std::size_t frames = window_count(x.cols(), width, stride_);
  if (frames == 0) throw InputTooShort("lowpass_window", x.cols(), width);
  input_ = x;
  weights_ = weights;
  Matrix out(x.rows(), frames);
  auto w = weights.row(0);
  for (std::size_t c = 0; c < x.rows(); ++c) {
    auto in = x.row(c);
    auto o = out.row(c);
    for (std::size_t m = 0; m < frames; ++m) {
      const double* seg = in.data() + m * stride_;
      double s = 0.0;
      for (std::size_t k = 0; k < width; ++k) s += w[k] * seg[k];
      o[m] = s;
    }
  }
  return out;
}

Matrix LowpassWindow::backward(const Matrix& grad_out, Param& weights) const {
  const std::size_t width = weights_.cols();
  const std::size_t frames = window_count(input_.cols(), width, stride_);
  if (grad_out.rows() != input_.rows() || grad_out.cols() != frames) {
    throw ContractViolation("lowpass_window backward: gradient shape " +
                            grad_out.shape_string() + " does not match cached forward");
  }
  Matrix grad(input_.rows(), input_.cols());
  auto w = weights_.row(0);
  std::vector<double> dw(width, 0.0);
  for (std::size_t c = 0; c < input_.rows(); ++c) {
    auto in = input_.row(c);
    auto g = grad_out.row(c);
    auto d = grad.row(c);
    for (std::size_t m = 0; m < frames; ++m) {
      const double gm = g[m];
      const std::size_t base = m * stride_;
      for (std::size_t k = 0; k < width; ++k) {
        d[base + k] += w[k] * gm;
        dw[k] += in[base + k] * gm;
      }
    }
  }
  if (weights.trainable) {
    require_same_shape(weights.grad, weights_, "lowpass_window backward");
    for (std::size_t k = 0; k < width; ++k) weights.grad[k] += dw[k];
  }
  return grad;
}

// -------------------------------------------------------------------- MaxPool

Matrix MaxPool::forward(const Matrix& x) {
  const std::size_t frames = window_count(x.cols(), width_, stride_);
  if (frames == 0) throw InputTooShort("lowpass_maxpool", x.cols(), width_);
  rows_ = x.rows();
  cols_ = x.cols();
  argmax_.assign(rows_ * frames, 0);
  Matrix out(rows_, frames);
  for (std::size_t c = 0; c < rows_; ++c) {
    auto in = x.row(c);
    for (std::size_t m = 0; m < frames; ++m) {
      std::size_t best = m * stride_;
      for (std::size_t k = best + 1; k < m * stride_ + width_; ++k) {
        if (in[k] > in[best]) best = k;
      }
      argmax_[c * frames + m] = best;
      out(c, m) = in[best];
    }
  }
  return out;
}

Matrix MaxPool::backward(const Matrix& grad_out) const {
  const std::size_t frames = window_count(cols_, width_, stride_);
  if (grad_out.rows() != rows_ || grad_out.cols() != frames) {
    throw ContractViolation("lowpass_maxpool backward: shape mismatch");
  }
  Matrix grad(rows_, cols_);
  for (std::size_t c = 0; c < rows_; ++c) {
    for (std::size_t m = 0; m < frames; ++m) grad(c, argmax_[c * frames + m]) += grad_out(c, m);
  }
  return grad;
}

// ---------------------------------------------------------------- LogCompress

LogCompress::LogCompress(double offset) : offset_(offset) {
  if (!(offset > 0.0)) throw ContractViolation("log_compress: offset must be > 0");
}

Matrix LogCompress::forward(const Matrix& x) {
  input_ = x;
  Matrix out = x;
  for (double& v : out.values()) v = std::log(offset_ + std::abs(v));
  return out;
}

Matrix LogCompress::backward(const Matrix& grad_out) const {
  require_same_shape(grad_out, input_, "log_compress backward");
  Matrix grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double x = input_[i];
    const double sign = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    grad[i] *= sign / (offset_ + std::abs(x));
  }
  return grad;
}

// --------------------------------------------------------------- InstanceNorm

Matrix InstanceNorm::forward(const Matrix& x) {
  if (x.cols() < 2) {
    throw ContractViolation("instance_norm: need at least 2 frames, got " +
                            std::to_string(x.cols()));
  }
  output_ = Matrix(x.rows(), x.cols());
  inv_std_.assign(x.rows(), 0.0);
  for (std::size_t c = 0; c < x.rows(); ++c) {
    inv_std_[c] = detail::standardize(x.row(c), output_.row(c));
  }
  return output_;
}

Matrix InstanceNorm::backward(const Matrix& grad_out) const {
  require_same_shape(grad_out, output_, "instance_norm backward");
  Matrix grad(output_.rows(), output_.cols());
  for (std::size_t c = 0; c < output_.rows(); ++c) {
    detail::standardize_backward(output_.row(c), grad_out.row(c), inv_std_[c], grad.row(c));
  }
  return grad;
}

// ---------------------------------------------------------------- conveniences

std::vector<double> preemphasis_forward(std::span<const double> x, const Matrix& kernel) {
  return PreEmphasis().forward(x, kernel);
}
Matrix conv1d_forward(std::span<const double> x, const Matrix& filters) {
  return Conv1d().forward(x, filters);
}
Matrix squared_l2_pool(const Matrix& x) { return SquaredL2Pool().forward(x); }
Matrix relu(const Matrix& x) { return Relu().forward(x); }
Matrix lowpass_window(const Matrix& x, const Matrix& weights, std::size_t stride) {
  return LowpassWindow(stride).forward(x, weights);
}
Matrix lowpass_maxpool(const Matrix& x, std::size_t width, std::size_t stride) {
  return MaxPool(width, stride).forward(x);
}
Matrix log_compress(const Matrix& x, double offset) { return LogCompress(offset).forward(x); }
Matrix instance_norm(const Matrix& x) { return InstanceNorm().forward(x); }

}  // namespace tdfb
