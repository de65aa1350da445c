#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace tdfb::detail {

using cplx = std::complex<double>;

struct FftwDeleter {
  void operator()(void* p) const;
};

template <typename T>
using FftwArray = std::unique_ptr<T[], FftwDeleter>;

FftwArray<double> alloc_real(std::size_t n);
FftwArray<cplx> alloc_complex(std::size_t n);

// Smallest 2^a 3^b 5^c that is >= n.
std::size_t good_fft_size(std::size_t n);

// Real-to-complex / complex-to-real transform pair of one size. Plans are
// created once per size under a lock and shared; executing them is
// thread-safe. Plans use FFTW_ESTIMATE so repeated runs are bit-identical.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }
  // Row stride for banks of spectra, padded to keep every row 64-byte aligned.
  std::size_t stride() const { return (bins() + 3) / 4 * 4; }

  // out[0..bins) = DFT of `in` zero-padded to size(). in.size() <= size().
  void forward(std::span<const double> in, cplx* out) const;
  // out[0..size()) = unnormalized inverse DFT of spec[0..bins).
  void inverse(const cplx* spec, double* out) const;

 private:
  std::size_t n_;
  void* r2c_ = nullptr;
  void* c2r_ = nullptr;
};

std::shared_ptr<const RealFft> real_fft(std::size_t n);

// Contiguous bank of `rows` spectra with aligned row starts.
class SpectrumBank {
 public:
  SpectrumBank() = default;
  SpectrumBank(std::size_t rows, std::size_t stride)
      : rows_(rows), stride_(stride), data_(alloc_complex(rows * stride)) {}

  std::size_t rows() const { return rows_; }
  cplx* row(std::size_t r) { return data_.get() + r * stride_; }
  const cplx* row(std::size_t r) const { return data_.get() + r * stride_; }

 private:
  std::size_t rows_ = 0;
  std::size_t stride_ = 0;
  FftwArray<cplx> data_;
};

}  // namespace tdfb::detail
