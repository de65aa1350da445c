#include "spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <new>
#include <vector>

namespace tdfb::detail {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Scratch {
  FftwArray<double> real;
  FftwArray<cplx> spec;
  std::size_t real_n = 0;
  std::size_t spec_n = 0;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

double* scratch_real(std::size_t n) {
  Scratch& s = scratch();
  if (s.real_n < n) {
    s.real = alloc_real(n);
    s.real_n = n;
  }
  return s.real.get();
}

cplx* scratch_spec(std::size_t n) {
  Scratch& s = scratch();
  if (s.spec_n < n) {
    s.spec = alloc_complex(n);
    s.spec_n = n;
  }
  return s.spec.get();
}

}  // namespace

void FftwDeleter::operator()(void* p) const { fftw_free(p); }

FftwArray<double> alloc_real(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwArray<double>(p);
}

FftwArray<cplx> alloc_complex(std::size_t n) {
  auto* p = static_cast<cplx*>(fftw_malloc(sizeof(cplx) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwArray<cplx>(p);
}

std::size_t good_fft_size(std::size_t n) {
  std::size_t best = 1;
  while (best < n) best *= 2;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5) {
    for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
      std::size_t v = p35;
      while (v < n) v *= 2;
      best = std::min(best, v);
    }
  }
  return best;
}

RealFft::RealFft(std::size_t n) : n_(n) {
  auto in = alloc_real(n_);
  auto out = alloc_complex(stride());
  std::lock_guard<std::mutex> lock(planner_mutex());
  r2c_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in.get(),
                              reinterpret_cast<fftw_complex*>(out.get()), FFTW_ESTIMATE);
  c2r_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), reinterpret_cast<fftw_complex*>(out.get()),
                              in.get(), FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(r2c_));
  fftw_destroy_plan(static_cast<fftw_plan>(c2r_));
}

void RealFft::forward(std::span<const double> in, cplx* out) const {
  double* buf = scratch_real(n_);
  std::copy(in.begin(), in.end(), buf);
  std::fill(buf + in.size(), buf + n_, 0.0);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), buf, reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(const cplx* spec, double* out) const {
  cplx* buf = scratch_spec(stride());
  std::memcpy(static_cast<void*>(buf), spec, sizeof(cplx) * bins());
  double* result = scratch_real(n_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), reinterpret_cast<fftw_complex*>(buf), result);
  std::copy(result, result + n_, out);
}

std::shared_ptr<const RealFft> real_fft(std::size_t n) {
  // Touch the planner lock first so it outlives the cached plans at exit.
  static std::mutex& planner = planner_mutex();
  (void)planner;
  static std::mutex cache_mutex;
  static std::map<std::size_t, std::shared_ptr<const RealFft>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const RealFft>(n);
  return slot;
}

}  // namespace tdfb::detail
