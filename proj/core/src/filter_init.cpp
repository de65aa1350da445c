#include "tdfb/filter_init.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "tdfb/errors.hpp"

namespace tdfb {

double hz_to_mel(double hz) {
  if (!(hz >= 0.0)) throw ContractViolation("hz_to_mel: negative frequency " + std::to_string(hz));
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
  if (!(mel >= 0.0)) throw ContractViolation("mel_to_hz: negative mel " + std::to_string(mel));
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> MelScaleGrid::centers() const {
  std::vector<double> out(n_filters);
  for (std::size_t k = 0; k < n_filters; ++k) out[k] = center(k);
  return out;
}

MelScaleGrid mel_grid(std::size_t n_filters, double f_min, double f_max, int sample_rate) {
  if (n_filters < 1) throw ContractViolation("mel_grid: need at least one filter");
  if (f_max > sample_rate / 2.0) {
    throw ContractViolation("mel_grid: f_max " + std::to_string(f_max) +
                            " Hz exceeds the Nyquist frequency");
  }
  if (!(f_min >= 0.0 && f_min < f_max)) throw ContractViolation("mel_grid: need 0 <= f_min < f_max");
  MelScaleGrid grid;
  grid.n_filters = n_filters;
  grid.f_min = f_min;
  grid.f_max = f_max;
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  const std::size_t n_points = n_filters + 2;
  grid.points_hz.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double m = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                  static_cast<double>(n_points - 1);
    grid.points_hz[i] = mel_to_hz(m);
  }
  grid.points_hz.front() = f_min;
  grid.points_hz.back() = f_max;
  return grid;
}

double erb_hz(double hz) { return 24.7 + hz / 9.265; }

FilterBankInit init_gammatone(const MelScaleGrid& grid, std::size_t width, int sample_rate) {
  if (width < 2) throw ContractViolation("init_gammatone: width must be >= 2");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  FilterBankInit init{FilterKind::gammatone, Matrix(grid.n_filters, width), grid.centers()};
  for (std::size_t k = 0; k < grid.n_filters; ++k) {
    const double f = grid.center(k);
    const double b = 1.019 * erb_hz(f);
    auto row = init.filters.row(k);
    double norm = 0.0;
    for (std::size_t n = 0; n < width; ++n) {
      const double t = static_cast<double>(n) / sample_rate;
      row[n] = t * t * t * std::exp(-two_pi * b * t) * std::cos(two_pi * f * t);
      norm += row[n] * row[n];
    }
    norm = std::sqrt(norm);
    for (double& v : row) v /= norm;
  }
  return init;
}

double gabor_sigma_seconds(const MelScaleGrid& grid, std::size_t k) {
  // |phi_hat(f)|^2 = exp(-4 pi^2 sigma^2 (f - fc)^2) has FWHM sqrt(ln 2) / (pi sigma).
  // A peak-normalized triangle has FWHM equal to half its base.
  const double fwhm = 0.5 * (grid.right(k) - grid.left(k));
  return std::sqrt(std::numbers::ln2) / (std::numbers::pi * fwhm);
}

FilterBankInit init_gabor(const MelScaleGrid& grid, std::size_t width, int sample_rate) {
  if (width < 2) throw ContractViolation("init_gabor: width must be >= 2");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  FilterBankInit init{FilterKind::gabor, Matrix(2 * grid.n_filters, width), grid.centers()};
  const double mid = 0.5 * static_cast<double>(width - 1);
  for (std::size_t k = 0; k < grid.n_filters; ++k) {
    const double f = grid.center(k);
    const double sigma_s = gabor_sigma_seconds(grid, k);
    const double sigma = sigma_s * sample_rate;  // in samples
    // Amplitude uses the continuous-time density normalization (sigma in seconds).
    const double scale = 1.0 / (std::sqrt(two_pi) * sigma_s);
    auto re = init.filters.row(2 * k);
    auto im = init.filters.row(2 * k + 1);
    for (std::size_t n = 0; n < width; ++n) {
      const double u = static_cast<double>(n) - mid;
      const double env = scale * std::exp(-u * u / (2.0 * sigma * sigma));
      const double phase = two_pi * f * u / sample_rate;
      re[n] = env * std::cos(phase);
      im[n] = env * std::sin(phase);
    }
  }
  return init;
}

FilterBankInit init_random(std::size_t n_rows, std::size_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  std::uniform_real_distribution<double> dist(-bound, bound);
  FilterBankInit init{FilterKind::random, Matrix(n_rows, width), {}};
  for (double& v : init.filters.values()) v = dist(rng);
  return init;
}

std::vector<double> squared_hanning(std::size_t width) {
  if (width < 2) throw ContractViolation("squared_hanning: width must be >= 2");
  std::vector<double> w(width);
  const double denom = static_cast<double>(width - 1);
  for (std::size_t n = 0; n < width; ++n) {
    const double h = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
    w[n] = h * h;
  }
  // cos(2 pi) is not exactly 1 in floating point.
  w.front() = 0.0;
  w.back() = 0.0;
  return w;
}

Matrix pre_emphasis_init() { return Matrix::from_rows({{-kPreEmphasisAlpha, 1.0}}); }

}  // namespace tdfb
