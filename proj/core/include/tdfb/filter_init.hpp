#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tdfb/tensor.hpp"

namespace tdfb {

inline constexpr std::size_t kConvWidth = 400;
inline constexpr std::size_t kNumChannels = 40;

/// HTK mel scale: 2595 * log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// n_filters + 2 points equally spaced in mel between f_min and f_max. Filter
/// k spans (points[k], points[k+1], points[k+2]).
struct MelScaleGrid {
  std::size_t n_filters = 0;
  double f_min = 0.0;
  double f_max = 0.0;
  std::vector<double> points_hz;

  double left(std::size_t k) const { return points_hz[k]; }
  double center(std::size_t k) const { return points_hz[k + 1]; }
  double right(std::size_t k) const { return points_hz[k + 2]; }
  std::vector<double> centers() const;
};

MelScaleGrid mel_grid(std::size_t n_filters = kNumChannels, double f_min = 0.0,
                      double f_max = 8000.0, int sample_rate = 16000);

enum class FilterKind { gammatone, gabor, random };

struct FilterBankInit {
  FilterKind kind = FilterKind::random;
  Matrix filters;
  std::vector<double> center_hz;  // empty for random filters
};

/// Glasberg-Moore equivalent rectangular bandwidth, 24.7 + f / 9.265.
double erb_hz(double hz);

/// Fourth-order gammatone impulse responses t^3 exp(-2 pi b t) cos(2 pi f t)
/// with b = 1.019 ERB(f), one per grid center, each row scaled to unit L2
/// norm. Causal: row index 0 is t = 0.
FilterBankInit init_gammatone(const MelScaleGrid& grid, std::size_t width = kConvWidth,
                              int sample_rate = 16000);

/// Gaussian envelope width (seconds) for the Gabor atom of filter k. The
/// squared magnitude response of the atom has the same full width at half
/// maximum as the k-th mel triangle.
double gabor_sigma_seconds(const MelScaleGrid& grid, std::size_t k);

/// Complex Gabor atoms centred in the window, stored as interleaved real rows:
/// row 2k is the cosine (real) part of filter k, row 2k+1 the sine part.
FilterBankInit init_gabor(const MelScaleGrid& grid, std::size_t width = kConvWidth,
                          int sample_rate = 16000);

/// I.i.d. uniform entries on [-1/sqrt(width), 1/sqrt(width)].
FilterBankInit init_random(std::size_t n_rows, std::size_t width, std::uint64_t seed);

/// (0.5 - 0.5 cos(2 pi n / (width - 1)))^2, n = 0 .. width-1.
std::vector<double> squared_hanning(std::size_t width = kConvWidth);

inline constexpr double kPreEmphasisAlpha = 0.97;

/// 1x2 kernel [-alpha, 1] so that y[n] = x[n] - alpha x[n-1].
Matrix pre_emphasis_init();

}  // namespace tdfb
