#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tdfb/frontend.hpp"
#include "tdfb/signal_io.hpp"
#include "tdfb/tensor.hpp"

namespace tdfb {

/// Fixed log mel-filterbank: Hanning(400) frames every 160 samples,
/// 512-point power spectrum, 40 peak-normalized triangles, log(1 + x),
/// per-channel instance normalization.
struct MelConfig {
  std::size_t n_filters = 40;
  std::size_t win = 400;
  std::size_t hop = 160;
  std::size_t fft_size = 512;
  int sample_rate = 16000;
  double log_offset = 1.0;

  std::size_t bins() const { return fft_size / 2 + 1; }
  void validate() const;
};

/// Symmetric Hanning window, 0.5 - 0.5 cos(2 pi n / (width - 1)).
std::vector<double> hanning(std::size_t width);

/// |DFT|^2 of Hanning-windowed frames at positions hop*m, zero-padded to
/// fft_size. Shape [fft_size/2 + 1 x frames].
Matrix stft_power(const Waveform& wave, const MelConfig& cfg = {});

/// [n_filters x bins] triangle weights on the mel grid, peak 1 at each center.
Matrix mel_matrix(const MelConfig& cfg = {});

/// log(offset + mel_matrix * power). Shape [n_filters x frames].
Matrix mel_apply(const Matrix& power, const MelConfig& cfg = {});

/// mel_apply(stft_power(wave)) followed by instance normalization.
FeatureMap log_mel(const Waveform& wave, const MelConfig& cfg = {});

/// Time alignment between the two pipelines. Front-end frames are centred at
/// (conv_width - 1)/2 + (lowpass_width - 1)/2 (+1 with pre-emphasis), mel
/// frames at (win - 1)/2. The centre difference splits into whole hops
/// (`frames`) and a residual `samples` shift applied to the oracle input, so
/// front-end frame m lines up with mel frame m + frames of wave[samples:].
struct MelAlignment {
  std::ptrdiff_t frames = 0;
  std::size_t samples = 0;
};
MelAlignment mel_alignment(const FrontendConfig& config, const MelConfig& cfg = {});

/// Pearson correlation of two equally long series (0 if either is constant).
double pearson(std::span<const double> a, std::span<const double> b);

/// Per-channel Pearson correlation between front-end features and the log-mel
/// oracle over the aligned frames of all `waves` pooled together.
/// The oracle sees the same sequence-normalized waveform as the front-end,
/// advanced by the residual alignment shift.
std::vector<double> mel_channel_correlation(std::span<const Waveform> waves,
                                            const FilterParams& params,
                                            const FrontendConfig& config,
                                            const MelConfig& cfg = {});

}  // namespace tdfb
