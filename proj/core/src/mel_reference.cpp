#include "tdfb/mel_reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spectral.hpp"
#include "tdfb/errors.hpp"
#include "tdfb/filter_init.hpp"
#include "tdfb/layers.hpp"

namespace tdfb {

void MelConfig::validate() const {
  if (fft_size < win) throw ContractViolation("MelConfig: fft_size must be >= win");
  if (n_filters < 1 || win < 2 || hop < 1) throw ContractViolation("MelConfig: invalid sizes");
  if (!(log_offset > 0.0)) throw ContractViolation("MelConfig: log_offset must be > 0");
}

std::vector<double> hanning(std::size_t width) {
  std::vector<double> w(width);
  const double denom = static_cast<double>(width - 1);
  for (std::size_t n = 0; n < width; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  }
  return w;
}

Matrix stft_power(const Waveform& wave, const MelConfig& cfg) {
  cfg.validate();
  const std::size_t frames = window_count(wave.samples.size(), cfg.win, cfg.hop);
  if (frames == 0) throw InputTooShort("stft_power", wave.samples.size(), cfg.win);
  const auto window = hanning(cfg.win);
  const auto fft = detail::real_fft(cfg.fft_size);
  auto spec = detail::alloc_complex(fft->stride());
  std::vector<double> frame(cfg.win);
  Matrix power(cfg.bins(), frames);
  for (std::size_t m = 0; m < frames; ++m) {
    const double* seg = wave.samples.data() + m * cfg.hop;
    for (std::size_t n = 0; n < cfg.win; ++n) frame[n] = seg[n] * window[n];
    fft->forward(frame, spec.get());
    for (std::size_t k = 0; k < cfg.bins(); ++k) power(k, m) = std::norm(spec[k]);
  }
  return power;
}

Matrix mel_matrix(const MelConfig& cfg) {
  cfg.validate();
  const MelScaleGrid grid =
      mel_grid(cfg.n_filters, 0.0, cfg.sample_rate / 2.0, cfg.sample_rate);
  Matrix m(cfg.n_filters, cfg.bins());
  for (std::size_t k = 0; k < cfg.n_filters; ++k) {
    const double l = grid.left(k), c = grid.center(k), r = grid.right(k);
    for (std::size_t b = 0; b < cfg.bins(); ++b) {
      const double f = static_cast<double>(b) * cfg.sample_rate / static_cast<double>(cfg.fft_size);
      double w = 0.0;
      if (f > l && f <= c) {
        w = (f - l) / (c - l);
      } else if (f > c && f < r) {
        w = (r - f) / (r - c);
      }
      m(k, b) = w;
    }
  }
  return m;
}

Matrix mel_apply(const Matrix& power, const MelConfig& cfg) {
  if (power.rows() != cfg.bins()) {
    throw ContractViolation("mel_apply: power spectrum has " + std::to_string(power.rows()) +
                            " bins, expected " + std::to_string(cfg.bins()));
  }
  const Matrix weights = mel_matrix(cfg);
  Matrix out(cfg.n_filters, power.cols());
  for (std::size_t k = 0; k < cfg.n_filters; ++k) {
    auto w = weights.row(k);
    for (std::size_t b = 0; b < cfg.bins(); ++b) {
      if (w[b] == 0.0) continue;
      auto p = power.row(b);
      auto o = out.row(k);
      for (std::size_t t = 0; t < power.cols(); ++t) o[t] += w[b] * p[t];
    }
  }
  for (double& v : out.values()) v = std::log(cfg.log_offset + v);
  return out;
}

FeatureMap log_mel(const Waveform& wave, const MelConfig& cfg) {
  return FeatureMap{instance_norm(mel_apply(stft_power(wave, cfg), cfg))};
}

MelAlignment mel_alignment(const FrontendConfig& config, const MelConfig& cfg) {
  const double fe_center = 0.5 * static_cast<double>(config.conv_width - 1) +
                           0.5 * static_cast<double>(config.lowpass_width - 1) +
                           (config.use_pre_emphasis ? 1.0 : 0.0);
  const double mel_center = 0.5 * static_cast<double>(cfg.win - 1);
  const double hop = static_cast<double>(cfg.hop);
  const double diff = fe_center - mel_center;
  MelAlignment a;
  a.frames = static_cast<std::ptrdiff_t>(std::floor(diff / hop));
  const double rest = diff - static_cast<double>(a.frames) * hop;
  a.samples = static_cast<std::size_t>(std::lround(rest));
  return a;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("pearson: length mismatch");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> mel_channel_correlation(std::span<const Waveform> waves,
                                            const FilterParams& params,
                                            const FrontendConfig& config,
                                            const MelConfig& cfg) {
  if (cfg.n_filters != config.n_channels) {
    throw ContractViolation("mel_channel_correlation: channel counts differ");
  }
  const MelAlignment align = mel_alignment(config, cfg);
  std::vector<std::vector<double>> fe(config.n_channels), mel(config.n_channels);
  for (const Waveform& wave : waves) {
    const FeatureMap a = frontend_forward(wave, params, config);
    Waveform shifted = normalize_sequence(wave);
    if (align.samples >= shifted.samples.size()) {
      throw InputTooShort("mel_channel_correlation", shifted.samples.size(),
                          align.samples + 1);
    }
    shifted.samples.erase(shifted.samples.begin(),
                          shifted.samples.begin() + static_cast<std::ptrdiff_t>(align.samples));
    const FeatureMap b = log_mel(shifted, cfg);
    for (std::size_t m = 0; m < a.frames(); ++m) {
      const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(m) + align.frames;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(b.frames())) continue;
      for (std::size_t c = 0; c < config.n_channels; ++c) {
        fe[c].push_back(a.values(c, m));
        mel[c].push_back(b.values(c, static_cast<std::size_t>(j)));
      }
    }
  }
  std::vector<double> corr(config.n_channels);
  for (std::size_t c = 0; c < config.n_channels; ++c) corr[c] = pearson(fe[c], mel[c]);
  return corr;
}

}  // namespace tdfb
