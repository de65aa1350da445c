#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tdfb/errors.hpp"
#include "tdfb/filter_init.hpp"
#include "tdfb/frontend.hpp"
#include "tdfb/mel_reference.hpp"

using namespace tdfb;

namespace {

Waveform sine(double hz, std::size_t n) {
  Waveform w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0);
  }
  return w;
}

}  // namespace

TEST(Stft, PureToneLandsInBinThirtyTwo) {
  const Matrix p = stft_power(sine(1000.0, 16000));
  ASSERT_EQ(p.rows(), 257u);
  ASSERT_EQ(p.cols(), 98u);
  for (std::size_t t = 0; t < p.cols(); ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.rows(); ++k) {
      if (p(k, t) > p(best, t)) best = k;
    }
    EXPECT_EQ(best, static_cast<std::size_t>(std::lround(1000.0 * 512 / 16000.0)));
  }
}

TEST(Stft, MatchesDirectDft) {
  Waveform w;
  w.samples = oracle::gaussian(1000, 2);
  const Matrix p = stft_power(w);
  const auto win = hanning(400);
  for (std::size_t m : {0u, 2u, 3u}) {
    std::vector<double> frame(400);
    for (std::size_t n = 0; n < 400; ++n) frame[n] = w.samples[160 * m + n] * win[n];
    for (std::size_t k = 0; k < 257; k += 5) {
      const double ref = oracle::dft_power(frame, 512, k);
      EXPECT_NEAR(p(k, m), ref, 1e-9 * std::max(1.0, ref));
    }
  }
}

TEST(Stft, ParsevalAndZeros) {
  Waveform w;
  w.samples = oracle::gaussian(2000, 3);
  const Matrix p = stft_power(w);
  const auto win = hanning(400);
  for (std::size_t m = 0; m < p.cols(); ++m) {
    long double spec = 0.0L, energy = 0.0L;
    for (std::size_t k = 0; k < 257; ++k) spec += (k == 0 || k == 256 ? 1.0L : 2.0L) * p(k, m);
    for (std::size_t n = 0; n < 400; ++n) {
      const long double v = w.samples[160 * m + n] * win[n];
      energy += v * v;
    }
    EXPECT_NEAR(static_cast<double>(spec / 512.0L / energy), 1.0, 1e-6);
  }
  Waveform z;
  z.samples.assign(800, 0.0);
  const Matrix silent = stft_power(z);
  for (double v : silent.values()) EXPECT_EQ(v, 0.0);
  z.samples.assign(399, 0.0);
  EXPECT_THROW(stft_power(z), InputTooShort);
}

TEST(MelMatrix, TrianglesCoverEveryFilterAndPeakAtOne) {
  const Matrix m = mel_matrix();
  ASSERT_EQ(m.rows(), 40u);
  ASSERT_EQ(m.cols(), 257u);
  for (std::size_t k = 0; k < 40; ++k) {
    double sum = 0.0, peak = 0.0;
    for (double v : m.row(k)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
      peak = std::max(peak, v);
    }
    EXPECT_GT(sum, 0.0) << k;
    EXPECT_GT(peak, 0.5) << k;
  }
}

TEST(MelApply, UnitPowerAtCentreBinSelectsThatChannel) {
  const MelScaleGrid g = mel_grid();
  for (std::size_t k = 0; k < 40; ++k) {
    Matrix power(257, 1, 0.0);
    const auto bin = static_cast<std::size_t>(std::lround(g.center(k) * 512.0 / 16000.0));
    power(bin, 0) = 1.0;
    const Matrix out = mel_apply(power);
    std::size_t best = 0;
    for (std::size_t c = 1; c < 40; ++c) {
      if (out(c, 0) > out(best, 0)) best = c;
    }
    EXPECT_EQ(best, k);
  }
}

TEST(MelApply, ZerosAndShapeErrors) {
  const Matrix silent = mel_apply(Matrix(257, 3, 0.0));
  for (double v : silent.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(mel_apply(Matrix(256, 3)), ContractViolation);
}

TEST(MelApply, ToneSweepIsMonotone) {
  std::size_t prev = 0;
  for (double f = 100.0; f <= 7000.0; f *= 1.05) {
    const Matrix m = mel_apply(stft_power(sine(f, 800)));
    std::size_t best = 0;
    for (std::size_t c = 1; c < 40; ++c) {
      if (m(c, 0) > m(best, 0)) best = c;
    }
    EXPECT_GE(best, prev) << f;
    prev = best;
  }
}

TEST(LogMel, FortyNormalizedChannels) {
  const FeatureMap f = log_mel(synth_toy_example(1, 5).wave);
  EXPECT_EQ(f.channels(), 40u);
  EXPECT_EQ(f.frames(), 98u);
  for (std::size_t c = 0; c < 40; ++c) {
    std::vector<double> row(f.values.row(c).begin(), f.values.row(c).end());
    EXPECT_NEAR(oracle::mean(row), 0.0, 1e-9);
  }
  const Waveform w = synth_toy_example(0, 1).wave;
  EXPECT_EQ(log_mel(w).values, log_mel(w).values);
}

TEST(LogMel, FrameCountsVersusFrontend) {
  // The valid-window conventions differ: the mel oracle needs one 400-sample
  // window per frame, the front-end a 400-tap filter followed by a 400-wide
  // low-pass, so the oracle yields two or three more frames.
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> len(1000, 64000);
  const FrontendConfig c = FrontendConfig::scattering();
  for (int i = 0; i < 100; ++i) {
    const std::size_t l = len(rng);
    const std::size_t mel = oracle::enumerate_windows(l, 400, 160);
    const std::size_t fe =
        oracle::enumerate_windows(oracle::enumerate_windows(l, 400, 1), 400, 160);
    EXPECT_EQ(frontend_frame_count(l, c), fe);
    EXPECT_TRUE(mel - fe == 2 || mel - fe == 3) << l;
  }
  Waveform w;
  w.samples = oracle::gaussian(12345, 1);
  EXPECT_EQ(log_mel(w).frames(), oracle::enumerate_windows(12345, 400, 160));
}

TEST(Alignment, CentresLineUpWithinHalfASample) {
  FrontendConfig c = FrontendConfig::scattering();
  MelAlignment a = mel_alignment(c);
  EXPECT_EQ(a.frames, 1);
  EXPECT_EQ(a.samples, 40u);
  // front-end centre of frame m: 160 m + 199.5 + 199.5
  // oracle centre of frame m + frames on wave[samples:]: 160 (m + frames) + 199.5 + samples
  const double gap = (160.0 * a.frames + 199.5 + static_cast<double>(a.samples)) - 399.0;
  EXPECT_LE(std::abs(gap), 0.5);
  c.use_pre_emphasis = true;
  a = mel_alignment(c);
  EXPECT_EQ(a.frames, 1);
  EXPECT_EQ(a.samples, 41u);
}

TEST(Pearson, Basics) {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1}, k{5, 5, 5, 5};
  EXPECT_NEAR(pearson(a, b), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, c), -1.0, 1e-15);
  EXPECT_EQ(pearson(a, k), 0.0);
  EXPECT_THROW(pearson(a, std::vector<double>{1.0}), ContractViolation);
}

TEST(MelCorrelation, GaborInitTracksTheOracleOnOneUtterance) {
  const FrontendConfig c = FrontendConfig::scattering();
  const Waveform w = synth_toy_example(2, 3).wave;
  const auto corr = mel_channel_correlation(std::span(&w, 1), make_filter_params(c), c);
  ASSERT_EQ(corr.size(), 40u);
  double mean = 0.0;
  for (double r : corr) mean += r / 40.0;
  EXPECT_GT(mean, 0.9);
}
