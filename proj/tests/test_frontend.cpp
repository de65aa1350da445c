#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tdfb/errors.hpp"
#include "tdfb/filter_init.hpp"
#include "tdfb/frontend.hpp"
#include "tdfb/layers.hpp"

using namespace tdfb;

namespace {

Waveform noise(std::size_t n, std::uint64_t seed) {
  Waveform w;
  w.samples = oracle::gaussian(n, seed);
  return w;
}

// Frames by walking every stage's valid positions.
std::size_t enumerated_frames(std::size_t length, const FrontendConfig& c) {
  std::size_t l = length;
  if (c.use_pre_emphasis) l = oracle::enumerate_windows(l, 2, 1);
  l = oracle::enumerate_windows(l, c.conv_width, 1);
  return oracle::enumerate_windows(l, c.lowpass_width, c.hop);
}

std::vector<FrontendConfig> all_configs() {
  std::vector<FrontendConfig> out;
  for (InitScheme i : {InitScheme::scatt, InitScheme::rand}) {
    for (Lowpass l : {Lowpass::han_fixed, Lowpass::han_learnt}) {
      out.push_back(FrontendConfig::scattering(i, l));
    }
  }
  for (InitScheme i : {InitScheme::gamm, InitScheme::rand}) {
    for (Lowpass l : {Lowpass::han_fixed, Lowpass::max_pool}) {
      out.push_back(FrontendConfig::gammatone(i, l));
    }
  }
  return out;
}

}  // namespace

TEST(FrontendConfig, FactoriesFollowTheTwoArchitectures) {
  const FrontendConfig s = FrontendConfig::scattering();
  EXPECT_EQ(s.conv_rows(), 80u);
  EXPECT_EQ(s.log_offset, 1.0);
  EXPECT_TRUE(s.use_instance_norm);
  EXPECT_FALSE(s.use_pre_emphasis);
  const FrontendConfig g = FrontendConfig::gammatone();
  EXPECT_EQ(g.conv_rows(), 40u);
  EXPECT_EQ(g.log_offset, 0.01);
  EXPECT_EQ(s.describe(), "scattering/scatt/han-fixed/instance-norm");
}

TEST(FrontendConfig, RejectsMixedArchitectures) {
  EXPECT_THROW(FrontendConfig::scattering(InitScheme::scatt, Lowpass::max_pool).validate(),
               ContractViolation);
  EXPECT_THROW(FrontendConfig::scattering(InitScheme::gamm).validate(), ContractViolation);
  EXPECT_THROW(FrontendConfig::gammatone(InitScheme::gamm, Lowpass::han_learnt).validate(),
               ContractViolation);
  EXPECT_THROW(FrontendConfig::gammatone(InitScheme::scatt).validate(), ContractViolation);
  for (const FrontendConfig& c : all_configs()) EXPECT_NO_THROW(c.validate());
  FrontendConfig bad = FrontendConfig::gammatone();
  bad.log_offset = 0.0;
  EXPECT_THROW(bad.validate(), ContractViolation);
}

TEST(FilterParams, ShapesAndTrainability) {
  const FilterParams s = make_filter_params(FrontendConfig::scattering(InitScheme::scatt, Lowpass::han_learnt));
  EXPECT_EQ(s.conv.value.rows(), 80u);
  EXPECT_EQ(s.conv.value.cols(), 400u);
  EXPECT_TRUE(s.conv.trainable);
  ASSERT_TRUE(s.lowpass.has_value());
  EXPECT_TRUE(s.lowpass->trainable);
  EXPECT_FALSE(s.pre_emphasis.trainable);
  EXPECT_EQ(s.pre_emphasis.value, pre_emphasis_init());
  EXPECT_EQ(s.conv.value, init_gabor(mel_grid()).filters);

  FrontendConfig gc = FrontendConfig::gammatone(InitScheme::gamm, Lowpass::max_pool);
  gc.use_pre_emphasis = true;
  const FilterParams g = make_filter_params(gc);
  EXPECT_EQ(g.conv.value, init_gammatone(mel_grid()).filters);
  EXPECT_FALSE(g.lowpass.has_value());
  EXPECT_TRUE(g.pre_emphasis.trainable);

  const FilterParams fixed = make_filter_params(FrontendConfig::gammatone());
  ASSERT_TRUE(fixed.lowpass.has_value());
  EXPECT_FALSE(fixed.lowpass->trainable);
  EXPECT_EQ(fixed.lowpass->value, Matrix::row_vector(squared_hanning()));

  const auto r1 = make_filter_params(FrontendConfig::gammatone(InitScheme::rand), 4);
  const auto r2 = make_filter_params(FrontendConfig::gammatone(InitScheme::rand), 4);
  const auto r3 = make_filter_params(FrontendConfig::gammatone(InitScheme::rand), 5);
  EXPECT_EQ(r1.conv.value, r2.conv.value);
  EXPECT_NE(r1.conv.value, r3.conv.value);
}

TEST(FrameCount, OneSecondGivesNinetySixFrames) {
  EXPECT_EQ(frontend_frame_count(16000, FrontendConfig::scattering()), 96u);
  const FeatureMap f = frontend_forward(noise(16000, 1), make_filter_params(FrontendConfig::gammatone()),
                                        FrontendConfig::gammatone());
  EXPECT_EQ(f.channels(), 40u);
  EXPECT_EQ(f.frames(), 96u);
}

TEST(FrameCount, MatchesPositionEnumeration) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> len(1000, 64000);
  for (bool pre : {false, true}) {
    FrontendConfig c = FrontendConfig::gammatone();
    c.use_pre_emphasis = pre;
    for (int i = 0; i < 200; ++i) {
      const std::size_t l = len(rng);
      EXPECT_EQ(frontend_frame_count(l, c), enumerated_frames(l, c)) << l;
    }
  }
}

TEST(FrameCount, ForwardOutputAgreesWithFormula) {
  for (std::size_t l : {959u, 1119u, 1120u, 3333u}) {
    const FrontendConfig c = FrontendConfig::scattering(InitScheme::rand);
    const FeatureMap f = frontend_forward(noise(l, l), make_filter_params(c, 1), c);
    EXPECT_EQ(f.frames(), enumerated_frames(l, c));
  }
}

TEST(MinLength, ExactReceptiveField) {
  FrontendConfig c = FrontendConfig::gammatone();
  EXPECT_EQ(frontend_min_length(c), 959u);  // two frames for instance norm
  c.use_instance_norm = false;
  EXPECT_EQ(frontend_min_length(c), 799u);
  c.use_pre_emphasis = true;
  EXPECT_EQ(frontend_min_length(c), 800u);

  for (const FrontendConfig& cfg : all_configs()) {
    const FilterParams p = make_filter_params(cfg, 2);
    const std::size_t m = frontend_min_length(cfg);
    EXPECT_NO_THROW(frontend_forward(noise(m, 9), p, cfg));
    try {
      frontend_forward(noise(m - 1, 9), p, cfg);
      FAIL() << "expected InputTooShort for " << cfg.describe();
    } catch (const InputTooShort& e) {
      EXPECT_EQ(e.minimum(), m);
      EXPECT_EQ(e.length(), m - 1);
    }
  }
}

TEST(Frontend, DeterministicAndCacheIndependent) {
  for (const FrontendConfig& c : all_configs()) {
    const FilterParams p = make_filter_params(c, 7);
    const Waveform w = noise(4000, 8);
    const FeatureMap a = frontend_forward(w, p, c);
    FrontendCache cache;
    frontend_forward(noise(6000, 99), p, c, &cache);  // warm the cache on another input
    const FeatureMap b = frontend_forward(w, p, c, &cache);
    EXPECT_EQ(a.values, b.values) << c.describe();
    EXPECT_TRUE(a.values.all_finite());
  }
}

TEST(Frontend, InstanceNormalizedOutputs) {
  const FrontendConfig c = FrontendConfig::scattering();
  const FeatureMap f = frontend_forward(noise(8000, 4), make_filter_params(c), c);
  for (std::size_t ch = 0; ch < f.channels(); ++ch) {
    std::vector<double> row(f.values.row(ch).begin(), f.values.row(ch).end());
    EXPECT_NEAR(oracle::mean(row), 0.0, 1e-9);
    EXPECT_NEAR(oracle::population_variance(row), 1.0, 1e-5);
  }
}

TEST(Frontend, MatchesLayerByLayerComposition) {
  FrontendConfig c = FrontendConfig::gammatone(InitScheme::rand);
  c.use_pre_emphasis = true;
  const FilterParams p = make_filter_params(c, 3);
  const Waveform w = noise(3000, 5);
  auto x = normalize_sequence(w).samples;
  x = preemphasis_forward(x, p.pre_emphasis.value);
  Matrix y = relu(conv1d_forward(x, p.conv.value));
  y = log_compress(lowpass_window(y, p.lowpass->value, 160), 0.01);
  y = instance_norm(y);
  const FeatureMap f = frontend_forward(w, p, c);
  ASSERT_TRUE(f.values.same_shape(y));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(f.values[i], y[i], 1e-9);
}

TEST(Frontend, InvariantToInputGainAndOffset) {
  // Sequence normalization makes the features blind to affine input changes.
  const FrontendConfig c = FrontendConfig::scattering();
  const FilterParams p = make_filter_params(c);
  const Waveform w = noise(4000, 12);
  Waveform scaled = w;
  for (double& v : scaled.samples) v = 0.01 * v + 0.3;
  const FeatureMap a = frontend_forward(w, p, c), b = frontend_forward(scaled, p, c);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-6);
}

TEST(Frontend, ToneSweepMovesTheDominantChannelUpwards) {
  FrontendConfig c = FrontendConfig::scattering();
  c.use_instance_norm = false;  // keep cross-channel levels
  const FilterParams p = make_filter_params(c);
  std::size_t prev = 0;
  for (double f = 100.0; f <= 7000.0; f *= 1.15) {
    Waveform w;
    w.samples.resize(4000);
    for (std::size_t n = 0; n < w.samples.size(); ++n) {
      w.samples[n] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) / 16000.0);
    }
    const FeatureMap m = frontend_forward(w, p, c);
    std::size_t best = 0;
    for (std::size_t ch = 1; ch < 40; ++ch) {
      if (m.values(ch, 2) > m.values(best, 2)) best = ch;
    }
    EXPECT_GE(best, prev) << f << " Hz";
    prev = best;
  }
  EXPECT_GE(prev, 35u);
}

TEST(Frontend, RejectsMismatchedParams) {
  const FrontendConfig c = FrontendConfig::scattering();
  FilterParams p = make_filter_params(FrontendConfig::gammatone());
  EXPECT_THROW(frontend_forward(noise(2000, 1), p, c), ContractViolation);
  FrontendCache cache;
  FilterParams q = make_filter_params(c);
  EXPECT_THROW(frontend_backward(Matrix(40, 3), cache, q), ContractViolation);
  frontend_forward(noise(2000, 1), q, c, &cache);
  EXPECT_THROW(frontend_backward(Matrix(40, 3), cache, q), ContractViolation);
}

TEST(Frontend, BackwardTouchesOnlyTrainableParams) {
  const FrontendConfig c = FrontendConfig::gammatone(InitScheme::rand);
  FilterParams p = make_filter_params(c, 1);
  FrontendCache cache;
  const FeatureMap f = frontend_forward(noise(2000, 2), p, c, &cache);
  const auto gx = frontend_backward(oracle::gaussian_matrix(f.channels(), f.frames(), 3), cache, p);
  EXPECT_TRUE(gx.empty());
  EXPECT_GT(p.conv.grad.l2_norm(), 0.0);
  EXPECT_EQ(p.pre_emphasis.grad.l2_norm(), 0.0);
  EXPECT_EQ(p.lowpass->grad.l2_norm(), 0.0);
  p.zero_grad();
  EXPECT_EQ(p.conv.grad.l2_norm(), 0.0);
}
