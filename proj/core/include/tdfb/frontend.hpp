#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdfb/layers.hpp"
#include "tdfb/signal_io.hpp"
#include "tdfb/tensor.hpp"

namespace tdfb {

enum class Variant { scattering, gammatone };
enum class InitScheme { gamm, scatt, rand };
enum class Lowpass { han_fixed, han_learnt, max_pool };

std::string_view to_string(Variant v);
std::string_view to_string(InitScheme i);
std::string_view to_string(Lowpass l);

/// Selects one of the trainable filterbank architectures.
///
/// scattering: 80 real filters (40 complex pairs) -> squared L2 pooling ->
///   squared-Hanning low-pass (fixed or learnt) -> log(1 + |x|).
/// gammatone: 40 real filters -> ReLU -> squared-Hanning or max-pool ->
///   log(0.01 + |x|).
/// Both optionally end with per-channel instance normalization and may start
/// with a learnable two-tap pre-emphasis.
struct FrontendConfig {
  Variant variant = Variant::scattering;
  InitScheme init = InitScheme::scatt;
  Lowpass lowpass = Lowpass::han_fixed;
  double log_offset = 1.0;
  bool use_pre_emphasis = false;
  bool use_instance_norm = true;
  std::size_t conv_width = 400;
  std::size_t lowpass_width = 400;
  std::size_t hop = 160;
  std::size_t n_channels = 40;

  static FrontendConfig scattering(InitScheme init = InitScheme::scatt,
                                   Lowpass lowpass = Lowpass::han_fixed);
  static FrontendConfig gammatone(InitScheme init = InitScheme::gamm,
                                  Lowpass lowpass = Lowpass::han_fixed);

  std::size_t conv_rows() const {
    return variant == Variant::scattering ? 2 * n_channels : n_channels;
  }
  /// Throws ContractViolation for combinations outside the two architectures.
  void validate() const;
  std::string describe() const;
};

/// Parameters of one front-end. The pre-emphasis kernel always exists and is
/// trainable iff the layer is enabled; `lowpass` is absent for max-pooling and
/// trainable only for han_learnt.
struct FilterParams {
  Param pre_emphasis;
  Param conv;
  std::optional<Param> lowpass;

  void zero_grad();
  std::vector<std::pair<std::string, Param*>> named();
  std::vector<std::pair<std::string, const Param*>> named() const;
};

/// Builds initial parameters for `config`. `seed` only matters for rand init.
FilterParams make_filter_params(const FrontendConfig& config, std::uint64_t seed = 0);

struct FeatureMap {
  Matrix values;
  std::size_t channels() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
};

/// Everything frontend_backward needs from the matching forward call.
struct FrontendCache {
  FrontendConfig config;
  std::size_t input_length = 0;
  std::vector<double> normalized;
  double normalize_inv_std = 0.0;
  PreEmphasis pre_emphasis;
  Conv1d conv;
  SquaredL2Pool modulus;
  Relu rectifier;
  LowpassWindow window{160};
  MaxPool maxpool;
  LogCompress log{1.0};
  InstanceNorm norm;
  std::size_t output_frames = 0;
  bool valid = false;
};

/// Shortest waveform accepted by frontend_forward for this configuration.
std::size_t frontend_min_length(const FrontendConfig& config);

/// Output frame count for an input of `length` samples (0 if too short).
std::size_t frontend_frame_count(std::size_t length, const FrontendConfig& config);

/// Runs the full pipeline: sequence normalization, optional pre-emphasis,
/// convolution, non-linearity, low-pass/decimation, log compression and
/// optional instance normalization. Fills `cache` when given.
FeatureMap frontend_forward(const Waveform& wave, const FilterParams& params,
                            const FrontendConfig& config, FrontendCache* cache = nullptr);

/// Backpropagates `grad_out` through the cached pipeline, accumulating into
/// the trainable members of `params`. Returns the gradient with respect to
/// the raw input samples when `want_input_grad`, otherwise an empty vector.
std::vector<double> frontend_backward(const Matrix& grad_out, FrontendCache& cache,
                                      FilterParams& params, bool want_input_grad = false);

}  // namespace tdfb
