#include "tdfb/frontend.hpp"

#include <string>

#include "standardize.hpp"
#include "tdfb/errors.hpp"
#include "tdfb/filter_init.hpp"

namespace tdfb {

std::string_view to_string(Variant v) {
  return v == Variant::scattering ? "scattering" : "gammatone";
}

std::string_view to_string(InitScheme i) {
  switch (i) {
    case InitScheme::gamm: return "gamm";
    case InitScheme::scatt: return "scatt";
    case InitScheme::rand: return "rand";
  }
  return "?";
}

std::string_view to_string(Lowpass l) {
  switch (l) {
    case Lowpass::han_fixed: return "han-fixed";
    case Lowpass::han_learnt: return "han-learnt";
    case Lowpass::max_pool: return "max-pool";
  }
  return "?";
}

FrontendConfig FrontendConfig::scattering(InitScheme init, Lowpass lowpass) {
  FrontendConfig c;
  c.variant = Variant::scattering;
  c.init = init;
  c.lowpass = lowpass;
  c.log_offset = 1.0;
  return c;
}

FrontendConfig FrontendConfig::gammatone(InitScheme init, Lowpass lowpass) {
  FrontendConfig c;
  c.variant = Variant::gammatone;
  c.init = init;
  c.lowpass = lowpass;
  c.log_offset = 0.01;
  return c;
}

void FrontendConfig::validate() const {
  if (variant == Variant::scattering) {
    if (lowpass == Lowpass::max_pool) {
      throw ContractViolation("scattering front-end uses a Hanning low-pass (han-fixed or han-learnt)");
    }
    if (init == InitScheme::gamm) {
      throw ContractViolation("scattering front-end is initialized with scatt or rand filters");
    }
  } else {
    if (lowpass == Lowpass::han_learnt) {
      throw ContractViolation("gammatone front-end uses han-fixed or max-pool low-pass");
    }
    if (init == InitScheme::scatt) {
      throw ContractViolation("gammatone front-end is initialized with gamm or rand filters");
    }
  }
  if (!(log_offset > 0.0)) throw ContractViolation("log_offset must be > 0");
  if (conv_width < 2 || lowpass_width < 2 || hop < 1 || n_channels < 1) {
    throw ContractViolation("front-end widths, hop and channel count must be positive");
  }
}

std::string FrontendConfig::describe() const {
  std::string s = std::string(to_string(variant)) + "/" + std::string(to_string(init)) + "/" +
                  std::string(to_string(lowpass));
  if (use_pre_emphasis) s += "/pre-emphasis";
  s += use_instance_norm ? "/instance-norm" : "/no-instance-norm";
  return s;
}

void FilterParams::zero_grad() {
  pre_emphasis.zero_grad();
  conv.zero_grad();
  if (lowpass) lowpass->zero_grad();
}

std::vector<std::pair<std::string, Param*>> FilterParams::named() {
  std::vector<std::pair<std::string, Param*>> out{{"pre_emphasis", &pre_emphasis},
                                                   {"conv", &conv}};
  if (lowpass) out.emplace_back("lowpass", &*lowpass);
  return out;
}

std::vector<std::pair<std::string, const Param*>> FilterParams::named() const {
  std::vector<std::pair<std::string, const Param*>> out{{"pre_emphasis", &pre_emphasis},
                                                         {"conv", &conv}};
  if (lowpass) out.emplace_back("lowpass", &*lowpass);
  return out;
}

FilterParams make_filter_params(const FrontendConfig& config, std::uint64_t seed) {
  config.validate();
  FilterParams p;
  p.pre_emphasis = Param(pre_emphasis_init(), config.use_pre_emphasis);
  const MelScaleGrid grid = mel_grid(config.n_channels);
  switch (config.init) {
    case InitScheme::gamm:
      p.conv = Param(init_gammatone(grid, config.conv_width).filters);
      break;
    case InitScheme::scatt:
      p.conv = Param(init_gabor(grid, config.conv_width).filters);
      break;
    case InitScheme::rand:
      p.conv = Param(init_random(config.conv_rows(), config.conv_width, seed).filters);
      break;
  }
  if (config.lowpass != Lowpass::max_pool) {
    p.lowpass = Param(Matrix::row_vector(squared_hanning(config.lowpass_width)),
                      config.lowpass == Lowpass::han_learnt);
  }
  return p;
}

std::size_t frontend_min_length(const FrontendConfig& config) {
  // conv output must hold one low-pass window, or two when instance norm
  // needs at least two frames.
  std::size_t conv_out = config.lowpass_width + (config.use_instance_norm ? config.hop : 0);
  return conv_out + config.conv_width - 1 + (config.use_pre_emphasis ? 1 : 0);
}

std::size_t frontend_frame_count(std::size_t length, const FrontendConfig& config) {
  if (length < frontend_min_length(config)) return 0;
  const std::size_t after_pre = length - (config.use_pre_emphasis ? 1 : 0);
  const std::size_t conv_out = after_pre - config.conv_width + 1;
  return window_count(conv_out, config.lowpass_width, config.hop);
}

namespace {

void check_params(const FilterParams& params, const FrontendConfig& config) {
  if (params.conv.value.rows() != config.conv_rows() ||
      params.conv.value.cols() != config.conv_width) {
    throw ContractViolation("conv filters " + params.conv.value.shape_string() +
                            " do not match config " + config.describe());
  }
  const bool needs_window = config.lowpass != Lowpass::max_pool;
  if (needs_window != params.lowpass.has_value()) {
    throw ContractViolation("lowpass weights presence does not match lowpass mode");
  }
  if (needs_window && (params.lowpass->value.rows() != 1 ||
                       params.lowpass->value.cols() != config.lowpass_width)) {
    throw ContractViolation("lowpass weights must be 1x" + std::to_string(config.lowpass_width));
  }
}

}  // namespace

FeatureMap frontend_forward(const Waveform& wave, const FilterParams& params,
                            const FrontendConfig& config, FrontendCache* cache) {
  config.validate();
  check_params(params, config);
  const std::size_t minimum = frontend_min_length(config);
  if (wave.samples.size() < minimum) {
    throw InputTooShort("frontend_forward (" + config.describe() + ")", wave.samples.size(),
                        minimum);
  }

  FrontendCache local;
  FrontendCache& c = cache != nullptr ? *cache : local;
  // Layer objects are reused across calls so the convolution keeps its
  // spectrum buffers.
  c.valid = false;
  c.config = config;
  c.input_length = wave.samples.size();
  c.window = LowpassWindow(config.hop);
  c.maxpool = MaxPool(config.lowpass_width, config.hop);
  c.log = LogCompress(config.log_offset);

  c.normalized.resize(wave.samples.size());
  c.normalize_inv_std = detail::standardize(wave.samples, c.normalized);

  std::vector<double> emphasized;
  std::span<const double> conv_in = c.normalized;
  if (config.use_pre_emphasis) {
    emphasized = c.pre_emphasis.forward(c.normalized, params.pre_emphasis.value);
    conv_in = emphasized;
  }

  Matrix x = c.conv.forward(conv_in, params.conv.value);
  x = config.variant == Variant::scattering ? c.modulus.forward(x) : c.rectifier.forward(x);
  x = config.lowpass == Lowpass::max_pool ? c.maxpool.forward(x)
                                          : c.window.forward(x, params.lowpass->value);
  x = c.log.forward(x);
  if (config.use_instance_norm) x = c.norm.forward(x);

  c.output_frames = x.cols();
  c.valid = true;
  return FeatureMap{std::move(x)};
}

std::vector<double> frontend_backward(const Matrix& grad_out, FrontendCache& cache,
                                      FilterParams& params, bool want_input_grad) {
  if (!cache.valid) throw ContractViolation("frontend_backward: cache holds no forward pass");
  const FrontendConfig& config = cache.config;
  check_params(params, config);
  if (grad_out.rows() != config.n_channels || grad_out.cols() != cache.output_frames) {
    throw ContractViolation("frontend_backward: gradient shape " + grad_out.shape_string() +
                            " does not match the cached output [" +
                            std::to_string(config.n_channels) + "x" +
                            std::to_string(cache.output_frames) + "]");
  }

  Matrix g = config.use_instance_norm ? cache.norm.backward(grad_out) : grad_out;
  g = cache.log.backward(g);
  if (config.lowpass == Lowpass::max_pool) {
    g = cache.maxpool.backward(g);
  } else {
    g = cache.window.backward(g, *params.lowpass);
  }
  g = config.variant == Variant::scattering ? cache.modulus.backward(g)
                                            : cache.rectifier.backward(g);

  const bool pre_needs_grad = config.use_pre_emphasis && params.pre_emphasis.trainable;
  const bool need_conv_input = want_input_grad || pre_needs_grad;
  std::vector<double> gx = cache.conv.backward(g, params.conv, need_conv_input);
  if (!need_conv_input) return {};

  if (config.use_pre_emphasis) gx = cache.pre_emphasis.backward(gx, params.pre_emphasis);
  if (!want_input_grad) return {};

  std::vector<double> grad_in(cache.input_length, 0.0);
  detail::standardize_backward(cache.normalized, gx, cache.normalize_inv_std, grad_in);
  return grad_in;
}

}  // namespace tdfb
