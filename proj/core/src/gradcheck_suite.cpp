#include "tdfb/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "tdfb/errors.hpp"
#include "tdfb/filter_init.hpp"
#include "tdfb/frontend.hpp"
#include "tdfb/gradcheck.hpp"
#include "tdfb/layers.hpp"
#include "tdfb/signal_io.hpp"
#include "tdfb/train_toy.hpp"

namespace tdfb {
namespace {

constexpr double kStep = 1e-4;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

double weighted_sum(const Matrix& out, const Matrix& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

std::vector<std::size_t> pick(std::size_t population, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, population));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> gather(const Matrix& m, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(m[i]);
  return out;
}

// A single-input layer: forward(x) and backward(grad_out) -> grad_x.
using LayerFwd = std::function<Matrix(const Matrix&)>;
using LayerBwd = std::function<Matrix(const Matrix& x, const Matrix& grad_out)>;

double check_input_grad(const Matrix& x, const LayerFwd& fwd, const LayerBwd& bwd,
                        std::mt19937_64& rng) {
  const Matrix probe = fwd(x);
  const Matrix weights = random_matrix(probe.rows(), probe.cols(), rng);
  const Matrix analytic = bwd(x, weights);
  const Matrix numeric =
      finite_diff_grad([&](const Matrix& m) { return weighted_sum(fwd(m), weights); }, x, kStep);
  return relative_grad_error(analytic, numeric);
}

GradCheckResult check_preemphasis(std::mt19937_64& rng) {
  const Matrix x = random_matrix(1, 50, rng);
  Param kernel(pre_emphasis_init());
  const Matrix weights = random_matrix(1, 49, rng);
  PreEmphasis layer;
  layer.forward(x.values(), kernel.value);
  const auto gx = layer.backward(weights.values(), kernel);
  const auto loss_x = [&](const Matrix& m) {
    return weighted_sum(Matrix::row_vector(preemphasis_forward(m.values(), kernel.value)), weights);
  };
  const auto loss_k = [&](const Matrix& k) {
    return weighted_sum(Matrix::row_vector(preemphasis_forward(x.values(), k)), weights);
  };
  const double ex = relative_grad_error(Matrix::row_vector(gx), finite_diff_grad(loss_x, x, kStep));
  const double ek = relative_grad_error(kernel.grad, finite_diff_grad(loss_k, kernel.value, kStep));
  return {"preemphasis", std::max(ex, ek), 1e-4};
}

GradCheckResult check_conv1d(std::mt19937_64& rng) {
  const Matrix x = random_matrix(1, 1000, rng);
  Param filters(random_matrix(4, kConvWidth, rng, -0.05, 0.05));
  Conv1d layer;
  const Matrix out = layer.forward(x.values(), filters.value);
  const Matrix weights = random_matrix(out.rows(), out.cols(), rng);
  const auto gx = layer.backward(weights, filters, true);
  const auto loss_x = [&](const Matrix& m) {
    return weighted_sum(conv1d_forward(m.values(), filters.value), weights);
  };
  const auto loss_f = [&](const Matrix& f) {
    return weighted_sum(conv1d_forward(x.values(), f), weights);
  };
  const double ex = relative_grad_error(Matrix::row_vector(gx), finite_diff_grad(loss_x, x, kStep));
  const double ef = relative_grad_error(filters.grad, finite_diff_grad(loss_f, filters.value, kStep));
  return {"conv1d", std::max(ex, ef), 1e-4};
}

GradCheckResult check_squared_l2_pool(std::mt19937_64& rng) {
  const Matrix x = random_matrix(6, 30, rng);
  const double e = check_input_grad(
      x, [](const Matrix& m) { return squared_l2_pool(m); },
      [](const Matrix& m, const Matrix& g) {
        SquaredL2Pool l;
        l.forward(m);
        return l.backward(g);
      },
      rng);
  return {"squared_l2_pool", e, 1e-4};
}

GradCheckResult check_relu(std::mt19937_64& rng) {
  Matrix x = random_matrix(5, 30, rng);
  for (double& v : x.values()) v = v >= 0.0 ? v + 1e-2 : v - 1e-2;
  const double e = check_input_grad(
      x, [](const Matrix& m) { return relu(m); },
      [](const Matrix& m, const Matrix& g) {
        Relu l;
        l.forward(m);
        return l.backward(g);
      },
      rng);
  return {"relu", e, 1e-4};
}

GradCheckResult check_lowpass_fixed(std::mt19937_64& rng) {
  const Matrix x = random_matrix(3, 1000, rng);
  const Matrix w = Matrix::row_vector(squared_hanning(400));
  const double e = check_input_grad(
      x, [&](const Matrix& m) { return lowpass_window(m, w, 160); },
      [&](const Matrix& m, const Matrix& g) {
        LowpassWindow l(160);
        Param fixed(w, false);
        l.forward(m, w);
        return l.backward(g, fixed);
      },
      rng);
  return {"lowpass_window_fixed", e, 1e-4};
}

GradCheckResult check_lowpass_learnt(std::mt19937_64& rng) {
  const Matrix x = random_matrix(3, 1000, rng);
  Param w(Matrix::row_vector(squared_hanning(400)), true);
  LowpassWindow layer(160);
  const Matrix out = layer.forward(x, w.value);
  const Matrix weights = random_matrix(out.rows(), out.cols(), rng);
  layer.backward(weights, w);
  const auto loss_w = [&](const Matrix& m) { return weighted_sum(lowpass_window(x, m, 160), weights); };
  const double e = relative_grad_error(w.grad, finite_diff_grad(loss_w, w.value, kStep));
  return {"lowpass_window_learnt", e, 1e-4};
}

GradCheckResult check_maxpool(std::mt19937_64& rng) {
  // Distinct levels 1e-2 apart so a +-h perturbation never changes an argmax.
  Matrix x(3, 1000);
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> jitter(0.0, 1e-3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1e-2 * static_cast<double>(perm[i]) + jitter(rng);
  const double e = check_input_grad(
      x, [](const Matrix& m) { return lowpass_maxpool(m, 400, 160); },
      [](const Matrix& m, const Matrix& g) {
        MaxPool l(400, 160);
        l.forward(m);
        return l.backward(g);
      },
      rng);
  return {"lowpass_maxpool", e, 1e-4};
}

GradCheckResult check_log(std::mt19937_64& rng, double offset, const char* name) {
  Matrix x = random_matrix(4, 30, rng, 0.1, 3.0);
  std::bernoulli_distribution coin(0.5);
  for (double& v : x.values()) {
    if (coin(rng)) v = -v;
  }
  const double e = check_input_grad(
      x, [offset](const Matrix& m) { return log_compress(m, offset); },
      [offset](const Matrix& m, const Matrix& g) {
        LogCompress l(offset);
        l.forward(m);
        return l.backward(g);
      },
      rng);
  return {name, e, 1e-4};
}

GradCheckResult check_instance_norm(std::mt19937_64& rng) {
  const Matrix x = random_matrix(4, 30, rng, -2.0, 3.0);
  const double e = check_input_grad(
      x, [](const Matrix& m) { return instance_norm(m); },
      [](const Matrix& m, const Matrix& g) {
        InstanceNorm l;
        l.forward(m);
        return l.backward(g);
      },
      rng);
  return {"instance_norm", e, 1e-4};
}

std::vector<double> conv_input(const Waveform& wave, const FilterParams& params,
                               const FrontendConfig& config) {
  std::vector<double> x = normalize_sequence(wave).samples;
  if (config.use_pre_emphasis) x = preemphasis_forward(x, params.pre_emphasis.value);
  return x;
}

// The gammatone loss is only piecewise smooth: a +-h step on a pre-emphasis
// tap or an input sample moves every ReLU input, and with ~50k of them some
// gate flips inside the stencil almost surely. Central differences are
// therefore taken on the smooth piece active at the probe point, with the
// ReLU gates frozen to their pattern there. Its derivative is exactly what
// backpropagation computes at a non-kink point.
Matrix gated_forward(const Waveform& wave, const FilterParams& params,
                     const FrontendConfig& config, const std::vector<char>& gates) {
  Matrix x = conv1d_forward(conv_input(wave, params, config), params.conv.value);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (gates[i] == 0) x[i] = 0.0;
  }
  x = config.lowpass == Lowpass::max_pool
          ? lowpass_maxpool(x, config.lowpass_width, config.hop)
          : lowpass_window(x, params.lowpass->value, config.hop);
  x = log_compress(x, config.log_offset);
  return config.use_instance_norm ? instance_norm(x) : x;
}

// Spot checks through the whole front-end.
GradCheckResult check_frontend(std::mt19937_64& rng, FrontendConfig config, const char* name) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Waveform wave;
  wave.samples.resize(1600);
  for (double& v : wave.samples) v = gauss(rng);

  FilterParams params = make_filter_params(config, rng());
  FrontendCache cache;
  const FeatureMap out = frontend_forward(wave, params, config, &cache);
  const Matrix weights = random_matrix(out.channels(), out.frames(), rng);
  const auto grad_in = frontend_backward(weights, cache, params, true);

  std::vector<char> gates;
  if (config.variant == Variant::gammatone) {
    const Matrix u = conv1d_forward(conv_input(wave, params, config), params.conv.value);
    gates.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) gates[i] = u[i] > 0.0 ? 1 : 0;
  }
  const auto evaluate = [&](const Waveform& w, const FilterParams& p) {
    const Matrix y = gates.empty() ? frontend_forward(w, p, config).values
                                   : gated_forward(w, p, config, gates);
    return weighted_sum(y, weights);
  };

  double worst = 0.0;
  const auto compare = [&](const Matrix& at, const Matrix& analytic,
                           const std::function<double(const Matrix&)>& loss, std::size_t count) {
    const auto idx = pick(at.size(), count, rng);
    const auto numeric = finite_diff_grad_at(loss, at, idx, kStep);
    worst = std::max(worst, relative_grad_error(gather(analytic, idx), numeric));
  };

  compare(params.conv.value, params.conv.grad,
          [&](const Matrix& m) {
            FilterParams p = params;
            p.conv.value = m;
            return evaluate(wave, p);
          },
          8);
  if (params.lowpass && params.lowpass->trainable) {
    compare(params.lowpass->value, params.lowpass->grad,
            [&](const Matrix& m) {
              FilterParams p = params;
              p.lowpass->value = m;
              return evaluate(wave, p);
            },
            16);
  }
  if (config.use_pre_emphasis) {
    compare(params.pre_emphasis.value, params.pre_emphasis.grad,
            [&](const Matrix& m) {
              FilterParams p = params;
              p.pre_emphasis.value = m;
              return evaluate(wave, p);
            },
            2);
  }
  const Matrix x = Matrix::row_vector(wave.samples);
  compare(x, Matrix::row_vector(grad_in),
          [&](const Matrix& m) {
            Waveform w;
            w.samples.assign(m.values().begin(), m.values().end());
            return evaluate(w, params);
          },
          8);
  return {name, worst, 1e-4};
}

GradCheckResult check_toy_head(std::mt19937_64& rng) {
  FrontendConfig config = FrontendConfig::gammatone(InitScheme::rand);
  ToyModel model = make_toy_model(config, rng());
  std::normal_distribution<double> gauss(0.0, 1.0);
  Waveform wave;
  wave.samples.resize(1600);
  for (double& v : wave.samples) v = gauss(rng);
  // Non-zero hidden bias so the relu gate pattern is not symmetric.
  for (double& v : model.hidden_b.value.values()) v = 0.1 * gauss(rng);
  const std::size_t label = 2;

  ModelCache cache;
  const Logits z = forward_model(model, wave, &cache);
  const CrossEntropy ce = cross_entropy(z, label);
  backward_model(model, cache, ce.grad);

  double worst = 0.0;
  for (Param* p : {&model.out_w, &model.out_b, &model.hidden_b, &model.hidden_w}) {
    const Matrix saved = p->value;
    const auto loss = [&](const Matrix& m) {
      p->value = m;
      const double l = cross_entropy(forward_model(model, wave), label).loss;
      p->value = saved;
      return l;
    };
    const auto idx = pick(p->value.size(), 24, rng);
    const auto numeric = finite_diff_grad_at(loss, saved, idx, kStep);
    worst = std::max(worst, relative_grad_error(gather(p->grad, idx), numeric));
  }
  return {"toy_head", worst, 1e-4};
}

using Check = std::function<GradCheckResult(std::mt19937_64&)>;

const std::vector<std::pair<std::string, Check>>& registry() {
  static const std::vector<std::pair<std::string, Check>> checks = [] {
    std::vector<std::pair<std::string, Check>> c;
    c.emplace_back("preemphasis", check_preemphasis);
    c.emplace_back("conv1d", check_conv1d);
    c.emplace_back("squared_l2_pool", check_squared_l2_pool);
    c.emplace_back("relu", check_relu);
    c.emplace_back("lowpass_window_fixed", check_lowpass_fixed);
    c.emplace_back("lowpass_window_learnt", check_lowpass_learnt);
    c.emplace_back("lowpass_maxpool", check_maxpool);
    c.emplace_back("log_compress_1", [](auto& r) { return check_log(r, 1.0, "log_compress_1"); });
    c.emplace_back("log_compress_0.01",
                   [](auto& r) { return check_log(r, 0.01, "log_compress_0.01"); });
    c.emplace_back("instance_norm", check_instance_norm);
    const auto fe = [&c](const char* name, FrontendConfig cfg) {
      c.emplace_back(name, [cfg, name](auto& r) { return check_frontend(r, cfg, name); });
    };
    fe("frontend_scattering_scatt_han_fixed",
       FrontendConfig::scattering(InitScheme::scatt, Lowpass::han_fixed));
    fe("frontend_scattering_scatt_han_learnt",
       FrontendConfig::scattering(InitScheme::scatt, Lowpass::han_learnt));
    fe("frontend_scattering_rand_han_fixed",
       FrontendConfig::scattering(InitScheme::rand, Lowpass::han_fixed));
    fe("frontend_scattering_rand_han_learnt",
       FrontendConfig::scattering(InitScheme::rand, Lowpass::han_learnt));
    fe("frontend_gammatone_gamm_han_fixed",
       FrontendConfig::gammatone(InitScheme::gamm, Lowpass::han_fixed));
    fe("frontend_gammatone_gamm_max_pool",
       FrontendConfig::gammatone(InitScheme::gamm, Lowpass::max_pool));
    fe("frontend_gammatone_rand_han_fixed",
       FrontendConfig::gammatone(InitScheme::rand, Lowpass::han_fixed));
    fe("frontend_gammatone_rand_max_pool",
       FrontendConfig::gammatone(InitScheme::rand, Lowpass::max_pool));
    FrontendConfig pre = FrontendConfig::gammatone(InitScheme::gamm, Lowpass::han_fixed);
    pre.use_pre_emphasis = true;
    fe("frontend_gammatone_pre_emphasis", pre);
    FrontendConfig pre_scatt = FrontendConfig::scattering();
    pre_scatt.use_pre_emphasis = true;
    fe("frontend_scattering_pre_emphasis", pre_scatt);
    FrontendConfig no_norm = FrontendConfig::gammatone(InitScheme::gamm, Lowpass::max_pool);
    no_norm.use_instance_norm = false;
    fe("frontend_gammatone_no_instance_norm", no_norm);
    c.emplace_back("toy_head", check_toy_head);
    return c;
  }();
  return checks;
}

}  // namespace

const std::vector<std::string>& gradcheck_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, check] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

GradCheckResult run_gradcheck(std::string_view name, std::uint64_t seed) {
  for (std::size_t i = 0; i < registry().size(); ++i) {
    const auto& [n, check] = registry()[i];
    if (n == name) {
      std::mt19937_64 rng(seed * 1000003ull + i);
      return check(rng);
    }
  }
  throw ContractViolation("unknown gradient check '" + std::string(name) + "'");
}

std::vector<GradCheckResult> run_all_gradchecks(std::uint64_t seed) {
  std::vector<GradCheckResult> out;
  for (const auto& name : gradcheck_names()) out.push_back(run_gradcheck(name, seed));
  return out;
}

}  // namespace tdfb
