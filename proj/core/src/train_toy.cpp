#include "tdfb/train_toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "tdfb/errors.hpp"

namespace tdfb {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Param uniform_param(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return Param(std::move(m));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

NamedParams ToyModel::named() {
  NamedParams out = frontend.named();
  out.emplace_back("hidden_w", &hidden_w);
  out.emplace_back("hidden_b", &hidden_b);
  out.emplace_back("out_w", &out_w);
  out.emplace_back("out_b", &out_b);
  return out;
}

void ToyModel::zero_grad() {
  for (auto& [name, p] : named()) p->zero_grad();
}

ToyModel make_toy_model(const FrontendConfig& config, std::uint64_t seed) {
  ToyModel model;
  model.config = config;
  model.frontend = make_filter_params(config, splitmix64(seed ^ 0xf11735ull));
  std::mt19937_64 rng(splitmix64(seed ^ 0x4eadull));
  const double c = static_cast<double>(config.n_channels);
  model.hidden_w = uniform_param(kHeadHidden, config.n_channels, 1.0 / std::sqrt(c), rng);
  model.hidden_b = Param(Matrix(kHeadHidden, 1));
  model.out_w = uniform_param(kToyClasses, kHeadHidden,
                              1.0 / std::sqrt(static_cast<double>(kHeadHidden)), rng);
  model.out_b = Param(Matrix(kToyClasses, 1));
  return model;
}

Logits forward_model(const ToyModel& model, const Waveform& wave, ModelCache* cache) {
  ModelCache local;
  ModelCache& c = cache != nullptr ? *cache : local;
  c.features = frontend_forward(wave, model.frontend, model.config,
                                cache != nullptr ? &c.frontend : nullptr)
                   .values;
  const Matrix& f = c.features;
  if (f.rows() != model.hidden_w.value.cols()) {
    throw ContractViolation("forward_model: head expects " +
                            std::to_string(model.hidden_w.value.cols()) + " channels");
  }
  const std::size_t frames = f.cols();
  c.hidden_pre = Matrix(kHeadHidden, frames);
  c.pooled.assign(kHeadHidden, 0.0);
  for (std::size_t j = 0; j < kHeadHidden; ++j) {
    auto h = c.hidden_pre.row(j);
    for (std::size_t t = 0; t < frames; ++t) h[t] = model.hidden_b.value[j];
    for (std::size_t ch = 0; ch < f.rows(); ++ch) {
      const double w = model.hidden_w.value(j, ch);
      auto x = f.row(ch);
      for (std::size_t t = 0; t < frames; ++t) h[t] += w * x[t];
    }
    double s = 0.0;
    for (std::size_t t = 0; t < frames; ++t) s += h[t] > 0.0 ? h[t] : 0.0;
    c.pooled[j] = s / static_cast<double>(frames);
  }
  Logits logits{};
  for (std::size_t k = 0; k < kToyClasses; ++k) {
    double z = model.out_b.value[k];
    for (std::size_t j = 0; j < kHeadHidden; ++j) z += model.out_w.value(k, j) * c.pooled[j];
    logits[k] = z;
  }
  return logits;
}

void backward_model(ToyModel& model, ModelCache& cache, std::span<const double> grad_logits) {
  if (grad_logits.size() != kToyClasses) {
    throw ContractViolation("backward_model: expected one gradient per class");
  }
  const Matrix& f = cache.features;
  const std::size_t frames = f.cols();
  std::vector<double> d_pooled(kHeadHidden, 0.0);
  for (std::size_t k = 0; k < kToyClasses; ++k) {
    if (model.out_b.trainable) model.out_b.grad[k] += grad_logits[k];
    for (std::size_t j = 0; j < kHeadHidden; ++j) {
      if (model.out_w.trainable) model.out_w.grad(k, j) += grad_logits[k] * cache.pooled[j];
      d_pooled[j] += grad_logits[k] * model.out_w.value(k, j);
    }
  }

  const bool frontend_trainable = std::ranges::any_of(
      model.frontend.named(), [](const auto& np) { return np.second->trainable; });
  Matrix d_features(f.rows(), frames);
  std::vector<double> dh(frames);
  for (std::size_t j = 0; j < kHeadHidden; ++j) {
    auto h = cache.hidden_pre.row(j);
    const double scale = d_pooled[j] / static_cast<double>(frames);
    double db = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      dh[t] = h[t] > 0.0 ? scale : 0.0;
      db += dh[t];
    }
    if (model.hidden_b.trainable) model.hidden_b.grad[j] += db;
    for (std::size_t ch = 0; ch < f.rows(); ++ch) {
      auto x = f.row(ch);
      double dw = 0.0;
      for (std::size_t t = 0; t < frames; ++t) dw += dh[t] * x[t];
      if (model.hidden_w.trainable) model.hidden_w.grad(j, ch) += dw;
      if (frontend_trainable) {
        const double w = model.hidden_w.value(j, ch);
        auto d = d_features.row(ch);
        for (std::size_t t = 0; t < frames; ++t) d[t] += w * dh[t];
      }
    }
  }
  if (frontend_trainable) frontend_backward(d_features, cache.frontend, model.frontend);
}

CrossEntropy cross_entropy(std::span<const double> logits, std::size_t label) {
  if (logits.size() != kToyClasses) throw ContractViolation("cross_entropy: expected 4 logits");
  if (label >= kToyClasses) {
    throw ContractViolation("cross_entropy: label " + std::to_string(label) + " out of range");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - peak);
  CrossEntropy out;
  out.loss = -(logits[label] - peak - std::log(denom));
  for (std::size_t k = 0; k < kToyClasses; ++k) {
    out.grad[k] = std::exp(logits[k] - peak) / denom - (k == label ? 1.0 : 0.0);
  }
  return out;
}

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum)
    : lr_(learning_rate), momentum_(momentum) {
  if (!(learning_rate > 0.0)) throw ContractViolation("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractViolation("momentum must be in [0, 1)");
}

void SgdOptimizer::step(const NamedParams& params) {
  for (const auto& [name, p] : params) {
    if (p->trainable && !p->grad.all_finite()) throw DivergenceError(name);
  }
  for (const auto& [name, p] : params) {
    if (p->trainable) {
      auto [it, inserted] = velocity_.try_emplace(name, p->value.rows(), p->value.cols());
      Matrix& v = it->second;
      require_same_shape(v, p->value, "sgd velocity");
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = momentum_ * v[i] + p->grad[i];
        p->value[i] -= lr_ * v[i];
      }
    }
    p->zero_grad();
  }
}

std::optional<std::size_t> TrainReport::epochs_to(double threshold) const {
  for (const EpochRecord& e : epochs) {
    if (e.heldout_acc >= threshold) return e.epoch;
  }
  return std::nullopt;
}

std::uint64_t toy_example_seed(std::uint64_t run_seed, std::uint32_t split, std::size_t index) {
  return splitmix64(splitmix64(run_seed) ^ splitmix64((std::uint64_t{split} << 40) ^ index));
}

std::vector<ToyExample> make_toy_set(std::uint64_t run_seed, std::uint32_t split, std::size_t n) {
  std::vector<ToyExample> set;
  set.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    set.push_back(synth_toy_example(i % kToyClasses, toy_example_seed(run_seed, split, i)));
  }
  return set;
}

double evaluate(const ToyModel& model, std::span<const ToyExample> set) {
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (const ToyExample& ex : set) {
    const Logits z = forward_model(model, ex.wave);
    const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    correct += pred == ex.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

TrainReport train_model(ToyModel& model, const TrainConfig& config) {
  TrainReport report;
  report.config = model.config.describe();
  report.seed = config.seed;

  const auto train_set = make_toy_set(config.seed, 0, config.train_size);
  const auto heldout_set = make_toy_set(config.seed, 1, config.heldout_size);
  SgdOptimizer opt(config.learning_rate, config.momentum);
  std::mt19937_64 shuffle_rng(splitmix64(config.seed ^ 0x5a0ffull));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  model.zero_grad();
  ModelCache cache;
  const NamedParams params = model.named();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    try {
      for (std::size_t idx : order) {
        const ToyExample& ex = train_set[idx];
        const Logits z = forward_model(model, ex.wave, &cache);
        const CrossEntropy ce = cross_entropy(z, ex.label);
        if (!std::isfinite(ce.loss)) throw NumericalFailure("non-finite training loss");
        loss_sum += ce.loss;
        const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
        correct += pred == ex.label ? 1 : 0;
        backward_model(model, cache, ce.grad);
        opt.step(params);
      }
    } catch (const NumericalFailure& e) {
      report.diverged = true;
      report.failure = "epoch " + std::to_string(epoch) + ": " + e.what();
      model.zero_grad();
      break;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(train_set.size(), 1));
    rec.train_acc = static_cast<double>(correct) /
                    static_cast<double>(std::max<std::size_t>(train_set.size(), 1));
    rec.heldout_acc = evaluate(model, heldout_set);
    report.epochs.push_back(rec);
    report.last_finite_epoch = epoch;
  }
  return report;
}

TrainReport train(const TrainConfig& config, ToyModel* final_model) {
  ToyModel model = make_toy_model(config.frontend, config.seed);
  TrainReport report = train_model(model, config);
  if (final_model != nullptr) *final_model = std::move(model);
  return report;
}

std::string_view to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::instance_norm: return "instance-norm";
    case AblationAxis::lowpass: return "lowpass";
    case AblationAxis::init: return "init";
    case AblationAxis::pre_emphasis: return "pre-emphasis";
  }
  return "?";
}

std::pair<FrontendConfig, FrontendConfig> ablation_pair(AblationAxis axis,
                                                        const FrontendConfig& base) {
  FrontendConfig a = base, b = base;
  const bool scattering = base.variant == Variant::scattering;
  switch (axis) {
    case AblationAxis::instance_norm:
      a.use_instance_norm = true;
      b.use_instance_norm = false;
      break;
    case AblationAxis::lowpass:
      a.lowpass = Lowpass::han_fixed;
      b.lowpass = scattering ? Lowpass::han_learnt : Lowpass::max_pool;
      break;
    case AblationAxis::init:
      a.init = scattering ? InitScheme::scatt : InitScheme::gamm;
      b.init = InitScheme::rand;
      break;
    case AblationAxis::pre_emphasis:
      a.use_pre_emphasis = false;
      b.use_pre_emphasis = true;
      break;
  }
  a.validate();
  b.validate();
  return {a, b};
}

namespace {

void summarize(AblationSide& side, std::size_t epochs) {
  double acc = 0.0, e90 = 0.0;
  for (const TrainReport& r : side.reports) {
    acc += r.final_heldout_acc();
    e90 += static_cast<double>(r.epochs_to(0.9).value_or(epochs + 1));
    side.diverged_runs += r.diverged ? 1 : 0;
  }
  const double n = static_cast<double>(std::max<std::size_t>(side.reports.size(), 1));
  side.mean_final_acc = acc / n;
  side.mean_epochs_to_90 = e90 / n;
}

}  // namespace

AblationResult ablation_run(AblationAxis axis, const TrainConfig& base,
                            std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 3) throw ContractViolation("ablation_run: need at least 3 seeds");
  AblationResult result;
  result.axis = axis;
  auto [ca, cb] = ablation_pair(axis, base.frontend);
  result.a.config = ca;
  result.b.config = cb;
  result.a.label = ca.describe();
  result.b.label = cb.describe();
  for (std::uint64_t seed : seeds) {
    TrainConfig ta = base, tb = base;
    ta.frontend = ca;
    tb.frontend = cb;
    ta.seed = tb.seed = seed;
    result.a.reports.push_back(train(ta));
    result.b.reports.push_back(train(tb));
  }
  summarize(result.a, base.epochs);
  summarize(result.b, base.epochs);
  return result;
}

std::string report_csv(const TrainReport& report) {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,heldout_acc\n";
  for (const EpochRecord& e : report.epochs) {
    out << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.train_acc) << ','
        << fmt(e.heldout_acc) << '\n';
  }
  return out.str();
}

std::string report_summary(const TrainReport& report) {
  std::ostringstream out;
  out << "config=" << report.config << '\n'
      << "seed=" << report.seed << '\n'
      << "status=" << (report.diverged ? "diverged" : "ok") << '\n'
      << "epochs=" << report.epochs.size() << '\n'
      << "last_finite_epoch=" << report.last_finite_epoch << '\n'
      << "final_heldout_acc=" << fmt(report.final_heldout_acc()) << '\n';
  const auto e90 = report.epochs_to(0.9);
  out << "epochs_to_90=" << (e90 ? std::to_string(*e90) : std::string("never")) << '\n';
  if (!report.failure.empty()) out << "failure=" << report.failure << '\n';
  return out.str();
}

std::string ablation_summary(const AblationResult& result) {
  std::ostringstream out;
  out << "axis=" << to_string(result.axis) << '\n';
  for (const auto* side : {&result.a, &result.b}) {
    const char* key = side == &result.a ? "a" : "b";
    out << key << ".config=" << side->label << '\n'
        << key << ".runs=" << side->reports.size() << '\n'
        << key << ".mean_final_heldout_acc=" << fmt(side->mean_final_acc) << '\n'
        << key << ".mean_epochs_to_90=" << fmt(side->mean_epochs_to_90) << '\n'
        << key << ".diverged_runs=" << side->diverged_runs << '\n';
  }
  return out.str();
}

}  // namespace tdfb
