#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdfb/frontend.hpp"
#include "tdfb/signal_io.hpp"
#include "tdfb/tensor.hpp"

namespace tdfb {

inline constexpr std::size_t kHeadHidden = 32;

using Logits = std::array<double, kToyClasses>;
using NamedParams = std::vector<std::pair<std::string, Param*>>;

/// Front-end followed by a small frame-wise classifier:
///   hidden[j][t] = relu(sum_c hidden_w[j][c] feat[c][t] + hidden_b[j])
///   pooled[j]    = mean_t hidden[j][t]
///   logits[k]    = sum_j out_w[k][j] pooled[j] + out_b[k]
/// The frame-wise non-linearity comes before time pooling because
/// instance-normalized channels have zero mean over time.
struct ToyModel {
  FrontendConfig config;
  FilterParams frontend;
  Param hidden_w;  // [kHeadHidden x 40]
  Param hidden_b;  // [kHeadHidden x 1]
  Param out_w;     // [4 x kHeadHidden]
  Param out_b;     // [4 x 1]

  NamedParams named();
  void zero_grad();
};

ToyModel make_toy_model(const FrontendConfig& config, std::uint64_t seed);

struct ModelCache {
  FrontendCache frontend;
  Matrix features;
  Matrix hidden_pre;
  std::vector<double> pooled;
};

/// Logits for one utterance. Fills `cache` for backward_model when given.
Logits forward_model(const ToyModel& model, const Waveform& wave, ModelCache* cache = nullptr);

/// Accumulates gradients of the loss into every trainable parameter.
void backward_model(ToyModel& model, ModelCache& cache, std::span<const double> grad_logits);

struct CrossEntropy {
  double loss = 0.0;
  Logits grad{};
};

/// -log softmax(logits)[label] with max subtraction; grad = softmax - onehot.
CrossEntropy cross_entropy(std::span<const double> logits, std::size_t label);

/// Plain SGD with heavy-ball momentum: v <- momentum v + g; p <- p - lr v.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum);

  /// Applies one update to every trainable entry of `params`, then zeroes all
  /// gradients. Throws DivergenceError (naming the parameter) before touching
  /// anything if a gradient is non-finite.
  void step(const NamedParams& params);

  double learning_rate() const { return lr_; }
  double momentum() const { return momentum_; }
  const std::map<std::string, Matrix>& velocities() const { return velocity_; }

 private:
  double lr_;
  double momentum_;
  std::map<std::string, Matrix> velocity_;
};

struct TrainConfig {
  FrontendConfig frontend;
  std::uint64_t seed = 1;
  std::size_t epochs = 30;
  std::size_t train_size = 400;
  std::size_t heldout_size = 200;
  double learning_rate = 0.005;
  double momentum = 0.9;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double heldout_acc = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::string config;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::size_t last_finite_epoch = 0;
  std::string failure;

  double final_heldout_acc() const { return epochs.empty() ? 0.0 : epochs.back().heldout_acc; }
  /// First 1-based epoch with held-out accuracy >= threshold.
  std::optional<std::size_t> epochs_to(double threshold) const;

  bool operator==(const TrainReport&) const = default;
};

/// Seed used for example `index` of a split (0 = train, 1 = held-out).
std::uint64_t toy_example_seed(std::uint64_t run_seed, std::uint32_t split, std::size_t index);
std::vector<ToyExample> make_toy_set(std::uint64_t run_seed, std::uint32_t split, std::size_t n);

/// Classification accuracy of `model` on `set`.
double evaluate(const ToyModel& model, std::span<const ToyExample> set);

/// Trains an existing model in place with per-example SGD.
TrainReport train_model(ToyModel& model, const TrainConfig& config);

/// Builds the model from config.frontend and config.seed, then trains it.
TrainReport train(const TrainConfig& config, ToyModel* final_model = nullptr);

enum class AblationAxis { instance_norm, lowpass, init, pre_emphasis };

std::string_view to_string(AblationAxis axis);

struct AblationSide {
  std::string label;
  FrontendConfig config;
  std::vector<TrainReport> reports;
  double mean_final_acc = 0.0;
  // Runs that never reach the threshold count as epochs + 1.
  double mean_epochs_to_90 = 0.0;
  std::size_t diverged_runs = 0;
};

struct AblationResult {
  AblationAxis axis = AblationAxis::instance_norm;
  AblationSide a;  // base configuration's setting of the axis
  AblationSide b;  // the alternative
};

/// The pair of configurations compared along `axis`, starting from `base`.
/// instance_norm: on / off. lowpass: han-fixed / max-pool (gammatone) or
/// han-learnt (scattering). init: gamm or scatt / rand. pre_emphasis: off / on.
std::pair<FrontendConfig, FrontendConfig> ablation_pair(AblationAxis axis,
                                                        const FrontendConfig& base);

/// Trains matched pairs differing only along `axis`, one pair per seed.
AblationResult ablation_run(AblationAxis axis, const TrainConfig& base,
                            std::span<const std::uint64_t> seeds);

/// "epoch,train_loss,train_acc,heldout_acc" followed by one line per epoch.
std::string report_csv(const TrainReport& report);
/// key=value lines.
std::string report_summary(const TrainReport& report);
std::string ablation_summary(const AblationResult& result);

}  // namespace tdfb
