#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "tdfb/errors.hpp"
#include "tdfb/gradcheck.hpp"
#include "tdfb/train_toy.hpp"

using namespace tdfb;

namespace {

TrainConfig tiny(const FrontendConfig& frontend, std::uint64_t seed = 1) {
  TrainConfig t;
  t.frontend = frontend;
  t.seed = seed;
  t.epochs = 2;
  t.train_size = 8;
  t.heldout_size = 8;
  return t;
}

double model_loss(const ToyModel& model, const Waveform& wave, std::size_t label) {
  return cross_entropy(forward_model(model, wave), label).loss;
}

}  // namespace

TEST(CrossEntropy, MatchesNaiveSoftmax) {
  const std::vector<double> z{0.3, -1.2, 2.0, 0.7};
  long double denom = 0.0L;
  for (double v : z) denom += std::exp(static_cast<long double>(v));
  for (std::size_t label = 0; label < 4; ++label) {
    const CrossEntropy ce = cross_entropy(z, label);
    EXPECT_NEAR(ce.loss, static_cast<double>(-std::log(std::exp(static_cast<long double>(z[label])) / denom)), 1e-14);
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double p = static_cast<double>(std::exp(static_cast<long double>(z[k])) / denom);
      EXPECT_NEAR(ce.grad[k], p - (k == label ? 1.0 : 0.0), 1e-14);
      sum += ce.grad[k];
    }
    EXPECT_NEAR(sum, 0.0, 1e-15);
  }
}

TEST(CrossEntropy, StableForLargeLogitsAndChecksArguments) {
  const std::vector<double> z{1000.0, 0.0, 0.0, 0.0};
  const CrossEntropy ce = cross_entropy(z, 0);
  EXPECT_TRUE(std::isfinite(ce.loss));
  EXPECT_NEAR(ce.loss, 0.0, 1e-12);
  EXPECT_NEAR(cross_entropy(z, 1).loss, 1000.0, 1e-9);
  EXPECT_THROW(cross_entropy(z, 4), ContractViolation);
  EXPECT_THROW(cross_entropy(std::vector<double>{1.0, 2.0}, 0), ContractViolation);
}

TEST(Sgd, PlainAndMomentumUpdates) {
  Param p(Matrix::from_rows({{1.0, -2.0}}));
  NamedParams named{{"p", &p}};
  SgdOptimizer plain(0.5, 0.0);
  p.grad = Matrix::from_rows({{2.0, 4.0}});
  plain.step(named);
  EXPECT_EQ(p.value, Matrix::from_rows({{0.0, -4.0}}));
  EXPECT_EQ(p.grad, Matrix(1, 2));

  Param q(Matrix::from_rows({{0.0}}));
  NamedParams nq{{"q", &q}};
  SgdOptimizer heavy(0.1, 0.9);
  // v1 = 1, q = -0.1; v2 = 0.9 + 1 = 1.9, q = -0.29; v3 = 2.71, q = -0.561
  const double expected[] = {-0.1, -0.29, -0.561};
  for (double e : expected) {
    q.grad[0] = 1.0;
    heavy.step(nq);
    EXPECT_NEAR(q.value[0], e, 1e-15);
  }
  EXPECT_NEAR(heavy.velocities().at("q")[0], 2.71, 1e-15);
}

TEST(Sgd, FrozenParamsStillGetZeroedButNotMoved) {
  Param p(Matrix(1, 1, 3.0), false);
  p.grad[0] = 5.0;
  SgdOptimizer opt(0.1, 0.0);
  opt.step({{"p", &p}});
  EXPECT_EQ(p.value[0], 3.0);
  EXPECT_EQ(p.grad[0], 0.0);
  EXPECT_TRUE(opt.velocities().empty());
}

TEST(Sgd, NonFiniteGradientThrowsBeforeAnyUpdate) {
  Param a(Matrix(1, 1, 1.0)), b(Matrix(1, 1, 2.0));
  a.grad[0] = 1.0;
  b.grad[0] = std::nan("");
  SgdOptimizer opt(0.1, 0.0);
  try {
    opt.step({{"a", &a}, {"b", &b}});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.param(), "b");
  }
  EXPECT_EQ(a.value[0], 1.0);
  EXPECT_EQ(b.value[0], 2.0);
}

TEST(Sgd, RejectsBadHyperparameters) {
  EXPECT_THROW(SgdOptimizer(0.0, 0.5), ContractViolation);
  EXPECT_THROW(SgdOptimizer(-1.0, 0.5), ContractViolation);
  EXPECT_THROW(SgdOptimizer(0.1, 1.0), ContractViolation);
  EXPECT_THROW(SgdOptimizer(0.1, -0.1), ContractViolation);
  EXPECT_THROW(SgdOptimizer(std::nan(""), 0.0), ContractViolation);
}

TEST(ToyModelTest, ShapesAndSeeding) {
  const ToyModel m = make_toy_model(FrontendConfig::scattering(), 3);
  EXPECT_EQ(m.hidden_w.value.rows(), kHeadHidden);
  EXPECT_EQ(m.hidden_w.value.cols(), 40u);
  EXPECT_EQ(m.out_w.value.rows(), 4u);
  EXPECT_EQ(m.out_w.value.cols(), kHeadHidden);
  EXPECT_EQ(m.out_b.value.rows(), 4u);
  EXPECT_EQ(make_toy_model(FrontendConfig::scattering(), 3).hidden_w.value, m.hidden_w.value);
  EXPECT_NE(make_toy_model(FrontendConfig::scattering(), 4).hidden_w.value, m.hidden_w.value);
  ToyModel copy = m;
  EXPECT_EQ(copy.named().size(), 7u);  // pre_emphasis, conv, lowpass + head
}

TEST(ToyModelTest, BackwardMatchesFiniteDifferences) {
  FrontendConfig config = FrontendConfig::scattering(InitScheme::scatt, Lowpass::han_learnt);
  ToyModel model = make_toy_model(config, 5);
  Waveform wave;
  wave.samples = oracle::gaussian(2000, 11);
  const std::size_t label = 2;

  model.zero_grad();
  ModelCache cache;
  const CrossEntropy ce = cross_entropy(forward_model(model, wave, &cache), label);
  backward_model(model, cache, ce.grad);

  for (auto& [name, p] : model.named()) {
    if (!p->trainable) continue;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p->value.size(); i += std::max<std::size_t>(1, p->value.size() / 6)) {
      idx.push_back(i);
    }
    Param* target = p;
    const ScalarFn f = [&](const Matrix& v) {
      ToyModel probe = model;
      for (auto& [n2, q] : probe.named()) {
        if (n2 == name) q->value = v;
      }
      (void)target;
      return model_loss(probe, wave, label);
    };
    const auto numeric = finite_diff_grad_at(f, p->value, idx, 1e-5);
    std::vector<double> analytic;
    for (std::size_t i : idx) analytic.push_back(p->grad[i]);
    EXPECT_LT(relative_grad_error(analytic, numeric), 1e-4) << name;
  }
}

TEST(ToySet, LabelsCycleAndSeedsDiffer) {
  const auto set = make_toy_set(7, 0, 9);
  ASSERT_EQ(set.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(set[i].label, i % 4);
  EXPECT_NE(toy_example_seed(7, 0, 0), toy_example_seed(7, 1, 0));
  EXPECT_NE(toy_example_seed(7, 0, 0), toy_example_seed(8, 0, 0));
  EXPECT_EQ(make_toy_set(7, 0, 2)[1].wave.samples, set[1].wave.samples);
}

TEST(Training, TinyRunIsDeterministic) {
  const TrainConfig t = tiny(FrontendConfig::gammatone(InitScheme::rand));
  ToyModel m1, m2;
  const TrainReport a = train(t, &m1);
  const TrainReport b = train(t, &m2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(m1.frontend.conv.value, m2.frontend.conv.value);
  EXPECT_FALSE(a.diverged);
  ASSERT_EQ(a.epochs.size(), 2u);
  EXPECT_EQ(a.last_finite_epoch, 2u);
  EXPECT_EQ(a.config, "gammatone/rand/han-fixed/instance-norm");
  for (const auto& e : a.epochs) {
    EXPECT_TRUE(std::isfinite(e.train_loss));
    EXPECT_GE(e.heldout_acc, 0.0);
    EXPECT_LE(e.heldout_acc, 1.0);
  }
  EXPECT_NE(m1.frontend.conv.value, make_toy_model(t.frontend, t.seed).frontend.conv.value);
}

TEST(Training, HugeLearningRateIsReportedAsDivergence) {
  TrainConfig t = tiny(FrontendConfig::gammatone(InitScheme::rand));
  t.learning_rate = 1e12;
  const TrainReport r = train(t);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.failure.empty());
  EXPECT_EQ(r.last_finite_epoch, r.epochs.size());
  EXPECT_NE(report_summary(r).find("status=diverged"), std::string::npos);
}

TEST(Report, EpochsToAndFormats) {
  TrainReport r;
  r.config = "c";
  r.seed = 4;
  r.epochs = {{1, 1.5, 0.25, 0.5}, {2, 0.5, 0.75, 0.95}, {3, 0.25, 1.0, 0.9}};
  r.last_finite_epoch = 3;
  EXPECT_EQ(r.epochs_to(0.9), 2u);
  EXPECT_EQ(r.epochs_to(0.5), 1u);
  EXPECT_FALSE(r.epochs_to(0.99).has_value());
  EXPECT_EQ(r.final_heldout_acc(), 0.9);
  EXPECT_EQ(report_csv(r),
            "epoch,train_loss,train_acc,heldout_acc\n1,1.5,0.25,0.5\n2,0.5,0.75,0.95\n"
            "3,0.25,1,0.9\n");
  EXPECT_EQ(report_summary(r),
            "config=c\nseed=4\nstatus=ok\nepochs=3\nlast_finite_epoch=3\n"
            "final_heldout_acc=0.9\nepochs_to_90=2\n");
}

TEST(Ablation, PairsDifferOnlyAlongTheAxis) {
  const auto g = FrontendConfig::gammatone();
  auto [a, b] = ablation_pair(AblationAxis::instance_norm, g);
  EXPECT_TRUE(a.use_instance_norm);
  EXPECT_FALSE(b.use_instance_norm);
  std::tie(a, b) = ablation_pair(AblationAxis::lowpass, g);
  EXPECT_EQ(b.lowpass, Lowpass::max_pool);
  std::tie(a, b) = ablation_pair(AblationAxis::lowpass, FrontendConfig::scattering());
  EXPECT_EQ(b.lowpass, Lowpass::han_learnt);
  std::tie(a, b) = ablation_pair(AblationAxis::init, FrontendConfig::scattering());
  EXPECT_EQ(a.init, InitScheme::scatt);
  EXPECT_EQ(b.init, InitScheme::rand);
  std::tie(a, b) = ablation_pair(AblationAxis::pre_emphasis, g);
  EXPECT_FALSE(a.use_pre_emphasis);
  EXPECT_TRUE(b.use_pre_emphasis);
  EXPECT_EQ(a.describe(), g.describe());
  EXPECT_EQ(to_string(AblationAxis::pre_emphasis), "pre-emphasis");
}

TEST(Ablation, NeedsThreeSeedsAndSummarizes) {
  const std::vector<std::uint64_t> two{1, 2};
  EXPECT_THROW(ablation_run(AblationAxis::init, tiny(FrontendConfig::gammatone()), two),
               ContractViolation);
  TrainConfig t = tiny(FrontendConfig::gammatone());
  t.epochs = 1;
  t.train_size = 4;
  t.heldout_size = 4;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const AblationResult r = ablation_run(AblationAxis::init, t, seeds);
  ASSERT_EQ(r.a.reports.size(), 3u);
  ASSERT_EQ(r.b.reports.size(), 3u);
  double acc = 0.0, e90 = 0.0;
  for (const auto& rep : r.a.reports) {
    acc += rep.final_heldout_acc();
    e90 += static_cast<double>(rep.epochs_to(0.9).value_or(2));
  }
  EXPECT_NEAR(r.a.mean_final_acc, acc / 3.0, 1e-15);
  EXPECT_NEAR(r.a.mean_epochs_to_90, e90 / 3.0, 1e-15);
  EXPECT_EQ(r.b.reports[1].seed, 2u);
  EXPECT_NE(ablation_summary(r).find("axis=init\na.config=gammatone/gamm"), std::string::npos);
}
