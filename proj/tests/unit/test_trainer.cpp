#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sbwc/dataset.hpp"
#include "sbwc/trainer.hpp"
#include "support.hpp"

using namespace sbwc;
using sbwc::testing::random_dataset;

namespace {

Objective linsep_objective(LossSpec loss, int n = 40, int m = 32) {
  auto sample = gen_linsep(5, 0.3, n, 17);
  return Objective(std::make_shared<const Dataset>(std::move(sample.data)), loss,
                   ActivationSpec::tanh(), NetworkShape(m, 5));
}

}  // namespace

TEST(StepPolicy, ParseAndName) {
  EXPECT_EQ(StepPolicy::parse("fixed:0.5").eta, 0.5);
  EXPECT_EQ(StepPolicy::parse("smoothness").kind, StepPolicyKind::smoothness);
  EXPECT_EQ(StepPolicy::parse("self_bounded").kind, StepPolicyKind::self_bounded);
  EXPECT_EQ(StepPolicy::parse("ntk").kind, StepPolicyKind::ntk);
  for (const char* s : {"fixed:0.25", "smoothness", "self_bounded", "ntk"})
    EXPECT_EQ(StepPolicy::parse(s).name(), s);
  EXPECT_THROW(StepPolicy::parse("adam"), ParseError);
  EXPECT_THROW(StepPolicy::parse("fixed:abc"), ParseError);
}

TEST(InitSpecTest, ParseAndName) {
  EXPECT_EQ(InitSpec::parse("zero").kind, InitKind::zero);
  EXPECT_EQ(InitSpec::parse("gaussian").scale, 1.0);
  EXPECT_EQ(InitSpec::parse("gaussian:0.5").scale, 0.5);
  EXPECT_EQ(InitSpec::parse(InitSpec::gaussian(0.25).name()).scale, 0.25);
  EXPECT_THROW(InitSpec::parse("uniform"), ParseError);
}

TEST(Init, DeterministicPerSeed) {
  const NetworkShape shape(6, 3);
  const auto a = init_weights(shape, InitSpec::gaussian(), 5);
  const auto b = init_weights(shape, InitSpec::gaussian(), 5);
  const auto c = init_weights(shape, InitSpec::gaussian(), 6);
  EXPECT_EQ(a.vec(), b.vec());
  EXPECT_NE(a.vec(), c.vec());
  EXPECT_EQ(norm(init_weights(shape, InitSpec::zero(), 5).flat()), 0.0);
}

TEST(ResolveStep, Policies) {
  const Objective obj = linsep_objective(LossSpec::logistic());
  const Vec w0(obj.shape().num_params(), 0.0);
  EXPECT_DOUBLE_EQ(resolve_step(obj, w0, StepPolicy::smoothness()), 1.0 / obj.smoothness());
  EXPECT_DOUBLE_EQ(resolve_step(obj, w0, StepPolicy::ntk()), std::min(3.0, 1.0 / obj.smoothness()));
  EXPECT_EQ(resolve_step(obj, w0, StepPolicy::fixed(0.3)), 0.3);
  const double ell = 1.0, L = obj.activation().big_l;
  const double expect = 0.99 / (obj.radius() * obj.radius() * obj.risk(w0)) *
                        std::min(1.0 / (ell * ell + L), 1.0 / (std::sqrt(L) * ell));
  EXPECT_DOUBLE_EQ(resolve_step(obj, w0, StepPolicy::self_bounded()), expect);
  const Objective poly = linsep_objective(LossSpec::polytail(2.0));
  EXPECT_THROW(resolve_step(poly, w0, StepPolicy::self_bounded()), DomainError);
  const Objective ex = linsep_objective(LossSpec::exponential());
  EXPECT_THROW(resolve_step(ex, w0, StepPolicy::smoothness()), DomainError);
}

TEST(Train, DescentUnderSmoothnessStep) {
  const Objective obj = linsep_objective(LossSpec::logistic());
  GDConfig cfg;
  cfg.T = 300;
  cfg.init = InitSpec::gaussian(0.5);
  cfg.seed = 3;
  const TrainTrace tr = train(obj, cfg);
  EXPECT_GE(verify_descent(tr, tr.eta), -kDescentTolerance);
  EXPECT_LT(tr.risk.back(), tr.risk.front());
  EXPECT_EQ(tr.risk.size(), 301u);
}

TEST(Train, DescentUnderSelfBoundedStepForExponentialLoss) {
  const Objective obj = linsep_objective(LossSpec::exponential());
  GDConfig cfg;
  cfg.T = 300;
  cfg.step = StepPolicy::self_bounded();
  const TrainTrace tr = train(obj, cfg);
  EXPECT_GE(verify_descent(tr, tr.eta), -kDescentTolerance);
}

TEST(Train, BitwiseDeterministic) {
  const Objective obj = linsep_objective(LossSpec::logistic());
  GDConfig cfg;
  cfg.T = 50;
  cfg.init = InitSpec::gaussian();
  cfg.seed = 8;
  const TrainTrace a = train(obj, cfg), b = train(obj, cfg);
  EXPECT_EQ(a.risk, b.risk);
  EXPECT_EQ(a.final_weights, b.final_weights);
}

TEST(Train, TraceFieldsMatchDirectEvaluation) {
  const Objective obj = linsep_objective(LossSpec::logistic(), 10, 8);
  GDConfig cfg;
  cfg.T = 20;
  cfg.record_every = 5;
  cfg.init = InitSpec::gaussian();
  const TrainTrace tr = train(obj, cfg);
  EXPECT_EQ(tr.checkpoints.size(), 5u);  // 0, 5, 10, 15, 20
  for (const auto& [t, w] : tr.checkpoints) {
    EXPECT_EQ(tr.risk[t], obj.risk(w));
    EXPECT_NEAR(tr.dist_init[t], distance(w, tr.w0), 1e-15);
    EXPECT_NEAR(tr.grad_norm[t], norm(obj.risk_grad(w)), 1e-15);
  }
  double sum = 0.0;
  for (long t = 1; t <= tr.T; ++t) sum += tr.risk[t];
  EXPECT_NEAR(tr.regret(), sum / tr.T, 1e-15);
}

TEST(Train, IndependentLoopReproducesIterates) {
  // Plain loop written against the public objective API only.
  const Objective obj = linsep_objective(LossSpec::logistic(), 12, 6);
  const Weights w0 = init_weights(obj.shape(), InitSpec::gaussian(), 4);
  const double eta = 0.7;
  Vec w = w0.vec();
  for (int t = 0; t < 25; ++t) {
    const Vec g = obj.risk_grad(w);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= eta * g[k];
  }
  const TrainTrace tr = train_from(obj, w0.vec(), eta, 25);
  EXPECT_EQ(tr.final_weights, w);
}

TEST(Train, DivergenceCarriesIteration) {
  // Noisy XOR has no separating direction, so a huge step blows the risk up.
  const Objective obj(std::make_shared<const Dataset>(gen_xor(3, 50, 1)), LossSpec::exponential(),
                      ActivationSpec::softplus(), NetworkShape(4, 3));
  try {
    train_from(obj, init_weights(obj.shape(), InitSpec::gaussian(), 1).vec(), 1e6, 100);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.iteration(), 1);
  }
}

TEST(Train, ZeroHorizon) {
  const Objective obj = linsep_objective(LossSpec::logistic(), 5, 4);
  const TrainTrace tr = train_from(obj, Vec(20, 0.0), 0.5, 0);
  EXPECT_EQ(tr.risk.size(), 1u);
  EXPECT_EQ(tr.regret(), 0.0);
  EXPECT_EQ(verify_descent(tr, 0.5), std::numeric_limits<double>::infinity());
  GDConfig cfg;
  cfg.T = 0;
  EXPECT_THROW(train(obj, cfg), DomainError);
}
