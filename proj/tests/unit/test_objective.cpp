#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "sbwc/objective.hpp"
#include "support.hpp"

using namespace sbwc;
using sbwc::testing::fd_gradient;
using sbwc::testing::fd_hessian;
using sbwc::testing::gaussian_vec;
using sbwc::testing::random_dataset;

namespace {

struct Tiny {
  Objective obj;
  Vec w;
};

Tiny random_tiny(Rng& rng) {
  std::uniform_int_distribution<int> pick_m(1, 2), pick_d(1, 3), pick_n(1, 5), pick_act(0, 2),
      pick_loss(0, 2);
  const int m = 2 * pick_m(rng), d = pick_d(rng), n = pick_n(rng);
  const ActivationSpec acts[] = {ActivationSpec::softplus(), ActivationSpec::tanh(),
                                 ActivationSpec::gelu()};
  const LossSpec losses[] = {LossSpec::logistic(), LossSpec::exponential(),
                             LossSpec::polytail(2.0)};
  Objective obj(random_dataset(rng, n, d), losses[pick_loss(rng)], acts[pick_act(rng)],
                NetworkShape(m, d));
  return {std::move(obj), gaussian_vec(rng, static_cast<std::size_t>(m) * d)};
}

}  // namespace

TEST(Objective, GradientMatchesDifferencesOnRandomTinyInstances) {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [obj, w] = random_tiny(rng);
    const Vec g = obj.risk_grad(w);
    const Vec fd = fd_gradient([&](std::span<const double> p) { return obj.risk(p); }, w);
    const double scale = std::max(norm(fd), 1e-8);
    Vec diff = g;
    axpy(-1.0, fd, diff);
    EXPECT_LE(norm(diff) / scale, 1e-5) << "trial " << trial;
  }
}

TEST(Objective, HvpMatchesDenseDifferenceHessian) {
  Rng rng(102);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [obj, w] = random_tiny(rng);
    const Eigen::MatrixXd H =
        fd_hessian([&](std::span<const double> p) { return obj.risk_grad(p); }, w);
    const auto dim = w.size();
    for (std::size_t k = 0; k < dim; ++k) {
      Vec e(dim, 0.0);
      e[k] = 1.0;
      const Vec col = obj.risk_hvp(w, e);
      for (std::size_t r = 0; r < dim; ++r)
        EXPECT_NEAR(col[r], H(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)), 1e-4);
    }
  }
}

TEST(Objective, LanczosMinEigMatchesDenseEigensolver) {
  Rng rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [obj, w] = random_tiny(rng);
    const Eigen::MatrixXd H =
        fd_hessian([&](std::span<const double> p) { return obj.risk_grad(p); }, w);
    const double dense = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues()(0);
    const auto est = obj.min_eig(w, 0.0, /*dense_limit=*/0);
    EXPECT_NEAR(est.lambda, dense, 1e-6) << "trial " << trial;
    EXPECT_NEAR(obj.min_eig(w).lambda, dense, 1e-6);
  }
}

TEST(Objective, HessianOperatorAgreesWithHvp) {
  Rng rng(104);
  const Objective obj(random_dataset(rng, 20, 4), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(10, 4));
  const Vec w = gaussian_vec(rng, 40);
  const auto H = obj.hessian(w);
  for (int k = 0; k < 5; ++k) {
    const Vec v = gaussian_vec(rng, 40);
    const Vec a = H.apply(v), b = obj.risk_hvp(w, v);
    for (std::size_t r = 0; r < a.size(); ++r) EXPECT_NEAR(a[r], b[r], 1e-12);
  }
}

TEST(Objective, ValueAndGradConsistent) {
  Rng rng(105);
  const Objective obj(random_dataset(rng, 30, 3), LossSpec::logistic(), ActivationSpec::softplus(),
                      NetworkShape(8, 3));
  const Vec w = gaussian_vec(rng, 24);
  const auto vg = obj.value_and_grad(w);
  EXPECT_EQ(vg.risk, obj.risk(w));
  const Vec g = obj.risk_grad(w);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(vg.grad[k], g[k]);
}

TEST(Objective, SampleGradientsAverageToRiskGradient) {
  Rng rng(106);
  const Objective obj(random_dataset(rng, 7, 2), LossSpec::exponential(), ActivationSpec::gelu(),
                      NetworkShape(4, 2));
  const Vec w = gaussian_vec(rng, 8);
  Vec sum(8, 0.0);
  for (int i = 0; i < 7; ++i) axpy(1.0 / 7.0, obj.sample_grad(w, i), sum);
  const Vec g = obj.risk_grad(w);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(sum[k], g[k], 1e-14);
}

TEST(Objective, LeaveOneOutKeepsNormalization) {
  Rng rng(107);
  const Objective obj(random_dataset(rng, 6, 2), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(4, 2));
  const Vec w = gaussian_vec(rng, 8);
  const Vec losses = obj.sample_losses(w);
  for (int i = 0; i < 6; ++i) {
    const Objective loo = obj.without(i);
    EXPECT_NEAR(loo.risk(w), obj.risk(w) - losses[i] / 6.0, 1e-14);
    Vec g = obj.risk_grad(w);
    axpy(-1.0 / 6.0, obj.sample_grad(w, i), g);
    const Vec gl = loo.risk_grad(w);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(gl[k], g[k], 1e-14);
  }
}

TEST(Objective, SingleSampleLeaveOneOutIsZero) {
  Rng rng(108);
  const Objective obj(random_dataset(rng, 1, 3), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(2, 3));
  const Objective loo = obj.without(0);
  const Vec w = gaussian_vec(rng, 6);
  EXPECT_EQ(loo.risk(w), 0.0);
  EXPECT_EQ(norm(loo.risk_grad(w)), 0.0);
}

TEST(Objective, ConstantsFollowFormulas) {
  Rng rng(109);
  auto data = random_dataset(rng, 4, 2);
  const Objective obj(data, LossSpec::logistic(), ActivationSpec::tanh(), NetworkShape(16, 2));
  const double L = 4.0 / (3.0 * std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(obj.kappa(), L / 4.0);
  EXPECT_DOUBLE_EQ(obj.smoothness(), 1.0 + L / 4.0);
  const Objective exp_obj(data, LossSpec::exponential(), ActivationSpec::tanh(), NetworkShape(16, 2));
  EXPECT_THROW(exp_obj.smoothness(), DomainError);
}

TEST(Objective, SelfBoundedWeakConvexityAtRandomPoints) {
  Rng rng(110);
  for (int trial = 0; trial < 30; ++trial) {
    const Objective obj(random_dataset(rng, 10, 3), LossSpec::logistic(),
                        ActivationSpec::softplus(), NetworkShape(6, 3));
    const Vec w = gaussian_vec(rng, 18, 1.5);
    const double lam = obj.min_eig(w).lambda;
    EXPECT_GE(lam + obj.kappa() * obj.risk(w), -1e-10);
  }
}

TEST(Objective, RejectsMismatchedWeights) {
  Rng rng(111);
  const Objective obj(random_dataset(rng, 3, 2), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(2, 2));
  EXPECT_THROW(obj.risk(Vec(3, 0.0)), DimensionError);
  EXPECT_THROW(obj.risk(Vec{0.0, 0.0, std::nan(""), 0.0}), DomainError);
}

TEST(Objective, LanczosPathOnLargerInstanceMatchesDense) {
  Rng rng(112);
  const Objective obj(random_dataset(rng, 24, 5), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(40, 5));
  const Vec w = gaussian_vec(rng, 200, 0.8);
  const auto H = obj.hessian(w);
  const Eigen::MatrixXd D = dense_matrix(H.as_operator(), 200);
  const double dense = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(D).eigenvalues()(0);
  EXPECT_NEAR(obj.min_eig(w, 0.0, 0).lambda, dense, 1e-8);
  EXPECT_NEAR(obj.hessian_norm(w, 0),
              Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(D).eigenvalues().cwiseAbs().maxCoeff(),
              1e-7);
}
