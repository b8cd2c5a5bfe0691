#include <gtest/gtest.h>

#include <cmath>

#include "sbwc/dataset.hpp"
#include "sbwc/parallel.hpp"
#include "sbwc/stability.hpp"
#include "support.hpp"

using namespace sbwc;

namespace {

std::shared_ptr<const Dataset> linsep_data(int d, double gamma, int n, std::uint64_t seed) {
  return std::make_shared<const Dataset>(gen_linsep(d, gamma, n, seed).data);
}

/// Scalar leave-one-out GD for tanh + logistic, written without the
/// objective class: plain loops over samples and neurons.
Vec reference_loo(const Dataset& data, int m, int skip, double eta, long T) {
  const int n = data.n(), d = data.d();
  Vec w(static_cast<std::size_t>(m) * d, 0.0);
  const double c = 1.0 / std::sqrt(static_cast<double>(m));
  for (long t = 0; t < T; ++t) {
    Vec g(w.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      if (i == skip) continue;
      double phi = 0.0;
      std::vector<double> pre(m);
      for (int j = 0; j < m; ++j) {
        double z = 0.0;
        for (int k = 0; k < d; ++k) z += w[j * d + k] * data.X(i, k);
        pre[j] = z;
        phi += (j < m / 2 ? 1.0 : -1.0) * std::tanh(z);
      }
      phi *= c;
      const double u = data.y[i] * phi;
      const double fprime = -1.0 / (1.0 + std::exp(u));
      for (int j = 0; j < m; ++j) {
        const double th = std::tanh(pre[j]);
        const double coef = fprime * data.y[i] * c * (j < m / 2 ? 1.0 : -1.0) * (1.0 - th * th) / n;
        for (int k = 0; k < d; ++k) g[j * d + k] += coef * data.X(i, k);
      }
    }
    for (std::size_t p = 0; p < w.size(); ++p) w[p] -= eta * g[p];
  }
  return w;
}

}  // namespace

TEST(Parallel, IndexOrderedResultsAndLowestError) {
  const auto out = parallel_map(100, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (int i = 0; i < 100; ++i) EXPECT_EQ(out[i], i * i);
  try {
    parallel_map(10, 3, [](std::size_t i) -> int {
      if (i == 4 || i == 7) throw std::runtime_error(std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "4");
  }
}

TEST(Loo, SingleSampleStaysAtInit) {
  const Objective obj(linsep_data(3, 0.5, 1, 1), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(4, 3));
  const Vec w0{0.1, 0.2, 0.3, -0.1, 0.0, 0.5, 0.2, 0.2, -0.3, 0.1, 0.1, 0.1};
  const TrainTrace full = train_from(obj, w0, 0.5, 10);
  const LooRuns loo = loo_train_all(obj, full);
  ASSERT_EQ(loo.weights.size(), 1u);
  EXPECT_EQ(loo.weights[0], w0);
  const auto ms = model_stability(full.final_weights, loo.weights);
  EXPECT_NEAR(ms.average, distance(full.final_weights, w0), 1e-15);
}

TEST(Loo, DuplicateRowsGiveIdenticalRuns) {
  Dataset data = gen_linsep(3, 0.4, 6, 2).data;
  data.X.row(4) = data.X.row(1);
  data.y[4] = data.y[1];
  const Objective obj(std::make_shared<const Dataset>(data), LossSpec::logistic(),
                      ActivationSpec::tanh(), NetworkShape(6, 3));
  GDConfig cfg;
  cfg.T = 30;
  const TrainTrace full = train(obj, cfg);
  const LooRuns loo = loo_train_all(obj, full);
  for (std::size_t k = 0; k < loo.weights[1].size(); ++k)
    EXPECT_NEAR(loo.weights[1][k], loo.weights[4][k], 1e-15);
}

TEST(Loo, MatchesObjectiveLoopBitwiseAndScalarReference) {
  const auto data = linsep_data(3, 0.3, 7, 3);
  const int m = 6;
  const Objective obj(data, LossSpec::logistic(), ActivationSpec::tanh(), NetworkShape(m, 3));
  const double eta = 0.9;
  const TrainTrace full = train_from(obj, Vec(18, 0.0), eta, 40);
  const LooRuns loo = loo_train_all(obj, full, {2, false});
  for (int i = 0; i < 7; ++i) {
    const Objective part = obj.without(i);
    Vec w(18, 0.0);
    for (int t = 0; t < 40; ++t) axpy(-eta, part.risk_grad(w), w);
    EXPECT_EQ(loo.weights[i], w) << i;
    const Vec ref = reference_loo(*data, m, i, eta, 40);
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(loo.weights[i][k], ref[k], 1e-12);
  }
}

TEST(Loo, ParallelMatchesSerial) {
  const Objective obj(linsep_data(4, 0.3, 9, 4), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(8, 4));
  GDConfig cfg;
  cfg.T = 20;
  const TrainTrace full = train(obj, cfg);
  const LooRuns a = loo_train_all(obj, full, {1, false});
  const LooRuns b = loo_train_all(obj, full, {3, false});
  EXPECT_EQ(a.weights, b.weights);
}

TEST(ModelStabilityTest, ZeroAndMismatch) {
  const Vec w{1.0, 2.0};
  EXPECT_EQ(model_stability(w, {w, w, w}).average, 0.0);
  EXPECT_THROW(model_stability(w, {Vec{1.0}}), DimensionError);
}

TEST(Bound, FormulaAndScaling) {
  TrainTrace tr;
  tr.eta = 0.5;
  tr.T = 4;
  tr.risk = {0.7, 0.0, 0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(stability_bound(tr, 1.0, 1.0, 10), 2.0 * 0.5 * 0.7 / 10);
  tr.risk = {0.7, 0.5, 0.4, 0.3, 0.2};
  EXPECT_DOUBLE_EQ(stability_bound(tr, 1.0, 2.0, 20), stability_bound(tr, 1.0, 2.0, 10) / 2.0);
  EXPECT_DOUBLE_EQ(stability_bound(tr, 1.0, 1.0, 10), 2.0 * 0.5 / 10 * (0.7 + 1.4));
}

TEST(Bound, HoldsOnLinsepRunWithExpansionCheck) {
  const Objective obj(linsep_data(5, 0.5, 32, 5), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(256, 5));
  GDConfig cfg;
  cfg.T = 512;
  cfg.record_every = 1;
  const TrainTrace full = train(obj, cfg);
  const LooRuns loo = loo_train_all(obj, full, {1, true});
  const StabilityReport rep = stability_report(obj, full, loo);
  double reg = 0.0;
  for (long t = 1; t <= full.T; ++t) reg += full.risk[t];
  EXPECT_NEAR(rep.reg, reg / full.T, 1e-12);
  EXPECT_TRUE(rep.bound_holds()) << rep.stability.average << " vs " << rep.bound;
  EXPECT_EQ(rep.expansion.steps, 32 * 512);
  EXPECT_GT(rep.expansion.applicable, 0);
  EXPECT_EQ(rep.expansion.failures, 0);
  for (double dist : rep.stability.distances) EXPECT_GE(dist, 0.0);
}

TEST(Bound, ExpansionCheckNeedsEveryIterate) {
  const Objective obj(linsep_data(3, 0.5, 4, 5), LossSpec::logistic(), ActivationSpec::tanh(),
                      NetworkShape(4, 3));
  GDConfig cfg;
  cfg.T = 5;
  const TrainTrace full = train(obj, cfg);
  EXPECT_THROW(loo_train_all(obj, full, {1, true}), DomainError);
}

TEST(GenGap, NoTrainingHasZeroMeanGap) {
  GapScenario s;
  s.d = 4;
  s.gamma = 0.5;
  s.m = 16;
  s.n = 16;
  s.T = 0;
  s.init = InitSpec::gaussian();
  const auto rep = gen_gap_estimate(s, 40, 2000, 1);
  EXPECT_EQ(rep.trials.size(), 40u);
  EXPECT_LE(std::abs(rep.mean_gap), 3.0 * rep.std_error + 1e-3);
}

TEST(GenGap, RejectsFewTrialsAndReportsBound) {
  GapScenario s;
  s.d = 3;
  s.m = 8;
  s.n = 8;
  s.T = 8;
  EXPECT_THROW(gen_gap_estimate(s, 4, 100, 1), DomainError);
  const auto rep = gen_gap_estimate(s, 5, 500, 2, 2);
  const double g = 2.0 * std::log(8.0) / s.gamma;
  EXPECT_DOUBLE_EQ(rep.g, g);
  EXPECT_DOUBLE_EQ(rep.bound, 24.0 * g * g / 8.0);
  for (const auto& t : rep.trials) {
    EXPECT_NEAR(t.gap, t.test_loss - t.train_loss, 1e-15);
    EXPECT_TRUE(std::isnan(t.general_rhs) || t.general_rhs > 0.0);
  }
  // Same seed, different job count: identical numbers.
  const auto again = gen_gap_estimate(s, 5, 500, 2, 1);
  EXPECT_EQ(again.mean_gap, rep.mean_gap);
}
