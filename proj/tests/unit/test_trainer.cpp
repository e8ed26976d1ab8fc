#include <gtest/gtest.h>

#include <cmath>

#include "certfair/evaluation.hpp"
#include "certfair/fair_init.hpp"
#include "certfair/trainer.hpp"
#include "fixtures.hpp"

namespace certfair {
namespace {

using testing::fair_params;
using testing::pointers;
using testing::random_params;
using testing::toy_dataset;
using testing::toy_domain;
using testing::toy_spec;

Parameters toy_init(const NetworkSpec& spec, std::uint64_t seed = 0) {
  InitConfig c;
  c.phi = 0.0;
  c.fan_in_scaling = true;
  c.seed = seed;
  return bernoulli_init(spec, c);
}

GradientSet gradient_with_group(const Parameters& p, const NetworkSpec& spec, double a, double b) {
  auto g = GradientSet::zeros_like(p);
  for (std::size_t k = 0; k < g.layers[0].out; ++k) {
    g.layers[0].w(k, spec.sensitive.offset) = a;
    g.layers[0].w(k, spec.sensitive.offset + 1) = b;
  }
  return g;
}

TEST(PreserveStep, TiedGradientUnchanged) {
  const auto spec = toy_spec(2, {3}, 2, 2);
  auto p = fair_params(spec, 1);
  auto g = gradient_with_group(p, spec, 0.4, 0.4);
  const auto before = p.layers[0].w(0, 2);
  const auto out = preserve_step(spec, p, g, TrainConfig{});
  EXPECT_TRUE(out.applied);
  EXPECT_FALSE(out.projected);
  EXPECT_EQ(out.breaking, 0.0);
  EXPECT_DOUBLE_EQ(p.layers[0].w(0, 2), before - 0.01 * 0.4);
  EXPECT_EQ(p.version, 1u);
}

TEST(PreserveStep, OppositeGradientProjectedToMean) {
  const auto spec = toy_spec(2, {3}, 2, 2);
  auto p = fair_params(spec, 1);
  auto g = gradient_with_group(p, spec, 1.0, -1.0);
  const auto out = preserve_step(spec, p, g, TrainConfig{});
  EXPECT_TRUE(out.projected);
  EXPECT_EQ(g.layers[0].w(0, 2), 0.0);
  EXPECT_EQ(g.layers[0].w(0, 3), 0.0);
  EXPECT_EQ(structural_certificate(spec, p).spread, 0.0);
}

TEST(PreserveStep, RejectedWithoutProjection) {
  const auto spec = toy_spec(2, {3}, 2, 2);
  auto p = fair_params(spec, 1);
  const auto copy = p;
  auto g = gradient_with_group(p, spec, 1.0, -1.0);
  TrainConfig c;
  c.projection = false;
  const auto out = preserve_step(spec, p, g, c);
  EXPECT_TRUE(out.rolled_back);
  EXPECT_FALSE(out.applied);
  EXPECT_EQ(p.layers[0].weights, copy.layers[0].weights);
  EXPECT_EQ(p.version, 0u);
}

TEST(PreserveStep, NonFiniteGradientRejected) {
  const auto spec = toy_spec(2, {3}, 2, 2);
  auto p = fair_params(spec, 1);
  auto g = GradientSet::zeros_like(p);
  g.layers[1].weights[0] = std::nan("");
  EXPECT_TRUE(preserve_step(spec, p, g, TrainConfig{}).rolled_back);
}

TEST(PreserveStep, SpreadNeverGrowsOverRandomGradients) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto spec = toy_spec(3, {5, 3}, 3, 2);
    auto p = fair_params(spec, seed);
    auto g = GradientSet::zeros_like(p);
    Rng rng(seed + 7);
    for (auto& layer : g.layers) {
      for (auto& w : layer.weights) w = rng.uniform(-10, 10);
      for (auto& b : layer.bias) b = rng.uniform(-10, 10);
    }
    const double pre = structural_certificate(spec, p).spread;
    preserve_step(spec, p, g, TrainConfig{});
    EXPECT_LE(structural_certificate(spec, p).spread, pre + 1e-15);
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> x = {rng.uniform(), rng.uniform(), rng.uniform()};
      const auto a = forward(spec, p, x, rng.index(3)).output();
      const auto b = forward(spec, p, x, rng.index(3)).output();
      for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
  }
}

TEST(BatchGradient, ReuseMatchesPerSampleEvaluation) {
  const auto spec = toy_spec(2, {6, 3}, 3, 2);
  const auto p = toy_init(spec, 3);
  auto data = toy_dataset(40, 2);
  for (auto& d : data.samples) d.s = static_cast<std::size_t>(d.x[0] * 3) % 3;
  const auto batch = pointers(data);
  for (TrainMode mode : {TrainMode::kExpectation, TrainMode::kStochastic}) {
    Rng r1(9), r2(9);
    double l1 = 0, l2 = 0;
    const auto a = batch_gradient(spec, p, batch, 0.0, mode, 4, r1, true, &l1);
    const auto b = batch_gradient(spec, p, batch, 0.0, mode, 4, r2, false, &l2);
    EXPECT_NEAR(l1, l2, 1e-12);
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      for (std::size_t k = 0; k < a.layers[i].weights.size(); ++k) {
        EXPECT_NEAR(a.layers[i].weights[k], b.layers[i].weights[k], 1e-12);
      }
    }
  }
}

TEST(BatchGradient, ExpectationAtZeroGammaStaysTied) {
  const auto spec = toy_spec(2, {6}, 4, 2);
  const auto p = toy_init(spec, 1);
  const auto data = toy_dataset(30, 1);
  const auto batch = pointers(data);
  Rng rng;
  const auto g = batch_gradient(spec, p, batch, 0.0, TrainMode::kExpectation, 1, rng);
  EXPECT_EQ(breaking_magnitude(spec, g), 0.0);
}

TEST(BatchGradient, StochasticAverageMatchesExpectation) {
  // Untied network so released values matter, gamma = ln 3.
  const auto spec = toy_spec(2, {3}, 2, 2);
  const auto p = random_params(spec, 5);
  const auto data = toy_dataset(4, 5);
  const auto batch = pointers(data);
  Rng unused;
  const auto expect = batch_gradient(spec, p, batch, std::log(3.0), TrainMode::kExpectation, 1, unused);
  const std::size_t n = 4000;
  auto sum = GradientSet::zeros_like(p);
  auto sq = GradientSet::zeros_like(p);
  Rng rng(11);
  for (std::size_t t = 0; t < n; ++t) {
    auto g = batch_gradient(spec, p, batch, std::log(3.0), TrainMode::kStochastic, 1, rng);
    sum.add_scaled(g, 1.0);
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      for (std::size_t k = 0; k < g.layers[i].weights.size(); ++k) {
        sq.layers[i].weights[k] += g.layers[i].weights[k] * g.layers[i].weights[k];
      }
    }
  }
  std::size_t outside = 0, total = 0;
  for (std::size_t i = 0; i < sum.layers.size(); ++i) {
    for (std::size_t k = 0; k < sum.layers[i].weights.size(); ++k) {
      const double mean = sum.layers[i].weights[k] / n;
      const double var = std::max(0.0, sq.layers[i].weights[k] / n - mean * mean);
      const double se = std::sqrt(var / n);
      outside += std::abs(mean - expect.layers[i].weights[k]) > 4 * se + 1e-12;
      ++total;
    }
  }
  EXPECT_EQ(outside, 0u) << "of " << total;
}

TEST(Trainer, ZeroEpochsLeavesParameters) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  const auto p0 = toy_init(spec);
  TrainConfig c;
  c.epochs = 0;
  const auto r = train_fair(spec, p0, toy_dataset(50, 1), c);
  EXPECT_EQ(r.params.layers[0].weights, p0.layers[0].weights);
  EXPECT_EQ(r.epochs.size(), 1u);
  EXPECT_EQ(verify(spec, r.params, toy_domain(2)).tag(), VerdictTag::kVerified);
}

TEST(Trainer, ExpectationModeKeepsCertificate) {
  const auto spec = toy_spec(2, {8, 4}, 2, 2);
  TrainConfig c;
  c.epochs = 50;
  c.mode = TrainMode::kExpectation;
  c.lr = 0.1;
  c.batch = 16;
  const auto data = toy_dataset(200, 3);
  const auto r = train_fair(spec, toy_init(spec), data, c);
  for (const auto& e : r.epochs) EXPECT_LE(e.spread, 1e-9) << "epoch " << e.epoch;
  EXPECT_FALSE(grid_falsify(spec, r.params, toy_domain(2), 100, 10000).has_value());
  EXPECT_EQ(r.epochs.size(), 51u);
  EXPECT_LT(r.epochs.back().loss, r.epochs.front().loss);
}

TEST(Trainer, StochasticProjectionKeepsCertificate) {
  const auto spec = toy_spec(2, {8}, 3, 2);
  TrainConfig c;
  c.epochs = 20;
  c.batch = 16;
  auto data = toy_dataset(120, 4);
  for (auto& s : data.samples) s.s = static_cast<std::size_t>(s.x[1] * 3) % 3;
  data.sensitive.values = {"a", "b", "c"};
  const auto r = train_fair(spec, toy_init(spec), data, c, &data);
  EXPECT_EQ(structural_certificate(spec, r.params).spread, 0.0);
  EXPECT_GT(r.projections, 0u);
  for (const auto& e : r.epochs) EXPECT_EQ(e.fairness_pct, 100.0);
}

TEST(Trainer, NoProjectionStochasticRollsBack) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  TrainConfig c;
  c.epochs = 3;
  c.batch = 8;
  c.projection = false;
  const auto r = train_fair(spec, toy_init(spec), toy_dataset(64, 2), c);
  EXPECT_GT(r.rollbacks, 0u);
  EXPECT_TRUE(structural_certificate(spec, r.params).pass);
}

TEST(Trainer, UncertifiedStartHalts) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  EXPECT_THROW(train_fair(spec, random_params(spec, 1), toy_dataset(20, 1), TrainConfig{}),
               TrainingHalted);
}

TEST(Trainer, Deterministic) {
  const auto spec = toy_spec(2, {6}, 2, 2);
  TrainConfig c;
  c.epochs = 5;
  c.batch = 10;
  const auto data = toy_dataset(100, 8);
  const auto a = train_fair(spec, toy_init(spec), data, c);
  const auto b = train_fair(spec, toy_init(spec), data, c);
  for (std::size_t i = 0; i < a.params.layers.size(); ++i) {
    EXPECT_EQ(a.params.layers[i].weights, b.params.layers[i].weights);
  }
}

TEST(Trainer, StepScheduleAndSignedEncoding) {
  const auto spec = toy_spec(2, {6}, 2, 2, SensitiveEncoding::kSignedBinary);
  TrainConfig c;
  c.epochs = 3;
  c.batch = 16;
  c.schedule = GammaSchedule::kStep;
  const auto r = train_fair(spec, toy_init(spec), toy_dataset(64, 2), c);
  EXPECT_GT(r.gamma_reports.size(), 3u);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(r.params.layers[0].w(k, 2), 0.0);
}

TEST(Trainer, CumulativeTimeMonotone) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  TrainConfig c;
  c.epochs = 5;
  const auto r = train_fair(spec, toy_init(spec), toy_dataset(100, 2), c);
  for (std::size_t i = 1; i < r.epochs.size(); ++i) {
    EXPECT_GE(r.epochs[i].seconds, r.epochs[i - 1].seconds);
    EXPECT_EQ(r.epochs[i].epoch, i);
  }
}

TEST(Erm, LearnsSeparableToy) {
  const auto spec = toy_spec(2, {8}, 2, 2);
  const auto data = toy_dataset(400, 6, 0.05);
  TrainConfig c;
  c.epochs = 200;
  c.lr = 0.1;
  const auto r = train_erm(spec, toy_init(spec), data, c);
  EXPECT_GE(accuracy(spec, r.params, data), 95.0);
}

TEST(Erm, SameBatchesAsFairTraining) {
  // At gamma 0 in expectation mode the fair gradient equals the ERM gradient
  // except on the sensitive columns, so the non-sensitive weights coincide.
  const auto spec = toy_spec(2, {5}, 2, 2);
  TrainConfig c;
  c.epochs = 1;
  c.batch = 100;
  c.mode = TrainMode::kExpectation;
  auto data = toy_dataset(100, 5);
  for (auto& s : data.samples) s.s = 0;
  const auto p0 = zero_init(spec, 0.0);
  const auto fair = train_fair(spec, p0, data, c);
  const auto erm = train_erm(spec, p0, data, c);
  EXPECT_EQ(fair.params.layers[1].bias, erm.params.layers[1].bias);
}

TEST(Chebyshev, BoundHalvesWhenDeltaDoubles) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  const auto p = toy_init(spec);
  const auto data = toy_dataset(16, 1);
  const auto batch = pointers(data);
  const auto a = chebyshev_report(spec, p, batch, 0.0, 8, 1e-3, 0.01, 200, 1);
  const auto b = chebyshev_report(spec, p, batch, 0.0, 16, 1e-3, 0.01, 200, 1);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].variance, b.entries[i].variance);
    EXPECT_EQ(b.entries[i].bound, a.entries[i].bound / 2);
  }
}

TEST(Chebyshev, ZeroVarianceWhenTruthKept) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  const auto data = toy_dataset(16, 1);
  const auto r = chebyshev_report(spec, toy_init(spec), pointers(data),
                                  std::numeric_limits<double>::infinity(), 8, 1e-3);
  EXPECT_EQ(r.max_bound(), 0.0);
  EXPECT_EQ(r.max_frequency(), 0.0);
}

TEST(Chebyshev, FrequencyBelowBoundForLargeDelta) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  const auto data = toy_dataset(16, 2);
  const auto r = chebyshev_report(spec, toy_init(spec), pointers(data), 0.0, 10000, 1e-3, 0.01,
                                  200, 3);
  for (const auto& e : r.entries) EXPECT_LE(e.frequency, e.bound);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.batch = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_train_mode("expectation"), TrainMode::kExpectation);
  EXPECT_THROW(parse_gamma_schedule("sometimes"), std::invalid_argument);
}

}  // namespace
}  // namespace certfair
