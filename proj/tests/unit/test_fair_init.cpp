#include <gtest/gtest.h>

#include <cmath>

#include "certfair/fair_init.hpp"
#include "fixtures.hpp"

namespace certfair {
namespace {

using testing::toy_domain;
using testing::toy_spec;

TEST(FairInit, ZeroInitOutputsConstant) {
  const auto spec = toy_spec(3, {4, 2}, 3, 2);
  for (double c : {0.0, 0.3}) {
    const auto p = zero_init(spec, c);
    const std::vector<double> x = {0.2, 0.5, 0.9};
    const auto ref = forward(spec, p, x, 0).output();
    for (double v : ref) EXPECT_DOUBLE_EQ(v, c);
    for (std::size_t s = 1; s < 3; ++s) EXPECT_EQ(forward(spec, p, x, s).output(), ref);
  }
}

TEST(FairInit, ZeroInitVerifiesWithOnePartition) {
  const auto spec = toy_spec(3, {4, 2}, 3, 2);
  const auto verdict = verify(spec, zero_init(spec, 0.0), toy_domain(3, 3));
  EXPECT_EQ(verdict.tag(), VerdictTag::kVerified);
  EXPECT_EQ(verdict.stats().partitions, 1u);
}

TEST(FairInit, BernoulliMagnitudes) {
  const auto spec = toy_spec(5, {6, 3}, 2, 2);
  InitConfig c;
  c.phi = -10.0;
  const auto p = bernoulli_init(spec, c);
  for (const auto& layer : p.layers) {
    for (double w : layer.weights) EXPECT_DOUBLE_EQ(std::abs(w), std::exp(-10.0));
    for (double b : layer.bias) EXPECT_EQ(b, 0.0);
  }
}

TEST(FairInit, FanInScaling) {
  const auto spec = toy_spec(7, {4}, 2, 2);
  InitConfig c;
  c.phi = 0.0;
  c.fan_in_scaling = true;
  const auto p = bernoulli_init(spec, c);
  EXPECT_DOUBLE_EQ(std::abs(p.layers[0].weights[0]), 1.0 / 3.0);  // fan-in 9
  EXPECT_DOUBLE_EQ(std::abs(p.layers[1].weights[0]), 0.5);        // fan-in 4
}

TEST(FairInit, GroupTiedDrawPassesCertificate) {
  const auto spec = toy_spec(4, {16, 4}, 5, 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    InitConfig c;
    c.seed = seed;
    const auto p = bernoulli_init(spec, c);
    const auto cert = structural_certificate(spec, p);
    EXPECT_TRUE(cert.pass);
    EXPECT_EQ(cert.spread, 0.0);
  }
  const auto signed_spec = toy_spec(4, {8}, 2, 2, SensitiveEncoding::kSignedBinary);
  const auto p = bernoulli_init(signed_spec, InitConfig{});
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(p.layers[0].w(k, 4), 0.0);
}

TEST(FairInit, SignsFollowPInit) {
  const auto spec = toy_spec(50, {200}, 2, 2);
  InitConfig c;
  c.p_init = 0.8;
  const auto p = bernoulli_init(spec, c);
  std::size_t positive = 0, total = 0;
  for (std::size_t k = 0; k < 200; ++k) {
    for (std::size_t j = 0; j < 50; ++j) {
      positive += p.layers[0].w(k, j) > 0;
      ++total;
    }
  }
  const double freq = static_cast<double>(positive) / total;
  EXPECT_NEAR(freq, 0.8, 3 * std::sqrt(0.8 * 0.2 / total));
}

TEST(FairInit, Deterministic) {
  const auto spec = toy_spec(4, {8, 4}, 3, 2);
  InitConfig c;
  c.seed = 42;
  const auto a = bernoulli_init(spec, c);
  const auto b = bernoulli_init(spec, c);
  for (std::size_t i = 0; i < a.layers.size(); ++i) EXPECT_EQ(a.layers[i].weights, b.layers[i].weights);
  c.seed = 43;
  EXPECT_NE(bernoulli_init(spec, c).layers[0].weights, a.layers[0].weights);
}

TEST(FairInit, ConfigValidation) {
  InitConfig c;
  c.p_init = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.p_init = 0.5;
  c.phi = 0.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_init_scheme("zero"), InitScheme::kZero);
  EXPECT_THROW(parse_init_scheme("xavier"), std::invalid_argument);
}

TEST(FairInit, ZeroSchemeSucceedsFirstAttempt) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  InitConfig c;
  c.scheme = InitScheme::kZero;
  const auto r = init_until_verified(spec, c, toy_domain(2));
  EXPECT_EQ(r.attempts, 1u);
  EXPECT_EQ(r.verdict.tag(), VerdictTag::kVerified);
}

TEST(FairInit, BrokenTiesRejectedThenRetried) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  const auto domain = toy_domain(2);
  // Attempt 0 makes the label depend on s outright; attempt 1 is tied.
  auto draw = [&](std::size_t attempt) {
    Parameters p = testing::fair_params(spec, attempt + 1);
    if (attempt == 0) {
      p = make_parameters(spec);
      p.layers[0].w(0, 2) = 1.0;
      p.layers[1].w(1, 0) = 1.0;
    }
    return p;
  };
  ASSERT_TRUE(grid_falsify(spec, draw(0), domain, 10, 1000).has_value());
  const auto r = init_until_verified(spec, draw, domain, VerifyBudget{}, 3);
  EXPECT_EQ(r.attempts, 2u);
  EXPECT_TRUE(structural_certificate(spec, r.params).pass);
}

TEST(FairInit, ExhaustionCarriesLastVerdict) {
  const auto spec = toy_spec(2, {4}, 2, 2);
  auto draw = [&](std::size_t) {
    Parameters p = make_parameters(spec);
    p.layers[0].w(0, 2) = 1.0;
    p.layers[1].w(1, 0) = 1.0;
    return p;
  };
  try {
    init_until_verified(spec, draw, toy_domain(2), VerifyBudget{}, 2);
    FAIL() << "expected InitExhausted";
  } catch (const InitExhausted& e) {
    EXPECT_EQ(e.last_verdict().tag(), VerdictTag::kFalsified);
  }
}

}  // namespace
}  // namespace certfair
