#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "certfair/evaluation.hpp"
#include "fixtures.hpp"

namespace certfair {
namespace {

TEST(Fairness, ConstantNetworkIsFair) {
  const auto spec = testing::toy_spec(2, {3}, 2, 2);
  const auto data = testing::toy_dataset(40, 1);
  const auto r = empirical_fairness(spec, make_parameters(spec), data);
  EXPECT_EQ(r.fairness_pct, 100.0);
  EXPECT_EQ(r.discriminatory, 0u);
  EXPECT_EQ(r.total, 40u);
}

TEST(Fairness, SignOfSensitiveIsFullyUnfair) {
  auto [spec, p] = testing::sign_of_s_network();
  Dataset d;
  Rng rng(1);
  for (int i = 0; i < 50; ++i) d.samples.push_back(Sample{{rng.uniform()}, rng.index(2), 0});
  const auto r = empirical_fairness(spec, p, d);
  EXPECT_EQ(r.fairness_pct, 0.0);
  EXPECT_EQ(r.discriminatory, 50u);
  EXPECT_THROW(empirical_fairness(spec, p, Dataset{}), std::invalid_argument);
}

TEST(Accuracy, HandCountedFixture) {
  // Single logit = x0 - 0.5: predicts 1 iff x0 > 0.5.
  const auto spec = testing::toy_spec(1, {}, 2, 1);
  auto p = make_parameters(spec);
  p.layers[0].w(0, 0) = 1.0;
  p.layers[0].bias[0] = -0.5;
  const double xs[10] = {0.1, 0.2, 0.3, 0.4, 0.45, 0.55, 0.6, 0.7, 0.8, 0.9};
  const Label ys[10] = {0, 0, 1, 0, 1, 1, 1, 0, 1, 1};  // wrong at 0.3, 0.45, 0.7
  Dataset d;
  for (int i = 0; i < 10; ++i) d.samples.push_back(Sample{{xs[i]}, 0, ys[i]});
  EXPECT_DOUBLE_EQ(accuracy(spec, p, d), 70.0);
  for (auto& s : d.samples) s.y = predict(spec, p, s.x, s.s);
  EXPECT_DOUBLE_EQ(accuracy(spec, p, d), 100.0);
}

std::vector<EpochStats> constant_log(std::size_t epochs, double per_epoch) {
  std::vector<EpochStats> out(epochs + 1);
  for (std::size_t i = 0; i <= epochs; ++i) {
    out[i].epoch = i;
    out[i].epoch_seconds = i == 0 ? 0.0 : per_epoch;
    out[i].seconds = per_epoch * static_cast<double>(i);
  }
  return out;
}

TEST(Timing, Ratios) {
  EXPECT_DOUBLE_EQ(timing_ratio(constant_log(10, 1.0), constant_log(10, 1.0)).ratio, 1.0);
  const auto t = timing_ratio(constant_log(100, 1.22), constant_log(100, 1.1956));
  EXPECT_NEAR(t.ratio, 1.0204, 1e-4);
  EXPECT_NEAR(t.fair_seconds, 122.0, 1e-9);
  EXPECT_NEAR(t.fair_steps_per_sec, 100.0 / 122.0, 1e-9);  // epochs per second
  // Every other epoch of both logs.
  auto sub = [](const std::vector<EpochStats>& v) {
    std::vector<EpochStats> out;
    for (const auto& e : v) if (e.epoch % 2 == 0) out.push_back(e);
    return out;
  };
  EXPECT_NEAR(timing_ratio(sub(constant_log(100, 1.22)), sub(constant_log(100, 1.1956))).ratio,
              t.ratio, 1e-12);
  EXPECT_THROW(timing_ratio(constant_log(3, 1), constant_log(4, 1)), std::invalid_argument);
}

TEST(Timing, EpochSpread) {
  auto log = constant_log(10, 1.0);
  EXPECT_DOUBLE_EQ(epoch_time_spread(log), 1.0);
  log[4].epoch_seconds = 3.0;
  EXPECT_DOUBLE_EQ(epoch_time_spread(log), 3.0);
}

TEST(Reports, RoundTrip) {
  EvalReport r{"adult", "sex", "Ours", 100.0, 0, 84.98, 42.5, 2.35};
  std::stringstream io;
  write_reports(io, {r});
  std::string header;
  std::getline(io, header);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(io, line)) rows += !line.empty();
  EXPECT_EQ(rows, 1u);
  io.clear();
  io.seekg(0);
  const auto back = read_reports(io);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].dataset, "adult");
  EXPECT_EQ(back[0].accuracy_pct, 84.98);
  EXPECT_EQ(back[0].total_seconds, 42.5);
}

TEST(Reports, VerificationRoundTrip) {
  std::stringstream io;
  write_verification_rows(io, {{"credit", "Provably fair", 1, 0.001, std::nan("")}});
  const auto back = read_verification_rows(io);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].verdict, "Provably fair");
  EXPECT_TRUE(std::isnan(back[0].accuracy_pct));
}

TEST(Reports, CurvesHaveEpochsPlusOneRows) {
  std::stringstream io;
  write_curves(io, "Ours", constant_log(7, 0.5));
  const auto back = read_curves(io);
  EXPECT_EQ(back.size(), 8u);
  EXPECT_EQ(back.back().second.epoch, 7u);
  EXPECT_EQ(back.front().first, "Ours");
}

TEST(Reports, EmitWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "certfair_emit_test";
  std::filesystem::remove_all(dir);
  const auto written = emit_report(dir, {EvalReport{"a", "s", "ERM", 90, 3, 80, 1, 1}}, {},
                                   {{"ERM", constant_log(2, 1.0)}});
  EXPECT_EQ(written.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir / "table2.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "curves.csv"));
  EXPECT_FALSE(std::filesystem::exists(dir / "table1.csv"));
  EXPECT_THROW(emit_report(dir, {}), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace certfair
