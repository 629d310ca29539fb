#include "bayeswind/synth.hpp"

#include <cmath>
#include <sstream>

#include "bayeswind/error.hpp"
#include "bayeswind/spatial.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace bayeswind::synth {
namespace {

SynthConfig small(std::size_t steps = 2000) {
  SynthConfig c;
  c.n_steps = steps;
  return c;
}

TEST(Generate, ShapeAndTimestamps) {
  const auto s = generate(small(500));
  ASSERT_EQ(s.size(), 6u);
  for (std::size_t f = 0; f < 6; ++f) {
    EXPECT_EQ(s[f].farm_id, static_cast<int>(f));
    EXPECT_EQ(s[f].size(), 500u);
    EXPECT_EQ(s[f].step_seconds, 900);
    EXPECT_EQ(s[f].start, ingest::parse_iso8601("2018-01-01T00:00:00Z"));
  }
}

TEST(Generate, SameSeedSameOutputOtherSeedDiffers) {
  auto c = small(300);
  const auto a = generate(c);
  EXPECT_EQ(generate(c)[3].values, a[3].values);
  c.seed = 1;
  EXPECT_NE(generate(c)[3].values, a[3].values);
}

TEST(Generate, ValuesWithinCapacity) {
  auto c = small(3000);
  c.capacity = {50, 80, 100, 120, 150, 200};
  for (const auto& s : generate(c)) {
    for (double v : s.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, c.capacity[s.farm_id]);
    }
  }
}

TEST(Generate, LatentCorrelationAndVarianceMatchTarget) {
  auto c = small(40000);
  c.n_farms = 3;
  c.capacity.assign(3, 100.0);
  c.target_corr = SynthConfig::uniform_correlation(3, 0.75);
  const auto g = generate_with_latent(c);
  const double stationary = 0.3 * 0.3 / (1 - 0.95 * 0.95);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::pow(testing::population_std(g.latent[i]), 2), stationary, 0.15 * stationary);
    for (std::size_t j = i + 1; j < 3; ++j) {
      EXPECT_NEAR(spatial::pearson(g.latent[i], g.latent[j]), 0.75, 0.05);
    }
  }
}

TEST(Generate, IndependentFarmsAreUncorrelated) {
  auto c = small(50000);
  c.target_corr = numerics::Matrix::identity(6);
  const auto s = generate(c);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j)
      EXPECT_LT(std::fabs(spatial::pearson(s[i].values, s[j].values)), 0.1) << i << "," << j;
}

TEST(Generate, CorrelatedBlocksReachTarget) {
  auto c = small(50000);
  c.n_farms = 4;
  c.capacity.assign(4, 100.0);
  c.target_corr = numerics::Matrix{{1, 0.9, 0, 0}, {0.9, 1, 0, 0}, {0, 0, 1, 0.9}, {0, 0, 0.9, 1}};
  const auto s = generate(c);
  EXPECT_NEAR(spatial::pearson(s[0].values, s[1].values), 0.9, 0.07);
  EXPECT_NEAR(spatial::pearson(s[2].values, s[3].values), 0.9, 0.07);
}

TEST(Generate, LatentLagOneAutocorrelation) {
  const auto g = generate_with_latent(small(50000));
  for (const auto& z : g.latent) {
    const std::span<const double> all(z);
    EXPECT_NEAR(spatial::pearson(all.first(z.size() - 1), all.last(z.size() - 1)), 0.95, 0.05);
  }
}

TEST(Generate, CsvRoundTrip) {
  const auto s = generate(small(200));
  std::stringstream buf;
  ingest::write_csv(buf, s);
  const auto back = ingest::read_csv(buf);
  ASSERT_EQ(back.size(), s.size());
  EXPECT_EQ(back[0].size(), 200u);
}

TEST(SynthConfig, Validation) {
  auto expect_code = [](SynthConfig c, ErrorCode code) {
    try {
      c.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };
  SynthConfig c = small();
  c.ar_coeff = 1.0;
  expect_code(c, ErrorCode::kConfigInvalid);
  c = small();
  c.capacity.pop_back();
  expect_code(c, ErrorCode::kConfigInvalid);
  c = small();
  c.target_corr = SynthConfig::uniform_correlation(6, -0.5);
  expect_code(c, ErrorCode::kNotPositiveDefinite);
  c = small();
  c.target_corr(0, 1) = 0.1;
  expect_code(c, ErrorCode::kConfigInvalid);
}

TEST(InjectExtremeEvent, OnlyTouchesEventWindowAndFarms) {
  auto c = small(400);
  const auto base = generate(c);
  c.events.push_back({100, 50, {0, 2}, 30.0});
  const auto with = generate(c);
  for (std::size_t f = 0; f < 6; ++f) {
    for (std::size_t t = 0; t < 400; ++t) {
      const bool inside = t >= 100 && t < 150 && (f == 0 || f == 2);
      if (!inside) EXPECT_EQ(with[f].values[t], base[f].values[t]);
      EXPECT_GE(with[f].values[t], 0.0);
      EXPECT_LE(with[f].values[t], 100.0);
    }
  }
  double moved = 0.0;
  for (std::size_t t = 100; t < 150; ++t) moved += std::fabs(with[0].values[t] - base[0].values[t]);
  EXPECT_GT(moved, 0.0);
}

TEST(InjectExtremeEvent, ZeroMagnitudeIsIdentity) {
  const auto s = generate(small(300));
  numerics::RngStream rng(1);
  const auto out = inject_extreme_event(s, {50, 100, {0, 1, 2, 3, 4, 5}, 0.0},
                                        std::vector<double>(6, 100.0), rng);
  for (std::size_t f = 0; f < 6; ++f) EXPECT_EQ(out[f].values, s[f].values);
}

TEST(InjectExtremeEvent, RaisesVarianceInsideWindow) {
  const auto s = generate(small(600));
  numerics::RngStream rng(2);
  const auto out = inject_extreme_event(s, {200, 96, {0}, 30.0}, std::vector<double>(6, 100.0), rng);
  const std::span<const double> before = std::span<const double>(s[0].values).subspan(200, 96);
  const std::span<const double> after = std::span<const double>(out[0].values).subspan(200, 96);
  EXPECT_GT(testing::population_std(after), testing::population_std(before));
}

TEST(InjectExtremeEvent, OutOfRange) {
  const auto s = generate(small(100));
  const std::vector<double> cap(6, 100.0);
  numerics::RngStream rng(0);
  for (const ExtremeEvent& ev : {ExtremeEvent{90, 20, {0}, 10.0}, ExtremeEvent{0, 0, {0}, 10.0},
                                 ExtremeEvent{0, 10, {6}, 10.0}}) {
    try {
      inject_extreme_event(s, ev, cap, rng);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
    }
  }
}

}  // namespace
}  // namespace bayeswind::synth
