#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cyclegen/dataio.hpp"
#include "cyclegen/preprocess.hpp"
#include "test_util.hpp"

using namespace cyclegen;

namespace {

RawCycle two_point_cycle() {
  RawCycle c;
  c.cycle_index = 1;
  c.time_s = {0.0, 10.0};
  c.voltage_v = {3.0, 4.0};
  c.current_a = {1.5, 1.5};
  c.temperature_c = {25.0, 27.0};
  c.capacity_ah = 1.8;
  return c;
}

double max_upward_jump(const std::vector<double>& c) {
  double j = -1e300;
  for (std::size_t k = 1; k < c.size(); ++k) j = std::max(j, c[k] - c[k - 1]);
  return j;
}

}  // namespace

TEST(Downsample, HandInterpolatedMidpoint) {
  const auto d = downsample_cycle(two_point_cycle(), 3);
  EXPECT_EQ(d.time_s, (std::vector<double>{0.0, 5.0, 10.0}));
  EXPECT_EQ(d.voltage_v, (std::vector<double>{3.0, 3.5, 4.0}));
  EXPECT_EQ(d.temperature_c, (std::vector<double>{25.0, 26.0, 27.0}));
}

TEST(Downsample, ConstantChannelStaysConstant) {
  const auto d = downsample_cycle(two_point_cycle(), 7);
  ASSERT_EQ(d.current_a.size(), 7u);
  for (double v : d.current_a) EXPECT_DOUBLE_EQ(v, 1.5);
}

TEST(Downsample, SameLengthUniformGridIsIdentity) {
  RawCycle c;
  c.time_s = {0, 2, 4, 6, 8};
  c.voltage_v = {3.0, 3.3, 3.9, 4.1, 4.2};
  c.current_a = {1.5, 1.5, 1.2, 0.8, 0.1};
  c.temperature_c = {25, 26, 27, 26.5, 25.5};
  const auto d = downsample_cycle(c, 5);
  EXPECT_EQ(d.time_s, c.time_s);
  EXPECT_EQ(d.voltage_v, c.voltage_v);
  EXPECT_EQ(d.current_a, c.current_a);
  EXPECT_EQ(d.temperature_c, c.temperature_c);
}

TEST(Downsample, IrregularSamplingIsInterpolatedInTime) {
  RawCycle c;
  c.time_s = {0, 1, 10};
  c.voltage_v = {0, 1, 10};
  c.current_a = {0, 0, 0};
  c.temperature_c = {0, 0, 0};
  const auto d = downsample_cycle(c, 11);
  for (int k = 0; k <= 10; ++k) EXPECT_NEAR(d.voltage_v[k], k, 1e-12);
}

TEST(Downsample, LengthBelowTwoIsRejected) {
  EXPECT_THROW(downsample_cycle(two_point_cycle(), 1), std::invalid_argument);
}

TEST(MinMax, SpecExamples) {
  const std::vector<double> a{0, 5, 10};
  auto s = minmax_standardize(a);
  EXPECT_EQ(s.values, (std::vector<double>{-1, 0, 1}));
  EXPECT_EQ(s.scale.min, 0.0);
  EXPECT_EQ(s.scale.max, 10.0);
  EXPECT_FALSE(s.scale.degenerate);

  const std::vector<double> b{3.0, 3.6, 4.2};
  s = minmax_standardize(b);
  EXPECT_DOUBLE_EQ(s.values[0], -1.0);
  EXPECT_NEAR(s.values[1], 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.values[2], 1.0);
}

TEST(MinMax, ConstantSequenceIsDegenerateZeros) {
  const std::vector<double> a{7, 7, 7};
  const auto s = minmax_standardize(a);
  EXPECT_EQ(s.values, (std::vector<double>{0, 0, 0}));
  EXPECT_TRUE(s.scale.degenerate);
  EXPECT_EQ(destandardize(s.values, s.scale), a);
}

TEST(MinMax, EmptySequenceIsRejected) {
  EXPECT_THROW(minmax_standardize(std::vector<double>{}), std::invalid_argument);
}

TEST(MinMax, RandomSequencesHitBothEndsAndRoundTrip) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(2 + trial % 50);
    for (auto& v : x) v = u(gen);
    const auto s = minmax_standardize(x);
    EXPECT_EQ(*std::min_element(s.values.begin(), s.values.end()), -1.0);
    EXPECT_EQ(*std::max_element(s.values.begin(), s.values.end()), 1.0);
    const auto back = destandardize(s.values, s.scale);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(back[k], x[k], 1e-9 * std::max(1.0, std::abs(x[k])));
  }
}

TEST(Smooth, SpecExample) {
  const std::vector<double> c{4, 2, 3, 1, 0};
  const auto s = smooth_capacity(c, 1);
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s[0], 4.0);
  EXPECT_DOUBLE_EQ(s[1], 3.0);
  EXPECT_DOUBLE_EQ(s[2], 2.0);
  EXPECT_DOUBLE_EQ(s[3], 4.0 / 3.0);
  EXPECT_EQ(s[4], 0.0);
}

TEST(Smooth, ZeroWindowIsIdentity) {
  const std::vector<double> c{1.9, 2.0, 1.7, 1.8};
  EXPECT_EQ(smooth_capacity(c, 0), c);
}

TEST(Smooth, ConstantSeriesIsFixedPoint) {
  const std::vector<double> c(9, 1.25);
  EXPECT_EQ(smooth_capacity(c, 3), c);
}

TEST(Smooth, WindowLongerThanSeriesIsRejected) {
  EXPECT_THROW(smooth_capacity(std::vector<double>{1, 2, 3, 4}, 2), std::invalid_argument);
  EXPECT_THROW(smooth_capacity(std::vector<double>{1, 2, 3}, -1), std::invalid_argument);
}

TEST(Smooth, ReducesLargestRegenerationJump) {
  std::vector<double> caps;
  for (int k = 1; k <= 120; ++k) caps.push_back(2.0 * (1.0 - 0.005 * k) * (k % 23 == 0 ? 1.05 : 1.0));
  const auto smooth = smooth_capacity(caps, 5);
  EXPECT_GT(max_upward_jump(caps), 0.07);
  EXPECT_LT(max_upward_jump(smooth), max_upward_jump(caps));
}

TEST(Smooth, BoundarySpikesAreCopiedThrough) {
  std::vector<double> caps{2.0, 2.1, 1.9, 1.85, 1.8, 1.75, 1.7, 1.65};
  const auto smooth = smooth_capacity(caps, 2);
  EXPECT_EQ(smooth[1], 2.1);
  EXPECT_NEAR(max_upward_jump(smooth), max_upward_jump(caps), 1e-15);
}

TEST(Monotone, Flag) {
  EXPECT_TRUE(is_nonincreasing(std::vector<double>{3, 2, 2, 1}));
  EXPECT_FALSE(is_nonincreasing(std::vector<double>{3, 2, 2.5, 1}));
  EXPECT_TRUE(is_nonincreasing(std::vector<double>{}));
}

TEST(PreprocessDataset, NoiselessSurrogateChannelsSpanUnitInterval) {
  SurrogateConfig cfg;
  cfg.n_cycles = 12;
  cfg.noise_std = 0.0;
  const auto out = preprocess_dataset(synth_surrogate(cfg), 32, 2);
  ASSERT_EQ(out.size(), 12u);
  for (const auto& c : out) {
    for (const auto* ch : {&c.v_norm, &c.i_norm, &c.t_norm}) {
      ASSERT_EQ(ch->size(), 32u);
      EXPECT_EQ(*std::min_element(ch->begin(), ch->end()), -1.0);
      EXPECT_EQ(*std::max_element(ch->begin(), ch->end()), 1.0);
    }
  }
}

TEST(PreprocessDataset, SmoothingTouchesOnlyInteriorCycles) {
  SurrogateConfig cfg;
  cfg.n_cycles = 100;
  cfg.samples_per_cycle = 20;
  cfg.regen_prob = 0.3;
  const auto out = preprocess_dataset(synth_surrogate(cfg), 8, 2);
  for (const auto& c : out) {
    if (c.cycle_index <= 2 || c.cycle_index >= 99) {
      EXPECT_EQ(c.c_smooth, c.c_raw) << c.cycle_index;
    }
  }
  int changed = 0;
  for (const auto& c : out) changed += c.c_smooth != c.c_raw;
  EXPECT_GT(changed, 0);
}

TEST(PreprocessDataset, DenormalizationRecoversDownsampledSeries) {
  SurrogateConfig cfg;
  cfg.n_cycles = 4;
  const auto ds = synth_surrogate(cfg);
  const auto out = preprocess_dataset(ds, 16, 1);
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const auto d = downsample_cycle(ds.cycles[k], 16);
    const auto v = destandardize(out[k].v_norm, out[k].scale[0]);
    for (std::size_t t = 0; t < v.size(); ++t)
      EXPECT_NEAR(v[t], d.voltage_v[t], 1e-9 * std::abs(d.voltage_v[t]));
  }
}

TEST(PreprocessDataset, ProfileRowsAreChannels) {
  SurrogateConfig cfg;
  cfg.n_cycles = 3;
  const auto out = preprocess_dataset(synth_surrogate(cfg), 10, 1);
  const auto p = out[1].profile();
  ASSERT_EQ(p.rows(), 3);
  ASSERT_EQ(p.cols(), 10);
  for (int t = 0; t < 10; ++t) {
    EXPECT_EQ(p(0, t), out[1].v_norm[t]);
    EXPECT_EQ(p(1, t), out[1].i_norm[t]);
    EXPECT_EQ(p(2, t), out[1].t_norm[t]);
  }
}

TEST(PreprocessedIo, RoundTripIsExact) {
  testutil::TempDir dir;
  SurrogateConfig cfg;
  cfg.n_cycles = 6;
  const auto out = preprocess_dataset(synth_surrogate(cfg), 12, 1);
  write_preprocessed(out, dir / "p.csv", dir / "p.json");
  EXPECT_EQ(read_preprocessed(dir / "p.csv", dir / "p.json"), out);
}
