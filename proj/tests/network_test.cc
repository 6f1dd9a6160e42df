#include <cmath>

#include <gtest/gtest.h>

#include "mpd/errors.h"
#include "mpd/network.h"
#include "mpd/random.h"
#include "mpd/testing.h"

namespace mpd {
namespace {

double Rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

NetworkShape Shape(std::size_t i, std::size_t h, std::size_t o) { return NetworkShape{i, h, o}; }

TEST(ParamCount, Examples) {
  EXPECT_EQ(ParamCount(Shape(2, 500, 1)), 2001u);
  EXPECT_EQ(ParamCount(Shape(1, 1, 1)), 4u);
  EXPECT_EQ(ParamCount(Shape(3, 7, 2)), 44u);
}

TEST(FlatIndex, OrderAndRoundTrip) {
  const NetworkShape shape = Shape(3, 7, 2);
  EXPECT_EQ(FlatIndex(shape, {ParamKind::kW1, 0, 2}), 2u);
  EXPECT_EQ(FlatIndex(shape, {ParamKind::kW1, 1, 0}), 3u);
  EXPECT_EQ(FlatIndex(shape, {ParamKind::kB1, 0, 0}), 21u);
  EXPECT_EQ(FlatIndex(shape, {ParamKind::kW2, 1, 0}), 35u);
  EXPECT_EQ(FlatIndex(shape, {ParamKind::kB2, 1, 0}), 43u);
  for (std::size_t k = 0; k < ParamCount(shape); ++k) {
    EXPECT_EQ(FlatIndex(shape, RefFromFlat(shape, k)), k);
  }
  EXPECT_THROW(FlatIndex(shape, {ParamKind::kW1, 7, 0}), DomainError);
  EXPECT_THROW(FlatIndex(shape, {ParamKind::kB1, 0, 1}), DomainError);
  EXPECT_THROW(RefFromFlat(shape, 44), DomainError);
}

TEST(Forward, ZeroWeightsGiveOutputBias) {
  NetworkParams params(Shape(2, 3, 1));
  params.at({ParamKind::kB2, 0, 0}) = 0.7;
  for (double x : {-5.0, 0.0, 3.0}) {
    const double in[] = {x, -x};
    EXPECT_EQ(Forward(params, in)[0], 0.7);
  }
}

TEST(Forward, LinearBand) {
  const NetworkShape shape = Shape(2, 2, 1);
  const NetworkParams params(shape, {0.1, 0.2, -0.3, 0.1, 0.05, -0.05, 2.0, -1.0, 0.5});
  const double x[] = {0.5, -1.0};
  const double z0 = 0.1 * 0.5 + 0.2 * -1.0 + 0.05;
  const double z1 = -0.3 * 0.5 + 0.1 * -1.0 - 0.05;
  EXPECT_NEAR(Forward(params, x)[0], 2.0 * z0 - 1.0 * z1 + 0.5, 1e-15);
}

TEST(Forward, MatchesNaiveImplementation) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const NetworkShape shape = Shape(1 + rng.Below(4), 1 + rng.Below(8), 1 + rng.Below(3));
    const NetworkParams params = testing::RandomParams(rng, shape, 1.5);
    const Sample s = testing::RandomSample(rng, shape);
    const auto got = Forward(params, s.x);
    const auto want = testing::NaiveForward(params, s.x);
    for (std::size_t o = 0; o < shape.d_out; ++o) EXPECT_LE(Rel(got[o], want[o]), 1e-13);
  }
}

TEST(Forward, DimensionMismatch) {
  const NetworkParams params(Shape(2, 2, 1));
  const double x[] = {1.0};
  EXPECT_THROW(Forward(params, x), DomainError);
}

TEST(Loss, Examples) {
  NetworkParams params(Shape(1, 2, 2));
  std::vector<Sample> samples{{{1.0}, {0.6, 0.8}}, {{-2.0}, {1.0, 0.0}}};
  EXPECT_EQ(Loss(params, samples), 1.0);
  params.at({ParamKind::kB2, 0, 0}) = 0.6;
  params.at({ParamKind::kB2, 1, 0}) = 0.8;
  const std::vector<Sample> fit{{{3.0}, {0.6, 0.8}}};
  EXPECT_EQ(Loss(params, fit), 0.0);
  EXPECT_THROW(Loss(params, std::vector<Sample>{}), DomainError);
}

TEST(Loss, MatchesOracleSum) {
  Rng rng(2);
  const NetworkShape shape = Shape(3, 5, 2);
  const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
  std::vector<Sample> samples;
  for (int i = 0; i < 40; ++i) samples.push_back(testing::RandomSample(rng, shape));
  double want = 0.0;
  for (const Sample& s : samples) {
    const auto out = testing::NaiveForward(params, s.x);
    for (std::size_t o = 0; o < 2; ++o) want += (s.y[o] - out[o]) * (s.y[o] - out[o]);
  }
  EXPECT_LE(Rel(Loss(params, samples), want / 40.0), 1e-13);
}

TEST(OutputTrace, OutputBiasHasUnitSlope) {
  Rng rng(3);
  const NetworkShape shape = Shape(2, 4, 3);
  const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
  const double x[] = {0.3, -0.4};
  const auto out = Forward(params, x);
  const auto traces = OutputTrace(params, x, {ParamKind::kB2, 1, 0});
  ASSERT_EQ(traces.size(), 3u);
  EXPECT_EQ(traces[1].pieces(), 1u);
  EXPECT_EQ(traces[1].coeff(0, 1), 1.0);
  EXPECT_NEAR(traces[1](params.b2(1)), out[1], 1e-14);
  EXPECT_EQ(traces[0].coeff(0, 1), 0.0);
}

TEST(OutputTrace, SingleUnitMatchesComposition) {
  NetworkParams params(Shape(1, 1, 1), {0.25, 0.0, 1.0, 0.0});
  const double x[] = {2.0};
  const auto traces = OutputTrace(params, x, {ParamKind::kW1, 0, 0});
  ASSERT_EQ(traces.size(), 1u);
  EXPECT_EQ(traces[0], ComposeActivation(PwlActivation::LeakyHardTanh(), AffineOf(2, 0)));
}

TEST(OutputTrace, MatchesForwardWithOverride) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkShape shape = Shape(1 + rng.Below(3), 1 + rng.Below(6), 1 + rng.Below(3));
    const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
    const Sample s = testing::RandomSample(rng, shape);
    const ParamRef p = RefFromFlat(shape, rng.Below(ParamCount(shape)));
    const auto traces = OutputTrace(params, s.x, p);
    const double theta = rng.Uniform(-4, 4);
    NetworkParams probe = params;
    probe.at(p) = theta;
    const auto want = testing::NaiveForward(probe, s.x);
    for (std::size_t o = 0; o < shape.d_out; ++o) EXPECT_LE(Rel(traces[o](theta), want[o]), 1e-10);
  }
}

TEST(BuildMessage, OutputBiasIsOneQuadratic) {
  Rng rng(5);
  const NetworkShape shape = Shape(2, 3, 1);
  const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
  const Sample s = testing::RandomSample(rng, shape);
  const PwpFunction m = BuildMessage(params, s, {ParamKind::kB2, 0, 0});
  EXPECT_EQ(m.pieces(), 1u);
  EXPECT_EQ(m.coeff(0, 2), 1.0);
}

TEST(BuildMessage, SingleUnitSquaresTrace) {
  NetworkParams params(Shape(1, 1, 1), {0.25, 0.0, 1.0, 0.0});
  const Sample s{{2.0}, {0.0}};
  const PwpFunction m = BuildMessage(params, s, {ParamKind::kW1, 0, 0});
  EXPECT_EQ(m.pieces(), 3u);
  const PwpFunction f = ComposeActivation(PwlActivation::LeakyHardTanh(), AffineOf(2, 0));
  for (double t : {-3.0, -0.5, 0.1, 0.5, 2.0}) EXPECT_NEAR(m(t), f(t) * f(t), 1e-15);
}

TEST(BuildMessage, CurrentValueGivesSampleLoss) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const NetworkShape shape = Shape(1 + rng.Below(3), 1 + rng.Below(5), 1 + rng.Below(3));
    const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
    const Sample s = testing::RandomSample(rng, shape);
    const ParamRef p = RefFromFlat(shape, rng.Below(ParamCount(shape)));
    const PwpFunction m = BuildMessage(params, s, p);
    const std::vector<Sample> one{s};
    EXPECT_LE(Rel(m(params.at(p)), Loss(params, one)), 1e-12);
    const bool hidden = p.kind == ParamKind::kW1 || p.kind == ParamKind::kB1;
    if (hidden) {
      EXPECT_LE(m.pieces(), 3u);
    } else {
      EXPECT_EQ(m.pieces(), 1u);
    }
  }
}

TEST(BuildMessage, NonNegativeOnGrid) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkShape shape = Shape(2, 4, 2);
    const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
    const Sample s = testing::RandomSample(rng, shape);
    const ParamRef p = RefFromFlat(shape, rng.Below(ParamCount(shape)));
    EXPECT_GE(testing::GridScan(BuildMessage(params, s, p), -10, 10, 10001).value, -1e-12);
  }
}

TEST(ForwardCache, MessagesMatchAfterUpdates) {
  Rng rng(8);
  const NetworkShape shape = Shape(3, 6, 2);
  NetworkParams params = testing::RandomParams(rng, shape, 1.0);
  std::vector<Sample> samples;
  for (int i = 0; i < 16; ++i) samples.push_back(testing::RandomSample(rng, shape));
  ForwardCache cache(params, samples);
  for (int step = 0; step < 200; ++step) {
    const ParamRef p = RefFromFlat(shape, rng.Below(params.size()));
    const std::size_t s = rng.Below(samples.size());
    const PwpFunction fresh = BuildMessage(params, samples[s], p);
    const PwpFunction cached = cache.Message(params, s, p);
    for (double t : {-2.0, -0.3, 0.0, 0.7, 3.0}) EXPECT_LE(Rel(cached(t), fresh(t)), 1e-10);
    // Move the parameter and keep the cache in step.
    const double old = params.at(p);
    params.at(p) = rng.Uniform(-2, 2);
    cache.Update(params, p, old);
  }
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto want = Forward(params, samples[s].x);
    for (std::size_t o = 0; o < 2; ++o) EXPECT_LE(Rel(cache.outputs(s)[o], want[o]), 1e-10);
  }
}

TEST(Gradient, ZeroAtPerfectFit) {
  NetworkParams params(Shape(2, 3, 1));
  params.at({ParamKind::kB2, 0, 0}) = 0.5;
  const std::vector<Sample> samples{{{1.0, 2.0}, {0.5}}, {{-1.0, 0.0}, {0.5}}};
  for (double g : Gradient(params, samples)) EXPECT_EQ(g, 0.0);
}

TEST(Gradient, OutputBiasClosedForm) {
  Rng rng(9);
  const NetworkShape shape = Shape(2, 4, 1);
  const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
  std::vector<Sample> samples;
  for (int i = 0; i < 30; ++i) samples.push_back(testing::RandomSample(rng, shape));
  double want = 0.0;
  for (const Sample& s : samples) want += Forward(params, s.x)[0] - s.y[0];
  want *= 2.0 / 30.0;
  EXPECT_LE(Rel(Gradient(params, samples).back(), want), 1e-13);
}

TEST(Gradient, FiniteDifferences) {
  Rng rng(10);
  int checked = 0;
  while (checked < 30) {
    const NetworkShape shape = Shape(1 + rng.Below(3), 1 + rng.Below(4), 1 + rng.Below(2));
    const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
    std::vector<Sample> samples;
    for (int i = 0; i < 5; ++i) samples.push_back(testing::RandomSample(rng, shape));
    if (testing::KinkDistance(params, samples) < 1e-3) continue;
    ++checked;
    const auto analytic = Gradient(params, samples);
    const auto numeric = testing::FiniteDifferenceGradient(params, samples, 1e-6);
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      EXPECT_LE(Rel(analytic[k], numeric[k]), 1e-5) << k;
    }
  }
}

TEST(Gradient, DeterministicAcrossCalls) {
  Rng rng(11);
  const NetworkShape shape = Shape(2, 8, 1);
  const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
  std::vector<Sample> samples;
  for (int i = 0; i < 1000; ++i) samples.push_back(testing::RandomSample(rng, shape));
  EXPECT_EQ(Gradient(params, samples), Gradient(params, samples));
}

}  // namespace
}  // namespace mpd
