#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "mpd/errors.h"
#include "mpd/pwp.h"
#include "mpd/random.h"
#include "mpd/testing.h"

namespace mpd {
namespace {

using testing::GridScan;
using testing::RandomBoundedQuadratic;
using testing::RandomContinuousLinear;
using testing::RandomPwp;

PwpFunction Pwl(std::vector<double> mesh, std::vector<double> coeffs) {
  return PwpFunction(1, std::move(mesh), std::move(coeffs));
}

PwpFunction Pwq(std::vector<double> mesh, std::vector<double> coeffs) {
  return PwpFunction(2, std::move(mesh), std::move(coeffs));
}

double Rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

TEST(PwpFunction, RejectsBrokenInvariants) {
  EXPECT_THROW(Pwl({1.0, 1.0}, {0, 0, 0, 0, 0, 0}), DomainError);
  EXPECT_THROW(Pwl({2.0, 1.0}, {0, 0, 0, 0, 0, 0}), DomainError);
  EXPECT_THROW(Pwl({1.0}, {0, 0, 0}), DomainError);
  EXPECT_THROW(Pwl({std::numeric_limits<double>::infinity()}, {0, 0, 0, 0}), DomainError);
  EXPECT_THROW(Pwl({}, {std::nan(""), 0}), DomainError);
  EXPECT_THROW(PwpFunction(-1, {}, {}), DomainError);
}

TEST(Eval, AffineSinglePiece) { EXPECT_EQ(Pwl({}, {1, 2})(3.0), 7.0); }

TEST(Eval, LeakyHardTanhAsPwp) {
  const PwpFunction f = Pwl({-1.0, 1.0}, {-0.99, 0.01, 0.0, 1.0, 0.99, 0.01});
  EXPECT_NEAR(f(2.0), 1.01, 1e-15);
  EXPECT_NEAR(PwlActivation::LeakyHardTanh()(2.0), 1.01, 1e-15);
}

TEST(Eval, BreakpointBelongsToRightPiece) {
  const PwpFunction f = Pwq({1.0}, {0, 0, 1, -1, 2, 0});
  EXPECT_EQ(f.PieceIndex(1.0), 1u);
  EXPECT_EQ(f(1.0), 1.0);
  // A discontinuous function makes the convention visible.
  const PwpFunction g = Pwl({0.0}, {0, 0, 5, 0});
  EXPECT_EQ(g(0.0), 5.0);
  EXPECT_EQ(g(-1e-300), 0.0);
}

TEST(Eval, RejectsNonFinite) {
  const PwpFunction f = Pwl({}, {0, 1});
  EXPECT_THROW(f(std::numeric_limits<double>::infinity()), DomainError);
  EXPECT_THROW(f(std::nan("")), DomainError);
}

TEST(AffineOf, Examples) {
  EXPECT_EQ(AffineOf(0, 5)(-123.0), 5.0);
  EXPECT_EQ(AffineOf(1, 0)(4.25), 4.25);
  EXPECT_EQ(AffineOf(2, 1)(3.0), 7.0);
  EXPECT_THROW(AffineOf(std::nan(""), 0), DomainError);
}

TEST(ScaleAdd, Examples) {
  const PwpFunction f = ScaleAdd(AffineOf(1, 0), 3, 1);
  EXPECT_EQ(f, Pwl({}, {1, 3}));
  const PwpFunction g = ScaleAdd(Pwq({0.0, 1.0}, {1, 2, 3, 4, 5, 6, 7, 8, 9}), 0, 2.5);
  for (double x : {-3.0, 0.5, 10.0}) EXPECT_EQ(g(x), 2.5);
  EXPECT_THROW(ScaleAdd(f, std::numeric_limits<double>::infinity(), 0), DomainError);
}

TEST(ScaleAdd, PointwiseOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const PwpFunction f = RandomPwp(rng, 2, 10, -3, 3);
    const double a = rng.Uniform(-3, 3), b = rng.Uniform(-3, 3);
    const PwpFunction g = ScaleAdd(f, a, b);
    EXPECT_TRUE(std::equal(g.mesh().begin(), g.mesh().end(), f.mesh().begin(), f.mesh().end()));
    for (int k = 0; k < 100; ++k) {
      const double x = rng.Uniform(-5, 5);
      EXPECT_LE(Rel(g(x), a * f(x) + b), 1e-12);
    }
  }
}

TEST(SumPwp, TwoAffine) {
  const PwpFunction fs[] = {AffineOf(1, 0), AffineOf(2, 1)};
  EXPECT_EQ(SumPwp(fs), Pwl({}, {1, 3}));
}

TEST(SumPwp, TwoRamps) {
  const PwpFunction fs[] = {Pwl({0.0}, {0, 0, 0, 1}), Pwl({1.0}, {1, 0, 0, 1})};
  EXPECT_EQ(SumPwp(fs), Pwl({0.0, 1.0}, {1, 0, 1, 1, 0, 2}));
}

TEST(SumPwp, Errors) {
  EXPECT_THROW(SumPwp({}), DomainError);
  const PwpFunction mixed[] = {AffineOf(1, 0), Pwq({}, {0, 0, 1})};
  EXPECT_THROW(SumPwp(mixed), DomainError);
}

TEST(SumPwp, CoincidentBreakpointsMerge) {
  const double eps = 1e-14;
  const PwpFunction fs[] = {Pwl({1.0}, {0, 0, 0, 1}), Pwl({1.0 + eps}, {0, 0, 0, -1})};
  const PwpFunction h = SumPwp(fs);
  ASSERT_EQ(h.mesh().size(), 1u);
  EXPECT_EQ(h.mesh()[0], 1.0);
}

TEST(SumPwp, RandomOracleMeshAndOrder) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PwpFunction> fs;
    const std::size_t k = 1 + rng.Below(8);
    for (std::size_t i = 0; i < k; ++i) fs.push_back(RandomPwp(rng, 2, 12, -4, 4));
    const PwpFunction h = SumPwp(fs);

    std::vector<double> all;
    for (const auto& f : fs) all.insert(all.end(), f.mesh().begin(), f.mesh().end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    EXPECT_TRUE(std::equal(h.mesh().begin(), h.mesh().end(), all.begin(), all.end()));

    double left = 0.0;
    for (const auto& f : fs) left += f.coeff(0, 2);
    EXPECT_NEAR(h.coeff(0, 2), left, 1e-12);

    for (int p = 0; p < 200; ++p) {
      const double x = rng.Uniform(-6, 6);
      double want = 0.0;
      for (const auto& f : fs) want += f(x);
      EXPECT_LE(Rel(h(x), want), 1e-9);
    }
    std::vector<PwpFunction> shuffled;
    for (std::size_t i : rng.Permutation(k)) shuffled.push_back(fs[i]);
    EXPECT_EQ(SumPwp(shuffled), h);
  }
}

TEST(ComposeActivation, ScaledIdentity) {
  const PwpFunction g = ComposeActivation(PwlActivation::LeakyHardTanh(), AffineOf(2, 0));
  ASSERT_EQ(g.pieces(), 3u);
  EXPECT_EQ(g.mesh()[0], -0.5);
  EXPECT_EQ(g.mesh()[1], 0.5);
  const double want[] = {-0.99, 0.02, 0.0, 2.0, 0.99, 0.02};
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(g.coeffs()[k], want[k], 1e-15) << k;
}

TEST(ComposeActivation, ConstantInsideBand) {
  const PwpFunction g = ComposeActivation(PwlActivation::LeakyHardTanh(), AffineOf(0, 0.3));
  EXPECT_EQ(g.pieces(), 1u);
  EXPECT_NEAR(g(17.0), 0.3, 1e-16);
}

TEST(ComposeActivation, BothPiecesCrossBothKinks) {
  // |theta| - 2 falls through both kinks on the left and rises through them
  // on the right.
  const PwpFunction inner = Pwl({0.0}, {-2, -1, -2, 1});
  const PwpFunction g = ComposeActivation(PwlActivation::LeakyHardTanh(), inner);
  EXPECT_EQ(g.pieces(), 2u + 2u * 2u);
  const std::vector<double> mesh(g.mesh().begin(), g.mesh().end());
  EXPECT_EQ(mesh, (std::vector<double>{-3.0, -1.0, 0.0, 1.0, 3.0}));
}

TEST(ComposeActivation, RequiresLinearInner) {
  EXPECT_THROW(ComposeActivation(PwlActivation::LeakyHardTanh(), Pwq({}, {0, 0, 1})),
               DomainError);
}

TEST(ComposeActivation, RandomOracleAndContinuity) {
  Rng rng(3);
  const PwlActivation act = PwlActivation::LeakyHardTanh();
  for (int trial = 0; trial < 100; ++trial) {
    const PwpFunction inner = RandomContinuousLinear(rng, 6, -3, 3);
    const PwpFunction g = ComposeActivation(act, inner);
    EXPECT_LE(g.pieces(), inner.pieces() * 3);
    for (int p = 0; p < 100; ++p) {
      const double x = rng.Uniform(-6, 6);
      EXPECT_LE(Rel(g(x), act(inner(x))), 1e-12);
    }
    for (std::size_t r = 1; r < g.pieces(); ++r) {
      const double at = g.mesh()[r - 1];
      EXPECT_LE(std::abs(g.EvalPiece(r - 1, at) - g.EvalPiece(r, at)), 1e-9);
    }
  }
}

TEST(SquareResidual, Examples) {
  EXPECT_EQ(SquareResidual(0.0, AffineOf(1, 0)), Pwq({}, {0, 0, 1}));
  EXPECT_EQ(SquareResidual(1.0, Pwl({0.0}, {0, 0, 0, 1})), Pwq({0.0}, {1, 0, 0, 1, -2, 1}));
}

TEST(SquareResidual, RandomOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const PwpFunction f = RandomPwp(rng, 1, 8, -3, 3);
    const double y = rng.Uniform(-2, 2);
    const PwpFunction g = SquareResidual(y, f);
    for (int p = 0; p < 100; ++p) {
      const double x = rng.Uniform(-5, 5);
      EXPECT_LE(Rel(g(x), (y - f(x)) * (y - f(x))), 1e-12);
    }
  }
}

TEST(GlobalMin, SingleQuadratic) {
  const MinResult m = GlobalMin(Pwq({}, {3, -2, 1}), 0.0);
  EXPECT_EQ(m.argmin, 1.0);
  EXPECT_EQ(m.min_value, 2.0);
}

TEST(GlobalMin, TwoPieces) {
  const MinResult m = GlobalMin(Pwq({0.0}, {0, 0, 1, 3, -4, 1}), 0.0);
  EXPECT_EQ(m.argmin, 2.0);
  EXPECT_EQ(m.min_value, -1.0);
  EXPECT_EQ(m.subdomain_index, 1u);
}

TEST(GlobalMin, UnboundedTails) {
  EXPECT_THROW(GlobalMin(Pwl({}, {0, 1}), 0.0), UnboundedBelow);
  EXPECT_THROW(GlobalMin(Pwq({0.0}, {0, 0, 1, 0, 0, -1}), 0.0), UnboundedBelow);
  EXPECT_THROW(GlobalMin(Pwq({0.0}, {0, 1, 0, 0, 0, 1}), 0.0), UnboundedBelow);
}

TEST(GlobalMin, ConstantReturnsHint) {
  const MinResult m = GlobalMin(PwpFunction::Constant(4.0, 2), 0.75);
  EXPECT_EQ(m.argmin, 0.75);
  EXPECT_EQ(m.min_value, 4.0);
}

TEST(GlobalMin, FlatBottomKeepsHint) {
  // Zero on [-1, 1], quadratic walls outside.
  const PwpFunction f = Pwq({-1.0, 1.0}, {1, 2, 1, 0, 0, 0, 1, -2, 1});
  EXPECT_EQ(GlobalMin(f, 0.3).argmin, 0.3);
  EXPECT_EQ(GlobalMin(f, 5.0).argmin, 1.0);
}

TEST(GlobalMin, TiesGoToHintThenSmallest) {
  // Two equal wells at -2 and 2.
  const PwpFunction f = Pwq({0.0}, {4, 4, 1, 4, -4, 1});
  EXPECT_EQ(GlobalMin(f, 1.5).argmin, 2.0);
  EXPECT_EQ(GlobalMin(f, -0.1).argmin, -2.0);
  EXPECT_EQ(GlobalMin(f, 0.0).argmin, -2.0);
}

TEST(GlobalMin, GridOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const PwpFunction f = RandomBoundedQuadratic(rng, 50);
    const MinResult m = GlobalMin(f, rng.Uniform(-4, 4));
    const auto grid = GridScan(f, -5.0, 5.0, 100001);
    EXPECT_LE(m.min_value, grid.value + 1e-8);
    EXPECT_NEAR(f(m.argmin), m.min_value, 1e-12);
    EXPECT_NEAR(m.min_value, grid.value, 1e-3);
    // Deterministic for equal inputs.
    EXPECT_EQ(GlobalMin(f, 0.5).argmin, GlobalMin(f, 0.5).argmin);
  }
}

TEST(TextFormat, RoundTripAndErrors) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const PwpFunction f = RandomPwp(rng, static_cast<int>(rng.Below(3)), 10, -3, 3);
    std::stringstream io;
    WriteText(io, f);
    EXPECT_EQ(ReadText(io), f);
  }
  std::stringstream bad("2 3\n0.5\n");
  EXPECT_THROW(ReadText(bad), DomainError);
}

TEST(PwlActivation, LeakyHardTanhShape) {
  const PwlActivation act = PwlActivation::LeakyHardTanh();
  EXPECT_EQ(act(0.5), 0.5);
  EXPECT_NEAR(act(-3.0), -1.02, 1e-15);
  EXPECT_EQ(act.Derivative(1.0), 0.01);
  EXPECT_EQ(act.Derivative(-1.0), 1.0);
  EXPECT_THROW(PwlActivation({0.0}, {1.0, 2.0, 3.0}, {0.0}), DomainError);
}

}  // namespace
}  // namespace mpd
