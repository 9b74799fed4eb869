#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "occrelax/gapx.hpp"

using namespace occrelax::gapx;

namespace {

constexpr double kPi = std::numbers::pi;

PolarField sample(const PolarGrid& g, double alpha) {
  PolarField h;
  h.values.resize(g.size());
  for (int i = 0; i < g.nr(); ++i)
    for (int j = 0; j < g.nt(); ++j) h.values[g.index(i, j)] = ubar(g.point(i, j), alpha);
  return h;
}

PolarField zeroField(const PolarGrid& g) {
  PolarField h;
  h.values.assign(g.size(), Vec2{0.0, 0.0});
  return h;
}

double angularDistance(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 2.0 * kPi);
  return std::min(d, 2.0 * kPi - d);
}

}  // namespace

TEST(Fields, Examples) {
  const Vec2 x{1.0, 0.0};
  EXPECT_NEAR(u0(x)[0], 1.0, 1e-15);
  EXPECT_NEAR(u0(x)[1], 0.0, 1e-15);
  EXPECT_NEAR(u1(x)[0], -1.0, 1e-15);
  EXPECT_NEAR(u1(x)[1], 0.0, 1e-15);
  for (double r : {0.1, 0.5, 0.9})
    for (double t : {0.3, 2.0, 5.5}) {
      const Vec2 p{r * std::cos(t), r * std::sin(t)};
      EXPECT_EQ(psi(p, u0(p)), 1.0);
      Mat2 z = du(p, 0);
      EXPECT_EQ(lagrangian(p, u0(p), z), 0.0);
      EXPECT_TRUE(inDelta(p, u0(p)));
    }
}

TEST(Fields, RampAndBump) {
  for (double r = 0.0; r <= 2.0; r += 0.01) EXPECT_EQ(ramp(-r), 1.0 - ramp(r));
  for (double r = -2.0; r <= 2.0; r += 0.01) EXPECT_LE(ramp(r - 0.01), ramp(r));
  EXPECT_EQ(ramp(1.0), 1.0);
  EXPECT_EQ(ramp(-1.0), 0.0);
  EXPECT_EQ(bump(0.5), 0.0);
  EXPECT_EQ(bump(1.0), 1.0);
  for (double q = 0.0; q <= 1.5; q += 0.01) EXPECT_LE(bump(q), bump(q + 0.01));
}

TEST(Fields, InvariantSuite) {
  for (const auto& c : checkInvariants(100000, 11)) EXPECT_TRUE(c.passed) << c.name << " " << c.worst;
}

TEST(Relaxed, ValueVanishes) {
  for (auto [nr, nt] : {std::pair{16, 64}, {32, 128}}) {
    const auto r = relaxedValue(nr, nt);
    EXPECT_TRUE(r.massOk);
    EXPECT_LE(r.value, 1e-8);
    EXPECT_NEAR(r.mass, kPi, 1e-12);
  }
  EXPECT_GT(relaxedValue(16, 64, 0.5, 0.5, 0.1).value, 0.0);
  EXPECT_FALSE(relaxedValue(16, 64, 0.25, 0.25).massOk);
}

TEST(Alpha0, ExactBranches) {
  const PolarGrid g(16, 64);
  const auto r0 = findAlpha0(g, sample(g, 0.0));
  EXPECT_NEAR(r0.alpha0, kPi, 1e-6);
  EXPECT_LE(std::fabs(r0.phi), g.area(g.nr() - 1));
  const auto r1 = findAlpha0(g, sample(g, kPi / 2));
  EXPECT_NEAR(r1.alpha0, kPi / 2 + kPi, 1e-6);
  EXPECT_FALSE(r0.degenerate);
}

// zeros of |B_a| - |B_a+2pi| repeat every 2 pi, so the shift is compared
// modulo 2 pi
TEST(Alpha0, TranslationEquivariant) {
  const PolarGrid g(16, 64);
  const double base = findAlpha0(g, sample(g, 0.0)).alpha0;
  for (double beta : {0.4, 1.0, 2.5, 3.0, 5.0, 8.0}) {
    const double a = findAlpha0(g, sample(g, beta)).alpha0;
    EXPECT_LE(angularDistance(a, base + beta), g.dtheta()) << beta;
  }
}

TEST(Alpha0, ZeroFieldIsDegenerate) {
  const PolarGrid g(16, 64);
  const auto r = findAlpha0(g, zeroField(g));
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.phi, 0.0);
}

TEST(ClassicalReport, ZeroFieldIsCaseA) {
  const PolarGrid g(16, 64);
  const auto rep = classicalLowerReport(g, zeroField(g));
  EXPECT_EQ(rep.caseId, 'A');
  EXPECT_NEAR(rep.caseABound, kThresholdE * kThresholdE * 3.0 * kPi / 8.0, 1e-15);
  EXPECT_NEAR(rep.caseABound, 7.01e-4, 1e-6);
  EXPECT_GT(rep.objective, rep.caseABound);
}

TEST(ClassicalReport, BranchFieldIsCaseB) {
  const PolarGrid g(16, 64);
  const auto rep = classicalLowerReport(g, sample(g, 0.0));
  EXPECT_EQ(rep.caseId, 'B');
  EXPECT_GE(rep.areaB, rep.coronaArea / 4.0);
  EXPECT_GE(rep.meanM, kMeanBound);
  EXPECT_GE(rep.pointwiseFraction, 0.99);
  EXPECT_GE(rep.derivativeLhs, rep.derivativeRhs);
  EXPECT_NEAR(rep.coronaArea, 3.0 * kPi / 4.0, 1e-12);
}

TEST(Search, ZeroStartDescends) {
  const PolarGrid g(16, 64);
  auto h = zeroField(g);
  const auto run = descend(g, h, 50, 0.05);
  double prev = run.initialObjective;
  for (double v : run.history) {
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_LE(run.finalObjective, run.initialObjective);
  EXPECT_GT(run.finalObjective, 0.0);
}

TEST(Search, RandomStartDescendsMonotonically) {
  const PolarGrid g(16, 64);
  auto h = randomField(g, 5);
  const auto run = descend(g, h, 40, 0.05);
  ASSERT_FALSE(run.history.empty());
  double prev = run.initialObjective;
  for (double v : run.history) {
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_LT(run.finalObjective, run.initialObjective);
}

TEST(Search, DeterministicInSeed) {
  SearchOptions o;
  o.inits = 3;
  o.steps = 20;
  const auto a = classicalSearch(o), b = classicalSearch(o);
  EXPECT_EQ(a.minObjective, b.minObjective);
  EXPECT_EQ(a.bestRun, b.bestRun);
  ASSERT_EQ(a.minimizer.values.size(), b.minimizer.values.size());
  for (std::size_t q = 0; q < a.minimizer.values.size(); ++q)
    EXPECT_EQ(a.minimizer.values[q], b.minimizer.values[q]);
  EXPECT_EQ(a.runs.size(), 3u + 3u);
}

TEST(Kernels, SerialMatchesParallel) {
  const PolarGrid g(16, 64);
  const auto h = randomField(g, 9);
  EXPECT_EQ(objectiveSerial(g, h), objectiveParallel(g, h));
  PolarField gs, gp;
  gradientSerial(g, h, gs);
  gradientParallel(g, h, gp);
  ASSERT_EQ(gs.values.size(), gp.values.size());
  for (std::size_t q = 0; q < gs.values.size(); ++q) EXPECT_EQ(gs.values[q], gp.values[q]);
}

TEST(Kernels, GradientMatchesFiniteDifference) {
  const PolarGrid g(8, 32);
  auto h = randomField(g, 3);
  PolarField grad;
  gradientSerial(g, h, grad);
  for (std::size_t q : {std::size_t{5}, std::size_t{77}, std::size_t{200}})
    for (int c = 0; c < 2; ++c) {
      const double eps = 1e-6, keep = h.values[q][c];
      h.values[q][c] = keep + eps;
      const double up = objectiveSerial(g, h);
      h.values[q][c] = keep - eps;
      const double down = objectiveSerial(g, h);
      h.values[q][c] = keep;
      EXPECT_NEAR(grad.values[q][c], (up - down) / (2 * eps),
                  1e-4 * (1.0 + std::fabs(grad.values[q][c])));
    }
}

TEST(Regularity, Probe) {
  const auto rep = regularityProbe(2000, 3);
  EXPECT_TRUE(std::isfinite(rep.maxRatio));
  EXPECT_LT(rep.maxRatioNearOrigin, 1e3);
  EXPECT_LE(rep.maxZGradientError, 1e-6);
  EXPECT_LE(rep.maxHessianError, 1e-6);
}
