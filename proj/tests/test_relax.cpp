#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "fixtures.hpp"
#include "occrelax/relax.hpp"

using namespace occrelax;
using namespace occrelax::relax;

namespace {

RelaxationResult solveHinted(const core::VariationalProblem& p, const lp::SolveOptions& lpo = {}) {
  auto g = std::make_shared<measure::Grid>(measure::makeGrid(p, hintedGrid(p)));
  const TestBasis basis(*g, hintedBasis(p));
  return solveRelaxation(p, g, basis, {}, lpo);
}

measure::GridFunction constantCandidate(const measure::Grid& g, double c) {
  return measure::sampleFunction(
      g, [c](std::span<const double>) { return std::vector<double>{c}; });
}

double classicalConstant(const std::string& name, double c) {
  const auto p = core::builtin(name);
  const auto g = measure::makeGrid(p, hintedGrid(p));
  return classicalValue(p, g, constantCandidate(g, c));
}

void expectConstantProfile(const measure::GriddedMeasure& mu) {
  const auto prof = measure::projectionProfile(mu);
  for (double v : prof) EXPECT_NEAR(v, 1.0, 1e-6);
}

}  // namespace

TEST(Assemble, SupportFiltering) {
  auto dw = core::builtin("double-well");
  dw.yBox = {{-1.0, 1.0}};
  auto g = fixture::intervalGrid(dw, 8, 5, 3);
  const auto a = assemble(dw, *g, TestBasis(*g, hintedBasis(dw)));
  ASSERT_FALSE(a.interiorNode.empty());
  for (std::size_t node : a.interiorNode) {
    const std::size_t j = (node / g->zCount()) % g->yCount();
    EXPECT_EQ(g->yAxes[0][j], 0.0);
  }

  const auto gi = core::builtin("gap-ineq");
  auto gg = std::make_shared<measure::Grid>(measure::makeGrid(gi, hintedGrid(gi)));
  const auto b = assemble(gi, *gg, TestBasis(*gg, hintedBasis(gi)));
  for (std::size_t node : b.interiorNode) {
    const double y = gg->yAxes[0][(node / gg->zCount()) % gg->yCount()];
    EXPECT_TRUE(y == 0.0 || y == 1.0) << y;
  }
}

TEST(Assemble, EmptySupportIsReported) {
  auto p = fixture::unitProblem({0.5, 1.0}, {-1.0, 1.0});
  p.F = core::ScalarField::fromExpression("1", p.interiorArity());
  auto g = fixture::intervalGrid(p, 4, 3, 3);
  EXPECT_THROW((void)assemble(p, *g, TestBasis(*g, {})), ProblemError);
}

TEST(Relax, BuiltinValues) {
  const auto dw = solveHinted(core::builtin("double-well"));
  ASSERT_EQ(dw.status, lp::Status::Optimal);
  EXPECT_NEAR(dw.value, 0.0, 1e-8);
  EXPECT_NEAR(dw.recomputedValue, 0.0, 1e-8);

  const auto gi = solveHinted(core::builtin("gap-ineq"));
  ASSERT_EQ(gi.status, lp::Status::Optimal);
  EXPECT_NEAR(gi.value, 0.1, 1e-6);

  const auto ge = solveHinted(core::builtin("gap-eq"));
  ASSERT_EQ(ge.status, lp::Status::Optimal);
  EXPECT_NEAR(ge.value, 0.5, 1e-6);

  const auto ts = solveHinted(core::builtin("two-sheet"));
  ASSERT_EQ(ts.status, lp::Status::Optimal);
  EXPECT_NEAR(ts.value, 0.0, 1e-8);
}

TEST(Relax, DoubleWellSplitsMassOnSlopes) {
  const auto r = solveHinted(core::builtin("double-well"));
  const auto& g = r.measure.grid();
  double plus = 0.0, minus = 0.0;
  for (std::size_t i = 0; i < g.xCount(); ++i) {
    plus += r.measure.weights[g.node(i, 0, g.nearestZ(std::vector<double>{1.0}))];
    minus += r.measure.weights[g.node(i, 0, g.nearestZ(std::vector<double>{-1.0}))];
  }
  EXPECT_NEAR(plus, 0.5, 1e-8);
  EXPECT_NEAR(minus, 0.5, 1e-8);
}

TEST(Relax, WeakRowForConstantTestFunction) {
  // phi = 1 reduces the weak row to sum w z = sum v n, the discrete
  // fundamental theorem of calculus
  const auto r = solveHinted(core::builtin("gap-ineq"));
  const auto& g = r.measure.grid();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.xCount(); ++i)
    for (std::size_t j = 0; j < g.yCount(); ++j)
      for (std::size_t k = 0; k < g.zCount(); ++k)
        lhs += r.measure.weights[g.node(i, j, k)] * g.zAxes[0][k];
  for (std::size_t b = 0; b < g.bCount(); ++b)
    for (std::size_t j = 0; j < g.yCount(); ++j)
      rhs += r.measure.boundaryWeights[g.bnode(b, j)] * g.boundary[b].normal[0];
  EXPECT_NEAR(lhs, rhs, 1e-9);
}

TEST(Relax, ClassicalValues) {
  EXPECT_NEAR(classicalConstant("double-well", 0.0), 1.0, 1e-9);
  EXPECT_NEAR(classicalConstant("gap-ineq", 1.0), 1.0, 1e-9);
  EXPECT_NEAR(classicalConstant("gap-eq", 2.0), 2.0, 1e-9);
}

TEST(Relax, ClassicalValueReportsViolations) {
  const auto p = core::builtin("gap-ineq");
  const auto g = measure::makeGrid(p, hintedGrid(p));
  EXPECT_THROW((void)classicalValue(p, g, constantCandidate(g, 0.5)), ConstraintViolation);
  ClassicalOptions loose;
  loose.checkConstraints = false;
  EXPECT_NEAR(classicalValue(p, g, constantCandidate(g, 0.5), loose), 0.5, 1e-12);
}

TEST(Relax, RelaxedBelowClassical) {
  const auto names = {"double-well", "gap-ineq", "gap-eq"};
  const double candidates[] = {0.0, 1.0, 2.0};
  std::size_t c = 0;
  for (const char* name : names) {
    const auto r = solveHinted(core::builtin(name));
    EXPECT_LE(r.value, classicalConstant(name, candidates[c++]) + 1e-9) << name;
  }
}

TEST(Relax, ProjectionProfileIsConstant) {
  for (const char* name : {"double-well", "gap-ineq", "gap-eq", "two-sheet"}) {
    SCOPED_TRACE(name);
    expectConstantProfile(solveHinted(core::builtin(name)).measure);
  }
}

TEST(Relax, ZRefinementNeverIncreasesValue) {
  const auto p = core::builtin("codim1-demo");
  double previous = INFINITY;
  for (int nz : {3, 5, 9}) {
    RelaxOptions o;
    o.grid = hintedGrid(p);
    o.grid.nx = {6, 6};
    o.grid.ny = {5};
    o.grid.nz = {nz};
    o.basis = hintedBasis(p);
    const auto r = solveRelaxation(p, o);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_LE(r.value, previous + 1e-9) << nz;
    previous = r.value;
  }
}

TEST(Relax, ConvexifiedDoubleWell) {
  const auto dw = solveHinted(core::builtin("double-well"));
  const auto cv = solveHinted(convexifiedDoubleWell());
  ASSERT_EQ(cv.status, lp::Status::Optimal);
  EXPECT_NEAR(cv.value, 0.0, 1e-8);
  EXPECT_LE(cv.value, dw.value + 1e-12);
}

TEST(Relax, SolverPathsAgree) {
  lp::SolveOptions primal, bland;
  primal.algorithm = lp::Algorithm::Primal;
  bland.algorithm = lp::Algorithm::Primal;
  bland.pricing = lp::Pricing::Bland;
  for (const char* name : {"gap-ineq", "gap-eq"}) {
    const double ref = solveHinted(core::builtin(name)).value;
    EXPECT_NEAR(solveHinted(core::builtin(name), primal).value, ref, 1e-9) << name;
    EXPECT_NEAR(solveHinted(core::builtin(name), bland).value, ref, 1e-9) << name;
  }
}

TEST(Relax, CertificateAndResidual) {
  const auto r = solveHinted(core::builtin("gap-eq"));
  EXPECT_TRUE(r.certificate.ok());
  EXPECT_LE(r.weakResidual, 1e-7);
  EXPECT_NEAR(r.recomputedValue, r.value, 1e-9);
}
