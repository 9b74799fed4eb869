#include "occrelax/relax.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "occrelax/io_util.hpp"
#include "occrelax/parallel.hpp"

namespace occrelax::relax {

namespace {

double defaultTolerance(double maxAbs) { return 1e-6 * maxAbs; }

}  // namespace

measure::GridSpec hintedGrid(const core::VariationalProblem& problem) {
  measure::GridSpec s;
  s.nx = problem.hint.nx.empty() ? std::vector<int>{16} : problem.hint.nx;
  s.ny = {problem.hint.ny};
  s.nz = {problem.hint.nz};
  return s;
}

BasisOptions hintedBasis(const core::VariationalProblem& problem) {
  BasisOptions b;
  b.degree = problem.hint.degree;
  if (problem.hint.yDegree >= 0) {
    b.yFamily = YFamily::Polynomial;
    b.yDegree = problem.hint.yDegree;
  }
  return b;
}

Assembly assemble(const core::VariationalProblem& problem, const measure::Grid& grid,
                  const TestBasis& basis, const Tolerances& tol) {
  Assembly a;
  const std::size_t nx = grid.xCount(), ny = grid.yCount(), nz = grid.zCount();

  // support filtering
  std::vector<double> fv(nx * ny * nz), gv(nx * ny * nz);
  parallel::forEach(nx * ny * nz, [&](std::size_t q) {
    const std::size_t i = q / (ny * nz), j = (q / nz) % ny, k = q % nz;
    const auto p = grid.interiorPoint(i, j, k);
    fv[q] = problem.F(p);
    gv[q] = problem.G(p);
  });
  double fmax = 0.0, gmax = 0.0;
  for (std::size_t q = 0; q < fv.size(); ++q) {
    fmax = std::max(fmax, std::fabs(fv[q]));
    gmax = std::max(gmax, std::fabs(gv[q]));
  }
  a.tolF = tol.F ? *tol.F : defaultTolerance(fmax);
  a.tolG = tol.G ? *tol.G : defaultTolerance(gmax);
  for (std::size_t q = 0; q < fv.size(); ++q)
    if (std::fabs(fv[q]) <= a.tolF && gv[q] <= a.tolG) a.interiorNode.push_back(q);

  std::vector<double> fb(grid.bCount() * ny), gb(grid.bCount() * ny);
  for (std::size_t b = 0; b < grid.bCount(); ++b)
    for (std::size_t j = 0; j < ny; ++j) {
      const auto p = grid.boundaryPoint(b, j);
      fb[grid.bnode(b, j)] = problem.Fb(p);
      gb[grid.bnode(b, j)] = problem.Gb(p);
    }
  double fbmax = 0.0, gbmax = 0.0;
  for (std::size_t q = 0; q < fb.size(); ++q) {
    fbmax = std::max(fbmax, std::fabs(fb[q]));
    gbmax = std::max(gbmax, std::fabs(gb[q]));
  }
  a.tolFb = tol.F ? *tol.F : defaultTolerance(fbmax);
  a.tolGb = tol.G ? *tol.G : defaultTolerance(gbmax);
  for (std::size_t q = 0; q < fb.size(); ++q)
    if (std::fabs(fb[q]) <= a.tolFb && gb[q] <= a.tolGb) a.boundaryNode.push_back(q);

  if (a.interiorNode.empty())
    throw ProblemError("support filtering removed every interior node (F/G "
                       "infeasible on this grid)");

  // columns
  auto& lp = a.lp;
  const std::size_t nInt = a.interiorNode.size(), nBnd = a.boundaryNode.size();
  std::vector<double> cost(nInt + nBnd);
  parallel::forEach(nInt, [&](std::size_t c) {
    const std::size_t q = a.interiorNode[c];
    cost[c] = problem.L(grid.interiorPoint(q / (ny * nz), (q / nz) % ny, q % nz));
  });
  for (std::size_t c = 0; c < nBnd; ++c) {
    const std::size_t q = a.boundaryNode[c];
    cost[nInt + c] = problem.Lb(grid.boundaryPoint(q / ny, q % ny));
  }
  for (double c : cost) {
    if (!std::isfinite(c)) throw ProblemError("objective is not finite on the grid");
    lp.addVariable(c);
  }

  // mass row
  a.massRow = 0;
  lp::Row mass;
  mass.relation = lp::Relation::Equal;
  mass.rhs = grid.domainVolume;
  for (std::size_t c = 0; c < nInt; ++c) mass.coef.push_back({static_cast<int>(c), 1.0});
  lp.addRow(std::move(mass));

  // weak rows; each (f, l) row is built independently, then appended in order
  a.firstWeakRow = lp.rows.size();
  const int n = grid.n;
  std::vector<lp::Row> weak(basis.size() * n);
  std::vector<std::vector<double>> cellLo(nx), cellHi(nx), patchLo(grid.bCount()),
      patchHi(grid.bCount());
  for (std::size_t i = 0; i < nx; ++i) cellBounds(grid, i, cellLo[i], cellHi[i]);
  for (std::size_t b = 0; b < grid.bCount(); ++b) patchBounds(grid, b, patchLo[b], patchHi[b]);
  std::vector<std::vector<double>> ys(ny), zs(nz);
  for (std::size_t j = 0; j < ny; ++j) ys[j] = grid.yPoint(j);
  for (std::size_t k = 0; k < nz; ++k) zs[k] = grid.zPoint(k);
  parallel::forEach(basis.size(), [&](std::size_t f) {
    for (int l = 0; l < n; ++l) {
      lp::Row& row = weak[f * n + l];
      row.relation = lp::Relation::Equal;
      for (std::size_t c = 0; c < nInt; ++c) {
        const std::size_t q = a.interiorNode[c];
        const std::size_t i = q / (ny * nz), j = (q / nz) % ny, k = q % nz;
        const double v = basis.interiorCoefficient(f, l, cellLo[i], cellHi[i], ys[j], zs[k]);
        if (v != 0.0) row.coef.push_back({static_cast<int>(c), v});
      }
      for (std::size_t c = 0; c < nBnd; ++c) {
        const std::size_t q = a.boundaryNode[c];
        const std::size_t b = q / ny, j = q % ny;
        const double nl = grid.boundary[b].normal[l];
        if (nl == 0.0) continue;
        const double v = basis.boundaryValue(f, patchLo[b], patchHi[b], ys[j]) * nl;
        if (v != 0.0) row.coef.push_back({static_cast<int>(nInt + c), -v});
      }
    }
  }, parallel::Schedule::Dynamic);
  for (auto& r : weak)
    if (!r.coef.empty()) lp.addRow(std::move(r));

  // integral rows
  a.firstIntegralRow = lp.rows.size();
  for (const auto& ic : problem.integral) {
    lp::Row row;
    row.relation = ic.relation == core::Relation::EqualTarget ? lp::Relation::Equal
                                                              : lp::Relation::LessEqual;
    row.rhs = ic.target;
    for (std::size_t c = 0; c < nInt; ++c) {
      const std::size_t q = a.interiorNode[c];
      const double v = ic.H(grid.interiorPoint(q / (ny * nz), (q / nz) % ny, q % nz));
      if (!std::isfinite(v)) throw ProblemError("integral constraint is not finite on the grid");
      if (v != 0.0) row.coef.push_back({static_cast<int>(c), v});
    }
    lp.addRow(std::move(row));
  }
  return a;
}

RelaxationResult solveRelaxation(const core::VariationalProblem& problem,
                                 std::shared_ptr<const measure::Grid> grid,
                                 const TestBasis& basis, const Tolerances& tol,
                                 const lp::SolveOptions& lpOptions) {
  const auto start = std::chrono::steady_clock::now();
  RelaxationResult res;
  const Assembly a = assemble(problem, *grid, basis, tol);
  res.rows = a.lp.rows.size();
  res.columns = static_cast<std::size_t>(a.lp.numVars);
  res.activeSupport = a.interiorNode.size() + a.boundaryNode.size();
  const lp::LpSolution sol = lp::solve(a.lp, lpOptions);
  res.status = sol.status;
  res.message = sol.message;
  res.iterations = sol.iterations;
  res.measure = measure::GriddedMeasure(grid);
  if (sol.status == lp::Status::Optimal) {
    res.value = sol.objective;
    res.certificate = sol.certificate;
    const std::size_t nInt = a.interiorNode.size();
    for (std::size_t c = 0; c < nInt; ++c) res.measure.weights[a.interiorNode[c]] = sol.x[c];
    for (std::size_t c = 0; c < a.boundaryNode.size(); ++c)
      res.measure.boundaryWeights[a.boundaryNode[c]] = sol.x[nInt + c];
    res.recomputedValue =
        res.measure.integrate(problem.L) + res.measure.integrateBoundary(problem.Lb);
    res.weakResidual = weakResidual(res.measure, basis);
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

RelaxationResult solveRelaxation(const core::VariationalProblem& problem,
                                 const RelaxOptions& options) {
  auto grid = std::make_shared<const measure::Grid>(measure::makeGrid(problem, options.grid));
  const TestBasis basis(*grid, options.basis);
  return solveRelaxation(problem, grid, basis, options.tol, options.lp);
}

double classicalValue(const core::VariationalProblem& problem, const measure::Grid& grid,
                      const measure::GridFunction& y, const ClassicalOptions& options) {
  if (y.values.size() != grid.xCount() || y.gradient.size() != grid.xCount())
    throw ProblemError("candidate does not match the grid");
  const double tolF = options.tol.F.value_or(1e-9);
  const double tolG = options.tol.G.value_or(1e-9);
  std::vector<std::string> violations;
  double value = 0.0;
  for (std::size_t i = 0; i < grid.xCount(); ++i) {
    std::vector<double> p = grid.xNodes[i];
    p.insert(p.end(), y.values[i].begin(), y.values[i].end());
    p.insert(p.end(), y.gradient[i].begin(), y.gradient[i].end());
    if (options.checkConstraints) {
      const double f = problem.F(p), g = problem.G(p);
      if (std::fabs(f) > tolF || g > tolG)
        violations.push_back("interior node " + std::to_string(i) +
                             ": F = " + formatDouble(f) + ", G = " + formatDouble(g));
    }
    value += grid.cellVolume[i] * problem.L(p);
  }
  if (!y.boundaryValues.empty()) {
    for (std::size_t b = 0; b < grid.bCount(); ++b) {
      std::vector<double> p = grid.boundary[b].x;
      p.insert(p.end(), y.boundaryValues[b].begin(), y.boundaryValues[b].end());
      if (options.checkConstraints) {
        const double f = problem.Fb(p), g = problem.Gb(p);
        if (std::fabs(f) > tolF || g > tolG)
          violations.push_back("boundary node " + std::to_string(b) +
                               ": F_b = " + formatDouble(f) + ", G_b = " + formatDouble(g));
      }
      value += grid.boundary[b].weight * problem.Lb(p);
    }
  }
  if (!violations.empty())
    throw ConstraintViolation("candidate violates the constraints at " +
                                  std::to_string(violations.size()) + " node(s)",
                              std::move(violations));
  return value;
}

core::VariationalProblem convexifiedDoubleWell() {
  auto p = core::builtin("double-well");
  p.name = "double-well-convexified";
  p.builtinName.clear();
  p.L = core::ScalarField::fromExpression("max(abs(z1)-1,0)", p.interiorArity());
  p.L.convexInZ = true;
  return p;
}

}  // namespace occrelax::relax
