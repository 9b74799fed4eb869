#include "occrelax/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "occrelax/io_util.hpp"

namespace occrelax::measure {

namespace {

std::vector<double> uniformAxis(Interval box, int count) {
  if (count < 1) throw ProblemError("grid axis needs at least one node");
  if (count == 1 || box.hi == box.lo) return {box.lo};
  std::vector<double> nodes(count);
  const double h = (box.hi - box.lo) / (count - 1);
  for (int k = 0; k < count; ++k) nodes[k] = box.lo + k * h;
  nodes.back() = box.hi;
  return nodes;
}

int broadcast(const std::vector<int>& v, std::size_t d, const char* what) {
  if (v.empty()) throw ProblemError(std::string("grid size for ") + what + " missing");
  if (v.size() == 1) return v[0];
  if (d >= v.size())
    throw ProblemError(std::string("too few grid sizes for ") + what);
  return v[d];
}

std::size_t product(const std::vector<std::vector<double>>& axes) {
  std::size_t p = 1;
  for (const auto& a : axes) p *= a.size();
  return p;
}

std::vector<double> unflatten(const std::vector<std::vector<double>>& axes,
                              std::size_t index) {
  // last axis varies fastest
  std::vector<double> p(axes.size());
  for (std::size_t d = axes.size(); d-- > 0;) {
    p[d] = axes[d][index % axes[d].size()];
    index /= axes[d].size();
  }
  return p;
}

std::size_t nearestFlat(const std::vector<std::vector<double>>& axes,
                        std::span<const double> v, const char* what) {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes.size(); ++d) {
    const auto& a = axes[d];
    const double slack =
        a.size() > 1 ? 0.5 * (a[1] - a[0]) + 1e-12 : 1e-9 * (1.0 + std::fabs(a[0]));
    if (v[d] < a.front() - slack || v[d] > a.back() + slack)
      throw ProblemError(std::string(what) + " value " + formatDouble(v[d]) +
                         " outside the grid box");
    const auto it = std::lower_bound(a.begin(), a.end(), v[d]);
    std::size_t k;
    if (it == a.begin()) {
      k = 0;
    } else if (it == a.end()) {
      k = a.size() - 1;
    } else {
      k = static_cast<std::size_t>(it - a.begin());
      // ties go to the lower node
      if (v[d] - a[k - 1] <= a[k] - v[d]) --k;
    }
    flat = flat * a.size() + k;
  }
  return flat;
}

}  // namespace

std::size_t Grid::yCount() const { return product(yAxes); }
std::size_t Grid::zCount() const { return product(zAxes); }
std::vector<double> Grid::yPoint(std::size_t j) const { return unflatten(yAxes, j); }
std::vector<double> Grid::zPoint(std::size_t k) const { return unflatten(zAxes, k); }

long Grid::findCell(const std::vector<int>& cell) const {
  std::size_t flat = 0;
  for (int d = 0; d < n; ++d) {
    if (cell[d] < 0 || cell[d] >= nx[d]) return -1;
    flat = flat * nx[d] + cell[d];
  }
  return cellLookup_[flat];
}

std::vector<double> Grid::interiorPoint(std::size_t i, std::size_t j,
                                        std::size_t k) const {
  std::vector<double> p = xNodes[i];
  const auto y = yPoint(j), z = zPoint(k);
  p.insert(p.end(), y.begin(), y.end());
  p.insert(p.end(), z.begin(), z.end());
  return p;
}

std::vector<double> Grid::boundaryPoint(std::size_t b, std::size_t j) const {
  std::vector<double> p = boundary[b].x;
  const auto y = yPoint(j);
  p.insert(p.end(), y.begin(), y.end());
  return p;
}

std::size_t Grid::nearestY(std::span<const double> y) const {
  return nearestFlat(yAxes, y, "y");
}
std::size_t Grid::nearestZ(std::span<const double> z) const {
  return nearestFlat(zAxes, z, "z");
}

Grid makeGrid(const core::VariationalProblem& problem, const GridSpec& spec) {
  problem.validate();
  Grid g;
  g.n = problem.n();
  g.m = problem.m;
  const auto box = problem.domain.boundingBox();
  std::size_t total = 1;
  for (int d = 0; d < g.n; ++d) {
    const int k = broadcast(spec.nx, d, "x");
    if (k < 1) throw ProblemError("nx must be positive");
    g.nx.push_back(k);
    g.xLo.push_back(box[d].lo);
    g.xH.push_back((box[d].hi - box[d].lo) / k);
    total *= k;
  }
  g.cellLookup_.assign(total, -1);
  std::vector<int> idx(g.n, 0);
  double raw = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int d = g.n; d-- > 0;) {
      idx[d] = static_cast<int>(rem % g.nx[d]);
      rem /= g.nx[d];
    }
    std::vector<double> x(g.n);
    double vol = 1.0;
    for (int d = 0; d < g.n; ++d) {
      x[d] = g.xLo[d] + (idx[d] + 0.5) * g.xH[d];
      vol *= g.xH[d];
    }
    if (!problem.domain.contains(x)) continue;
    g.cellLookup_[flat] = static_cast<long>(g.xNodes.size());
    g.xNodes.push_back(x);
    g.xCells.push_back(idx);
    g.cellVolume.push_back(vol);
    raw += vol;
  }
  if (g.xNodes.empty()) throw ProblemError("no grid cell centre lies in the domain");
  g.domainVolume = core::volume(problem.domain);
  if (problem.domain.kind() == core::DomainKind::Disk ||
      problem.domain.kind() == core::DomainKind::Corona) {
    const double s = g.domainVolume / raw;
    for (double& v : g.cellVolume) v *= s;
  }

  for (int i = 0; i < g.m; ++i)
    g.yAxes.push_back(uniformAxis(problem.yBox[i], broadcast(spec.ny, i, "y")));
  for (int c = 0; c < g.n * g.m; ++c)
    g.zAxes.push_back(uniformAxis(problem.zBox[c], broadcast(spec.nz, c, "z")));

  const int maxNx = *std::max_element(g.nx.begin(), g.nx.end());
  switch (problem.domain.kind()) {
    case core::DomainKind::Interval:
      g.boundary = core::boundaryNodes(problem.domain, 2);
      g.boundaryHalfWidth.assign(2, {0.0});
      break;
    case core::DomainKind::Box: {
      int count = 2 * g.n;
      for (int d = 1; d < g.n; ++d) count *= maxNx;
      g.boundary = core::boundaryNodes(problem.domain, count);
      for (const auto& b : g.boundary) {
        std::vector<double> hw(g.n, 0.0);
        for (int d = 0; d < g.n; ++d)
          if (b.normal[d] == 0.0) hw[d] = 0.5 * (box[d].hi - box[d].lo) / maxNx;
        g.boundaryHalfWidth.push_back(hw);
      }
      break;
    }
    case core::DomainKind::Disk:
    case core::DomainKind::Corona:
      g.boundary = core::boundaryNodes(problem.domain, 4 * maxNx);
      g.boundaryHalfWidth.assign(g.boundary.size(), std::vector<double>(g.n, 0.0));
      break;
  }
  return g;
}

// ---------------------------------------------------------------------------

GriddedMeasure::GriddedMeasure(std::shared_ptr<const Grid> grid)
    : weights(grid->xCount() * grid->yCount() * grid->zCount(), 0.0),
      boundaryWeights(grid->bCount() * grid->yCount(), 0.0),
      grid_(std::move(grid)) {}

double GriddedMeasure::mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double GriddedMeasure::boundaryMass() const {
  double s = 0.0;
  for (double w : boundaryWeights) s += w;
  return s;
}

double GriddedMeasure::integrate(const core::ScalarField& f) const {
  const Grid& g = *grid_;
  double s = 0.0;
  for (std::size_t i = 0; i < g.xCount(); ++i)
    for (std::size_t j = 0; j < g.yCount(); ++j)
      for (std::size_t k = 0; k < g.zCount(); ++k) {
        const double w = weights[g.node(i, j, k)];
        if (w != 0.0) s += w * f(g.interiorPoint(i, j, k));
      }
  return s;
}

double GriddedMeasure::integrateBoundary(const core::ScalarField& f) const {
  const Grid& g = *grid_;
  double s = 0.0;
  for (std::size_t b = 0; b < g.bCount(); ++b)
    for (std::size_t j = 0; j < g.yCount(); ++j) {
      const double w = boundaryWeights[g.bnode(b, j)];
      if (w != 0.0) s += w * f(g.boundaryPoint(b, j));
    }
  return s;
}

void GriddedMeasure::checkInvariants() const {
  for (double w : weights)
    if (w < 0.0) throw ProblemError("negative interior weight");
  for (double w : boundaryWeights)
    if (w < 0.0) throw ProblemError("negative boundary weight");
  const double vol = grid_->domainVolume;
  if (std::fabs(mass() - vol) > 1e-9 * vol)
    throw ProblemError("interior mass " + formatDouble(mass()) +
                       " differs from |Omega| = " + formatDouble(vol));
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> finiteDifferenceGradient(
    const Grid& grid, const std::vector<std::vector<double>>& values) {
  const int n = grid.n, m = grid.m;
  std::vector<std::vector<double>> grad(grid.xCount(),
                                        std::vector<double>(n * m, 0.0));
  for (std::size_t i = 0; i < grid.xCount(); ++i) {
    for (int l = 0; l < n; ++l) {
      auto cell = grid.xCells[i];
      cell[l] += 1;
      const long up = grid.findCell(cell);
      cell[l] -= 2;
      const long dn = grid.findCell(cell);
      const double h = grid.xH[l];
      for (int c = 0; c < m; ++c) {
        double d = 0.0;
        if (up >= 0 && dn >= 0)
          d = (values[up][c] - values[dn][c]) / (2.0 * h);
        else if (up >= 0)
          d = (values[up][c] - values[i][c]) / h;
        else if (dn >= 0)
          d = (values[i][c] - values[dn][c]) / h;
        grad[i][l * m + c] = d;
      }
    }
  }
  return grad;
}

GridFunction sampleFunction(const Grid& grid, const PointFunction& f) {
  GridFunction out;
  for (const auto& x : grid.xNodes) {
    auto v = f(x);
    if (v.size() != static_cast<std::size_t>(grid.m))
      throw ProblemError("grid function returned the wrong number of components");
    out.values.push_back(std::move(v));
  }
  out.gradient = finiteDifferenceGradient(grid, out.values);
  for (const auto& b : grid.boundary) out.boundaryValues.push_back(f(b.x));
  return out;
}

GriddedMeasure occupationLift(std::shared_ptr<const Grid> grid, const GridFunction& y) {
  GriddedMeasure mu(grid);
  const Grid& g = *grid;
  if (y.values.size() != g.xCount() || y.gradient.size() != g.xCount())
    throw ProblemError("grid function does not match the grid");
  for (std::size_t i = 0; i < g.xCount(); ++i) {
    const std::size_t j = g.nearestY(y.values[i]);
    const std::size_t k = g.nearestZ(y.gradient[i]);
    mu.weights[g.node(i, j, k)] += g.cellVolume[i];
  }
  if (!y.boundaryValues.empty()) {
    if (y.boundaryValues.size() != g.bCount())
      throw ProblemError("boundary values do not match the grid");
    for (std::size_t b = 0; b < g.bCount(); ++b) {
      const std::size_t j = g.nearestY(y.boundaryValues[b]);
      mu.boundaryWeights[g.bnode(b, j)] += g.boundary[b].weight;
    }
  }
  return mu;
}

std::vector<double> projectionProfile(const GriddedMeasure& mu) {
  const Grid& g = mu.grid();
  std::vector<double> out(g.xCount(), 0.0);
  const std::size_t per = g.yCount() * g.zCount();
  for (std::size_t i = 0; i < g.xCount(); ++i) {
    double s = 0.0;
    for (std::size_t q = 0; q < per; ++q) s += mu.weights[i * per + q];
    out[i] = s / g.cellVolume[i];
  }
  return out;
}

CentroidField centroid(const GriddedMeasure& mu) {
  const Grid& g = mu.grid();
  const std::size_t nz = g.zCount(), dims = g.zAxes.size();
  CentroidField c;
  c.marginal.assign(g.xCount() * g.yCount(), 0.0);
  c.Z.assign(g.xCount() * g.yCount(), {});
  std::vector<std::vector<double>> zs(nz);
  for (std::size_t k = 0; k < nz; ++k) zs[k] = g.zPoint(k);
  for (std::size_t f = 0; f < c.marginal.size(); ++f) {
    double mass = 0.0;
    std::vector<double> first(dims, 0.0);
    for (std::size_t k = 0; k < nz; ++k) {
      const double w = mu.weights[f * nz + k];
      if (w == 0.0) continue;
      mass += w;
      for (std::size_t d = 0; d < dims; ++d) first[d] += w * zs[k][d];
    }
    c.marginal[f] = mass;
    if (mass > 0.0) {
      for (double& v : first) v /= mass;
      c.Z[f] = std::move(first);
    }
  }
  return c;
}

GriddedMeasure concentrate(const GriddedMeasure& mu) {
  const Grid& g = mu.grid();
  const CentroidField c = centroid(mu);
  GriddedMeasure out(mu.gridPtr());
  out.boundaryWeights = mu.boundaryWeights;
  const std::size_t nz = g.zCount();
  for (std::size_t f = 0; f < c.marginal.size(); ++f) {
    if (c.Z[f].empty()) continue;
    out.weights[f * nz + g.nearestZ(c.Z[f])] += c.marginal[f];
  }
  return out;
}

double snappingError(const GriddedMeasure& mu, const core::ScalarField& L) {
  const Grid& g = mu.grid();
  const CentroidField c = centroid(mu);
  double err = 0.0;
  for (std::size_t f = 0; f < c.marginal.size(); ++f) {
    if (c.Z[f].empty()) continue;
    const std::size_t i = f / g.yCount(), j = f % g.yCount();
    auto exact = g.xNodes[i];
    const auto y = g.yPoint(j);
    exact.insert(exact.end(), y.begin(), y.end());
    auto snapped = exact;
    exact.insert(exact.end(), c.Z[f].begin(), c.Z[f].end());
    const auto zs = g.zPoint(g.nearestZ(c.Z[f]));
    snapped.insert(snapped.end(), zs.begin(), zs.end());
    err += c.marginal[f] * std::fabs(L(snapped) - L(exact));
  }
  return err;
}

// ---------------------------------------------------------------------------

namespace {

std::string header(const Grid& g, bool withZ) {
  std::string h;
  for (int d = 0; d < g.n; ++d) h += "x" + std::to_string(d + 1) + ",";
  for (int i = 0; i < g.m; ++i) h += "y" + std::to_string(i + 1) + ",";
  if (withZ)
    for (int l = 0; l < g.n; ++l)
      for (int i = 0; i < g.m; ++i)
        h += "z" + std::to_string(l + 1) + std::to_string(i + 1) + ",";
  return h + "weight\n";
}

void appendRow(std::string& out, const std::vector<double>& p, double w) {
  for (double v : p) out += formatDouble(v) + ",";
  out += formatDouble(w) + "\n";
}

std::vector<std::vector<double>> parseRows(const std::string& text,
                                           std::size_t columns) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(parseDouble(cell));
    if (row.size() != columns)
      throw ProblemError("measure CSV line " + std::to_string(lineNo) + " has " +
                         std::to_string(row.size()) + " columns, expected " +
                         std::to_string(columns));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string interiorCsv(const GriddedMeasure& mu) {
  const Grid& g = mu.grid();
  std::string out = header(g, true);
  for (std::size_t i = 0; i < g.xCount(); ++i)
    for (std::size_t j = 0; j < g.yCount(); ++j)
      for (std::size_t k = 0; k < g.zCount(); ++k) {
        const double w = mu.weights[g.node(i, j, k)];
        if (w > 0.0) appendRow(out, g.interiorPoint(i, j, k), w);
      }
  return out;
}

std::string boundaryCsv(const GriddedMeasure& mu) {
  const Grid& g = mu.grid();
  std::string out = header(g, false);
  for (std::size_t b = 0; b < g.bCount(); ++b)
    for (std::size_t j = 0; j < g.yCount(); ++j) {
      const double w = mu.boundaryWeights[g.bnode(b, j)];
      if (w > 0.0) appendRow(out, g.boundaryPoint(b, j), w);
    }
  return out;
}

void writeCsv(const GriddedMeasure& mu, const std::string& interiorPath,
              const std::string& boundaryPath) {
  writeFileAtomic(interiorPath, interiorCsv(mu));
  writeFileAtomic(boundaryPath, boundaryCsv(mu));
}

GriddedMeasure readCsv(std::shared_ptr<const Grid> grid, const std::string& interiorText,
                       const std::string& boundaryText) {
  const Grid& g = *grid;
  GriddedMeasure mu(grid);
  const std::size_t n = g.n, m = g.m;
  std::map<std::vector<double>, std::size_t> xIndex, bIndex;
  for (std::size_t i = 0; i < g.xCount(); ++i) xIndex[g.xNodes[i]] = i;
  for (std::size_t b = 0; b < g.bCount(); ++b) bIndex[g.boundary[b].x] = b;

  for (const auto& row : parseRows(interiorText, n + m + n * m + 1)) {
    const std::vector<double> x(row.begin(), row.begin() + n);
    const auto it = xIndex.find(x);
    if (it == xIndex.end()) throw ProblemError("measure CSV row off the x grid");
    const std::span<const double> r(row);
    const std::size_t j = g.nearestY(r.subspan(n, m));
    const std::size_t k = g.nearestZ(r.subspan(n + m, n * m));
    if (g.yPoint(j) != std::vector<double>(row.begin() + n, row.begin() + n + m) ||
        g.zPoint(k) != std::vector<double>(row.begin() + n + m, row.end() - 1))
      throw ProblemError("measure CSV row off the y/z grid");
    mu.weights[g.node(it->second, j, k)] += row.back();
  }
  for (const auto& row : parseRows(boundaryText, n + m + 1)) {
    const std::vector<double> x(row.begin(), row.begin() + n);
    const auto it = bIndex.find(x);
    if (it == bIndex.end()) throw ProblemError("boundary CSV row off the boundary grid");
    const std::span<const double> r(row);
    const std::size_t j = g.nearestY(r.subspan(n, m));
    mu.boundaryWeights[g.bnode(it->second, j)] += row.back();
  }
  return mu;
}

}  // namespace occrelax::measure
