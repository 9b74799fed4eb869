#include "occrelax/sheets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "occrelax/io_util.hpp"

namespace occrelax::sheets {

namespace {

constexpr double kPlateauTol = 1e-9;
constexpr int kFallbackSheets = 16;
constexpr int kMaxExactSheets = 64;

void requireCodimOne(const measure::Grid& g) {
  if (g.m != 1)
    throw CodimensionError("codimension " + std::to_string(g.m) +
                           " is not supported; sheets need m = 1");
}

double squaredDistance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

/// Smallest j with cdf[j] <= r (up to the plateau tolerance), where cdf is
/// nonincreasing and ends at -1.
std::size_t quantile(const double* rho, std::size_t count, double r) {
  for (std::size_t j = 0; j < count; ++j)
    if (rho[j] <= r + kPlateauTol) return j;
  return count - 1;
}

/// Right-closed normalised cumulative mass, negated; the last entry with
/// mass pins exactly -1.
void negatedCdf(const double* mass, std::size_t count, double total, double* out) {
  std::size_t last = 0;
  for (std::size_t j = 0; j < count; ++j)
    if (mass[j] > 0.0) last = j;
  double acc = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    acc += mass[j];
    out[j] = j >= last ? -1.0 : std::clamp(-acc / total, -1.0, 0.0);
  }
}

double positivePart(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

std::size_t DensityField::source(std::size_t i) const {
  for (std::size_t e = 0; e < emptyColumns.size(); ++e)
    if (emptyColumns[e] == i) return sourceColumn[e];
  return i;
}

DensityField density(const measure::GriddedMeasure& mu) {
  const measure::Grid& g = mu.grid();
  requireCodimOne(g);
  const std::size_t nx = g.xCount(), ny = g.yCount(), nz = g.zCount();
  DensityField rho;
  rho.xCount = nx;
  rho.yCount = ny;
  rho.values.assign(nx * ny, 0.0);
  rho.columnMass.assign(nx, 0.0);

  std::vector<double> marginal(nx * ny, 0.0);
  for (std::size_t f = 0; f < nx * ny; ++f)
    for (std::size_t k = 0; k < nz; ++k) marginal[f] += mu.weights[f * nz + k];
  double maxMass = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) rho.columnMass[i] += marginal[i * ny + j];
    maxMass = std::max(maxMass, rho.columnMass[i]);
  }
  if (!(maxMass > 0.0)) throw ProblemError("measure has no interior mass");

  std::vector<std::size_t> filled;
  for (std::size_t i = 0; i < nx; ++i) {
    if (rho.columnMass[i] <= 1e-14 * maxMass) {
      rho.emptyColumns.push_back(i);
      continue;
    }
    filled.push_back(i);
    negatedCdf(&marginal[i * ny], ny, rho.columnMass[i], &rho.values[i * ny]);
  }
  for (std::size_t i : rho.emptyColumns) {
    std::size_t best = filled.front();
    double bestD = std::numeric_limits<double>::infinity();
    for (std::size_t s : filled) {
      const double d = squaredDistance(g.xNodes[i], g.xNodes[s]);
      if (d < bestD) bestD = d, best = s;
    }
    rho.sourceColumn.push_back(best);
    std::copy_n(&rho.values[best * ny], ny, &rho.values[i * ny]);
  }
  return rho;
}

std::vector<double> plateaus(const DensityField& rho) {
  std::vector<double> v;
  for (double r : rho.values)
    if (r < -kPlateauTol) v.push_back(r);
  std::sort(v.begin(), v.end(), std::greater<>());
  std::vector<double> out;
  for (double r : v)
    if (out.empty() || out.back() - r > kPlateauTol) out.push_back(r);
  return out;
}

int defaultSheetCount(const DensityField& rho) {
  const auto p = plateaus(rho);
  if (p.empty()) return kFallbackSheets;
  auto divides = [&](int K) {
    for (double r : p) {
      const double scaled = -r * K;
      if (std::fabs(scaled - std::round(scaled)) > kPlateauTol * K) return false;
    }
    return true;
  };
  const int count = static_cast<int>(p.size());
  if (divides(count)) return count;
  for (int K = 1; K <= kMaxExactSheets; ++K)
    if (divides(K)) return K;
  return kFallbackSheets;
}

measure::GridFunction SheetFamily::function(std::size_t k) const {
  measure::GridFunction f;
  for (double v : values[k]) f.values.push_back({v});
  f.gradient = derivative[k];
  for (double v : boundaryValues[k]) f.boundaryValues.push_back({v});
  return f;
}

SheetFamily extractSheets(const DensityField& rho, const measure::GriddedMeasure& mu,
                          int K) {
  const measure::Grid& g = mu.grid();
  requireCodimOne(g);
  if (K < 1) throw ProblemError("sheet count must be positive");
  if (rho.xCount != g.xCount() || rho.yCount != g.yCount())
    throw ProblemError("density does not match the measure's grid");
  const std::size_t nx = g.xCount(), ny = g.yCount();
  const auto& yAxis = g.yAxes.front();
  const auto cent = measure::centroid(mu);

  SheetFamily fam;
  for (int k = 1; k <= K; ++k) {
    const double r = -(k - 0.5) / K;
    fam.levels.push_back(r);
    fam.weights.push_back(1.0 / K);
    std::vector<std::size_t> idx(nx);
    std::vector<double> vals(nx);
    std::vector<std::vector<double>> dphi(nx);
    std::vector<std::vector<double>> valueRows(nx);
    for (std::size_t i = 0; i < nx; ++i) {
      idx[i] = quantile(&rho.values[i * ny], ny, r);
      vals[i] = yAxis[idx[i]];
      valueRows[i] = {vals[i]};
      const auto& Z = cent.Z[rho.source(i) * ny + idx[i]];
      dphi[i] = Z.empty() ? std::vector<double>(g.n, 0.0) : Z;
    }
    fam.fdDerivative.push_back(measure::finiteDifferenceGradient(g, valueRows));
    fam.yIndex.push_back(std::move(idx));
    fam.values.push_back(std::move(vals));
    fam.derivative.push_back(std::move(dphi));
  }

  // boundary traces
  fam.boundaryValues.assign(K, std::vector<double>(g.bCount(), 0.0));
  std::vector<double> cdf(ny);
  for (std::size_t b = 0; b < g.bCount(); ++b) {
    double total = 0.0;
    for (std::size_t j = 0; j < ny; ++j) total += mu.boundaryWeights[g.bnode(b, j)];
    if (total > 0.0) {
      negatedCdf(&mu.boundaryWeights[g.bnode(b, 0)], ny, total, cdf.data());
      for (int k = 0; k < K; ++k)
        fam.boundaryValues[k][b] = yAxis[quantile(cdf.data(), ny, fam.levels[k])];
      continue;
    }
    std::size_t near = 0;
    double bestD = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nx; ++i) {
      const double d = squaredDistance(g.boundary[b].x, g.xNodes[i]);
      if (d < bestD) bestD = d, near = i;
    }
    for (int k = 0; k < K; ++k) fam.boundaryValues[k][b] = fam.values[k][near];
  }
  return fam;
}

SuperpositionReport checkSuperposition(const measure::GriddedMeasure& mu,
                                       const SheetFamily& family,
                                       const std::vector<core::ScalarField>& fields,
                                       const std::vector<core::ScalarField>& boundaryFields) {
  const measure::Grid& g = mu.grid();
  requireCodimOne(g);
  const std::size_t nx = g.xCount(), ny = g.yCount(), nz = g.zCount();
  std::vector<double> colMass(nx, 0.0);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t q = 0; q < ny * nz; ++q) colMass[i] += mu.weights[i * ny * nz + q];
  std::vector<double> bMass(g.bCount(), 0.0);
  for (std::size_t b = 0; b < g.bCount(); ++b)
    for (std::size_t j = 0; j < ny; ++j) bMass[b] += mu.boundaryWeights[g.bnode(b, j)];

  // both sides are accumulated per column in the same order, so f = 1
  // compares equal sums
  double nuTotal = 0.0;
  for (double w : family.weights) nuTotal += w;
  SuperpositionReport rep;
  for (const auto& f : fields) {
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      if (colMass[i] == 0.0) continue;
      double col = 0.0;
      for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t k = 0; k < nz; ++k) {
          const double w = mu.weights[g.node(i, j, k)];
          if (w != 0.0) col += w * f(g.interiorPoint(i, j, k));
        }
      double avg = 0.0;
      for (std::size_t k = 0; k < family.size(); ++k) {
        std::vector<double> p = g.xNodes[i];
        p.push_back(family.values[k][i]);
        p.insert(p.end(), family.derivative[k][i].begin(), family.derivative[k][i].end());
        avg += family.weights[k] * f(p);
      }
      lhs += col;
      rhs += colMass[i] * (avg / nuTotal);
    }
    const double dev = std::fabs(lhs - rhs);
    rep.deviation.push_back(dev);
    rep.maxDeviation = std::max(rep.maxDeviation, dev);
  }
  for (const auto& f : boundaryFields) {
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t b = 0; b < g.bCount(); ++b) {
      if (bMass[b] == 0.0) continue;
      for (std::size_t j = 0; j < ny; ++j) {
        const double w = mu.boundaryWeights[g.bnode(b, j)];
        if (w != 0.0) lhs += w * f(g.boundaryPoint(b, j));
      }
      double avg = 0.0;
      for (std::size_t k = 0; k < family.size(); ++k) {
        std::vector<double> p = g.boundary[b].x;
        p.push_back(family.boundaryValues[k][b]);
        avg += family.weights[k] * f(p);
      }
      rhs += bMass[b] * (avg / nuTotal);
    }
    rep.boundaryDeviation = std::max(rep.boundaryDeviation, std::fabs(lhs - rhs));
  }
  return rep;
}

Recovery recoverClassical(const core::VariationalProblem& problem,
                          const measure::GriddedMeasure& mu, double relaxedValue,
                          const RecoveryOptions& options) {
  const measure::Grid& g = mu.grid();
  if (problem.m != 1 || g.m != 1)
    throw CodimensionError("classical recovery needs codimension 1, got m = " +
                           std::to_string(problem.m));
  const auto rho = density(mu);
  Recovery rec;
  rec.relaxedValue = relaxedValue;
  rec.family = extractSheets(rho, mu, options.K > 0 ? options.K : defaultSheetCount(rho));
  const auto& fam = rec.family;

  // tolerances as in the assembly: relative to the field's range on the grid
  double fmax = 0.0, gmax = 0.0, fbmax = 0.0, gbmax = 0.0;
  for (std::size_t i = 0; i < g.xCount(); ++i)
    for (std::size_t j = 0; j < g.yCount(); ++j)
      for (std::size_t k = 0; k < g.zCount(); ++k) {
        const auto p = g.interiorPoint(i, j, k);
        fmax = std::max(fmax, std::fabs(problem.F(p)));
        gmax = std::max(gmax, std::fabs(problem.G(p)));
      }
  for (std::size_t b = 0; b < g.bCount(); ++b)
    for (std::size_t j = 0; j < g.yCount(); ++j) {
      const auto p = g.boundaryPoint(b, j);
      fbmax = std::max(fbmax, std::fabs(problem.Fb(p)));
      gbmax = std::max(gbmax, std::fabs(problem.Gb(p)));
    }
  auto tolOf = [](const std::optional<double>& given, double range) {
    return given ? *given : std::max(1e-6 * range, 1e-9);
  };
  const double tolF = tolOf(options.tol.F, fmax), tolG = tolOf(options.tol.G, gmax);
  const double tolFb = tolOf(options.tol.F, fbmax), tolGb = tolOf(options.tol.G, gbmax);

  std::vector<std::string> report;
  double bestValue = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < fam.size(); ++k) {
    SheetValue s;
    s.level = fam.levels[k];
    auto candidate = fam.function(k);
    relax::ClassicalOptions quiet;
    quiet.checkConstraints = false;
    s.value = relax::classicalValue(problem, g, candidate, quiet);
    auto fd = candidate;
    fd.gradient = fam.fdDerivative[k];
    s.fdValue = relax::classicalValue(problem, g, fd, quiet);

    for (std::size_t i = 0; i < g.xCount(); ++i) {
      std::vector<double> p = g.xNodes[i];
      p.push_back(fam.values[k][i]);
      p.insert(p.end(), fam.derivative[k][i].begin(), fam.derivative[k][i].end());
      s.maxF = std::max(s.maxF, std::fabs(problem.F(p)));
      s.maxG = std::max(s.maxG, positivePart(problem.G(p)));
    }
    for (std::size_t b = 0; b < g.bCount(); ++b) {
      std::vector<double> p = g.boundary[b].x;
      p.push_back(fam.boundaryValues[k][b]);
      s.maxFb = std::max(s.maxFb, std::fabs(problem.Fb(p)));
      s.maxGb = std::max(s.maxGb, positivePart(problem.Gb(p)));
    }
    double integralTol = 0.0;
    for (const auto& c : problem.integral) {
      double v = 0.0;
      for (std::size_t i = 0; i < g.xCount(); ++i) {
        std::vector<double> p = g.xNodes[i];
        p.push_back(fam.values[k][i]);
        p.insert(p.end(), fam.derivative[k][i].begin(), fam.derivative[k][i].end());
        v += g.cellVolume[i] * c.H(p);
      }
      const double viol = c.relation == core::Relation::LessEqualZero
                              ? positivePart(v)
                              : std::fabs(v - c.target);
      s.integralViolation = std::max(s.integralViolation, viol);
      integralTol = std::max(integralTol, 1e-6 * (1.0 + std::fabs(c.target)));
    }
    s.feasible = s.maxF <= tolF && s.maxG <= tolG && s.maxFb <= tolFb &&
                 s.maxGb <= tolGb && s.integralViolation <= integralTol;
    if (s.feasible && s.value < bestValue) {
      bestValue = s.value;
      rec.best = k;
    }
    if (!s.feasible)
      report.push_back("sheet r = " + formatDouble(s.level) + ": |F| " +
                       formatDouble(s.maxF) + ", G+ " + formatDouble(s.maxG) + ", |F_b| " +
                       formatDouble(s.maxFb) + ", G_b+ " + formatDouble(s.maxGb) +
                       ", integral violation " + formatDouble(s.integralViolation));
    rec.averageValue += fam.weights[k] * s.value;
    rec.sheets.push_back(s);
  }
  if (!std::isfinite(bestValue))
    throw relax::ConstraintViolation(
        "no sheet satisfies the constraints within tolerance", std::move(report));
  rec.bestValue = bestValue;
  rec.noGapAsserted = problem.L.convexInZ;
  if (!rec.noGapAsserted)
    rec.note = "L is not flagged convex in z; the recovered value is an upper bound only";
  else if (!rec.withinSlack(1e-6 * (1.0 + std::fabs(relaxedValue))))
    rec.note = "best sheet exceeds the relaxed value; compare on a finer grid";
  return rec;
}

std::string densityCsv(const DensityField& rho, const measure::Grid& g) {
  std::ostringstream out;
  for (int l = 0; l < g.n; ++l) out << 'x' << l + 1 << ',';
  out << "y1,rho\n";
  for (std::size_t i = 0; i < rho.xCount; ++i)
    for (std::size_t j = 0; j < rho.yCount; ++j) {
      for (double x : g.xNodes[i]) out << formatDouble(x) << ',';
      out << formatDouble(g.yAxes.front()[j]) << ',' << formatDouble(rho.at(i, j)) << '\n';
    }
  return out.str();
}

std::string sheetsCsv(const SheetFamily& family, const measure::Grid& g) {
  std::ostringstream out;
  out << 'r';
  for (int l = 0; l < g.n; ++l) out << ",x" << l + 1;
  out << ",phi";
  for (int l = 0; l < g.n; ++l) out << ",dphi" << l + 1;
  out << '\n';
  for (std::size_t k = 0; k < family.size(); ++k)
    for (std::size_t i = 0; i < g.xCount(); ++i) {
      out << formatDouble(family.levels[k]);
      for (double x : g.xNodes[i]) out << ',' << formatDouble(x);
      out << ',' << formatDouble(family.values[k][i]);
      for (double d : family.derivative[k][i]) out << ',' << formatDouble(d);
      out << '\n';
    }
  return out.str();
}

}  // namespace occrelax::sheets
