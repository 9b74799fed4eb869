#include "occrelax/basis.hpp"

#include <algorithm>
#include <cmath>

namespace occrelax::relax {

namespace {

// P_p(s) and P_p'(s) by the three-term recurrence.
void legendre(int p, double s, double& v, double& dv) {
  double p0 = 1.0, p1 = s, d0 = 0.0, d1 = 1.0;
  if (p == 0) {
    v = 1.0;
    dv = 0.0;
    return;
  }
  for (int k = 1; k < p; ++k) {
    const double p2 = ((2 * k + 1) * s * p1 - k * p0) / (k + 1);
    const double d2 = d0 + (2 * k + 1) * p1;
    p0 = p1;
    p1 = p2;
    d0 = d1;
    d1 = d2;
  }
  v = p1;
  dv = d1;
}

// Antiderivative of P_p: (P_{p+1} - P_{p-1}) / (2p + 1), and s for p = 0.
double legendreIntegral(int p, double s) {
  if (p == 0) return s;
  double hi, lo, d;
  legendre(p + 1, s, hi, d);
  legendre(p - 1, s, lo, d);
  return (hi - lo) / (2 * p + 1);
}

}  // namespace

double Factor::value(double t) const {
  if (kind == Kind::Legendre) {
    double v, dv;
    legendre(power, (t - center) / halfWidth, v, dv);
    return v;
  }
  if (t <= left || t >= right) return 0.0;
  return t <= peak ? (t - left) / (peak - left) : (right - t) / (right - peak);
}

double Factor::derivative(double t) const {
  if (kind == Kind::Legendre) {
    double v, dv;
    legendre(power, (t - center) / halfWidth, v, dv);
    return dv / halfWidth;
  }
  if (t <= left || t >= right) return 0.0;
  return t < peak ? 1.0 / (peak - left) : -1.0 / (right - peak);
}

double Factor::average(double a, double b) const {
  if (b <= a) return value(a);
  if (kind == Kind::Legendre) {
    const double sa = (a - center) / halfWidth, sb = (b - center) / halfWidth;
    return (legendreIntegral(power, sb) - legendreIntegral(power, sa)) / (sb - sa);
  }
  // exact trapezoids between the breakpoints inside [a, b]
  double knots[5] = {a, left, peak, right, b};
  std::sort(knots + 1, knots + 4);
  double integral = 0.0, prev = a;
  for (int k = 1; k < 5; ++k) {
    const double t = std::clamp(knots[k], a, b);
    if (t > prev) integral += 0.5 * (t - prev) * (value(prev) + value(t));
    prev = std::max(prev, t);
  }
  return integral / (b - a);
}

double Factor::derivativeAverage(double a, double b) const {
  if (b <= a) return derivative(a);
  return (value(b) - value(a)) / (b - a);
}

namespace {

Factor polynomial(int p, double lo, double hi) {
  Factor f;
  f.kind = Factor::Kind::Legendre;
  f.power = p;
  f.center = 0.5 * (lo + hi);
  f.halfWidth = hi > lo ? 0.5 * (hi - lo) : 1.0;
  return f;
}

Factor hat(double l, double c, double r) {
  Factor f;
  f.kind = Factor::Kind::Hat;
  f.left = l;
  f.peak = c;
  f.right = r;
  return f;
}

// All multi-indices of the given length with total degree <= d, in
// lexicographic order of the exponent vector.
void multiIndices(int length, int d, std::vector<std::vector<int>>& out) {
  std::vector<int> idx(length, 0);
  for (;;) {
    int total = 0;
    for (int v : idx) total += v;
    if (total <= d) out.push_back(idx);
    int k = length - 1;
    while (k >= 0) {
      if (++idx[k] <= d) break;
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
}

std::vector<std::vector<Factor>> yFamily(const measure::Grid& g,
                                         const BasisOptions& opt) {
  std::vector<std::vector<Factor>> fam;
  if (opt.yFamily == YFamily::DualHats && g.m == 1) {
    const auto& ys = g.yAxes[0];
    fam.push_back({polynomial(0, ys.front(), ys.back())});
    fam.push_back({polynomial(1, ys.front(), ys.back())});
    const std::size_t ny = ys.size();
    if (ny >= 2) {
      std::vector<double> mids(ny - 1);
      for (std::size_t j = 0; j + 1 < ny; ++j) mids[j] = 0.5 * (ys[j] + ys[j + 1]);
      const double below = 2.0 * ys.front() - mids.front();
      const double above = 2.0 * ys.back() - mids.back();
      for (std::size_t j = 0; j < mids.size(); ++j) {
        const double l = j == 0 ? below : mids[j - 1];
        const double r = j + 1 == mids.size() ? above : mids[j + 1];
        fam.push_back({hat(l, mids[j], r)});
      }
    }
    return fam;
  }
  std::vector<std::vector<int>> idx;
  multiIndices(g.m, opt.yDegree, idx);
  for (const auto& e : idx) {
    std::vector<Factor> f;
    for (int k = 0; k < g.m; ++k)
      f.push_back(polynomial(e[k], g.yAxes[k].front(), g.yAxes[k].back()));
    fam.push_back(std::move(f));
  }
  return fam;
}

}  // namespace

TestBasis::TestBasis(const measure::Grid& g, const BasisOptions& options)
    : options_(options), n_(g.n), m_(g.m) {
  if (options.degree < 0) throw ProblemError("basis degree must be >= 0");
  const auto yf = yFamily(g, options);

  // interior hats centred at interior cell edges, one per axis
  std::vector<int> edge(g.n, 1);
  bool any = true;
  for (int d = 0; d < g.n; ++d)
    if (g.nx[d] < 2) any = false;
  while (any) {
    // keep the hat only if every cell of its support is retained
    bool inside = true;
    std::vector<int> corner(g.n);
    for (int mask = 0; mask < (1 << g.n) && inside; ++mask) {
      for (int d = 0; d < g.n; ++d) corner[d] = edge[d] - 1 + ((mask >> d) & 1);
      if (g.findCell(corner) < 0) inside = false;
    }
    if (inside) {
      std::vector<Factor> xs;
      for (int d = 0; d < g.n; ++d) {
        const double t = g.xLo[d] + edge[d] * g.xH[d];
        xs.push_back(hat(t - g.xH[d], t, t + g.xH[d]));
      }
      for (const auto& y : yf) functions_.push_back({xs, y, false});
    }
    int d = g.n - 1;
    while (d >= 0) {
      if (++edge[d] <= g.nx[d] - 1) break;
      edge[d] = 1;
      --d;
    }
    if (d < 0) break;
  }

  std::vector<std::vector<int>> idx;
  multiIndices(g.n + g.m, options.degree, idx);
  for (const auto& e : idx) {
    TestFunction f;
    f.boundaryCoupled = true;
    for (int d = 0; d < g.n; ++d)
      f.x.push_back(polynomial(e[d], g.xLo[d], g.xLo[d] + g.nx[d] * g.xH[d]));
    for (int k = 0; k < g.m; ++k)
      f.y.push_back(polynomial(e[g.n + k], g.yAxes[k].front(), g.yAxes[k].back()));
    functions_.push_back(std::move(f));
  }
}

double TestBasis::interiorCoefficient(std::size_t f, int l,
                                      std::span<const double> cellLo,
                                      std::span<const double> cellHi,
                                      std::span<const double> y,
                                      std::span<const double> z) const {
  const TestFunction& tf = functions_[f];
  double xAvg = 1.0, xDer = 1.0;
  for (int d = 0; d < n_; ++d) {
    const double avg = tf.x[d].average(cellLo[d], cellHi[d]);
    xAvg *= avg;
    xDer *= d == l ? tf.x[d].derivativeAverage(cellLo[d], cellHi[d]) : avg;
  }
  double yVal = 1.0;
  for (int k = 0; k < m_; ++k) yVal *= tf.y[k].value(y[k]);
  double coef = xDer * yVal;
  if (xAvg != 0.0) {
    for (int k = 0; k < m_; ++k) {
      double dy = tf.y[k].derivative(y[k]);
      if (dy == 0.0) continue;
      for (int kk = 0; kk < m_; ++kk)
        if (kk != k) dy *= tf.y[kk].value(y[kk]);
      coef += xAvg * dy * z[l * m_ + k];
    }
  }
  return coef;
}

double TestBasis::boundaryValue(std::size_t f, std::span<const double> lo,
                                std::span<const double> hi,
                                std::span<const double> y) const {
  const TestFunction& tf = functions_[f];
  double v = 1.0;
  for (int d = 0; d < n_ && v != 0.0; ++d) v *= tf.x[d].average(lo[d], hi[d]);
  for (int k = 0; k < m_ && v != 0.0; ++k) v *= tf.y[k].value(y[k]);
  return v;
}

void cellBounds(const measure::Grid& grid, std::size_t i, std::vector<double>& lo,
                std::vector<double>& hi) {
  lo.resize(grid.n);
  hi.resize(grid.n);
  for (int d = 0; d < grid.n; ++d) {
    lo[d] = grid.xLo[d] + grid.xCells[i][d] * grid.xH[d];
    hi[d] = lo[d] + grid.xH[d];
  }
}

void patchBounds(const measure::Grid& grid, std::size_t b, std::vector<double>& lo,
                 std::vector<double>& hi) {
  lo.resize(grid.n);
  hi.resize(grid.n);
  for (int d = 0; d < grid.n; ++d) {
    lo[d] = grid.boundary[b].x[d] - grid.boundaryHalfWidth[b][d];
    hi[d] = grid.boundary[b].x[d] + grid.boundaryHalfWidth[b][d];
  }
}

double weakResidual(const measure::GriddedMeasure& mu, const TestBasis& basis) {
  const auto& g = mu.grid();
  struct Atom {
    std::vector<double> lo, hi, y, z;
    double w;
  };
  std::vector<Atom> atoms, batoms;
  std::vector<std::vector<double>> bnormal;
  for (std::size_t i = 0; i < g.xCount(); ++i)
    for (std::size_t j = 0; j < g.yCount(); ++j)
      for (std::size_t k = 0; k < g.zCount(); ++k) {
        const double w = mu.weights[g.node(i, j, k)];
        if (w == 0.0) continue;
        Atom a;
        cellBounds(g, i, a.lo, a.hi);
        a.y = g.yPoint(j);
        a.z = g.zPoint(k);
        a.w = w;
        atoms.push_back(std::move(a));
      }
  for (std::size_t b = 0; b < g.bCount(); ++b)
    for (std::size_t j = 0; j < g.yCount(); ++j) {
      const double w = mu.boundaryWeights[g.bnode(b, j)];
      if (w == 0.0) continue;
      Atom a;
      patchBounds(g, b, a.lo, a.hi);
      a.y = g.yPoint(j);
      a.w = w;
      batoms.push_back(std::move(a));
      bnormal.push_back(g.boundary[b].normal);
    }
  double worst = 0.0;
  for (std::size_t f = 0; f < basis.size(); ++f) {
    for (int l = 0; l < g.n; ++l) {
      double lhs = 0.0, rhs = 0.0;
      for (const auto& a : atoms)
        lhs += a.w * basis.interiorCoefficient(f, l, a.lo, a.hi, a.y, a.z);
      for (std::size_t q = 0; q < batoms.size(); ++q) {
        const auto& a = batoms[q];
        rhs += a.w * basis.boundaryValue(f, a.lo, a.hi, a.y) * bnormal[q][l];
      }
      worst = std::max(worst, std::fabs(lhs - rhs));
    }
  }
  return worst;
}

}  // namespace occrelax::relax
