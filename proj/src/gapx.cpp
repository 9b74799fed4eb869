#include "occrelax/gapx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "occrelax/parallel.hpp"

namespace occrelax::gapx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
double norm2(const Vec2& a) { return dot(a, a); }
Vec2 sub(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
Vec2 scale(const Vec2& a, double s) { return {a[0] * s, a[1] * s}; }
Mat2 scale(const Mat2& a, double s) {
  return {{{a[0][0] * s, a[0][1] * s}, {a[1][0] * s, a[1][1] * s}}};
}
double frob2(const Mat2& a, const Mat2& b) {
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int l = 0; l < 2; ++l) {
      const double d = a[i][l] - b[i][l];
      s += d * d;
    }
  return s;
}

double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
}

// r^3 (cos(phi/2), sin(phi/2)) for the branch angle phi.
Vec2 branchValue(double r, double phi) {
  const double r3 = r * r * r;
  return {r3 * std::cos(0.5 * phi), r3 * std::sin(0.5 * phi)};
}

Mat2 branchJacobian(double r, double phi) {
  const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
  const double ct = std::cos(phi), st = std::sin(phi);
  const double r2 = r * r;
  Mat2 m;
  m[0][0] = r2 * (3.0 * c * ct + 0.5 * s * st);
  m[1][0] = r2 * (3.0 * s * ct - 0.5 * c * st);
  m[0][1] = r2 * (3.0 * c * st - 0.5 * s * ct);
  m[1][1] = r2 * (3.0 * s * st + 0.5 * c * ct);
  return m;
}

struct Aux {
  double psi, S, g;
  Vec2 U;
  Mat2 V;
};

// Everything in L that depends on (x, y) only.
Aux auxiliary(double r6, const Vec2& u0v, const Mat2& du0v, const Vec2& y) {
  Aux a{};
  if (r6 == 0.0) {
    a.psi = 0.5;
    a.U = {0.0, 0.0};
    a.V = {{{0.0, 0.0}, {0.0, 0.0}}};
    a.S = 0.0;
    a.g = 0.0;
    return a;
  }
  const double ip = dot(y, u0v);
  a.psi = ramp(10.0 * ip / r6);
  const double t = 2.0 * a.psi - 1.0;
  a.U = scale(u0v, t);
  a.V = scale(du0v, t);
  const double d0 = norm2(sub(y, u0v));
  const double d1 = norm2({y[0] + u0v[0], y[1] + u0v[1]});
  a.S = std::min(d0, d1) - norm2(sub(y, a.U));
  const double beta = bump(10.0 * std::fabs(ip) / r6);
  a.g = beta * a.S + (1.0 - beta) * (2.0 * norm2(y) + 2.0 * r6);
  return a;
}

double lagrangianFrom(const Aux& a, const Vec2& y, const Mat2& z) {
  return norm2(sub(y, a.U)) + frob2(z, a.V) + a.g;
}

}  // namespace

// evaluated on r >= 0 and reflected, so ramp(-r) = 1 - ramp(r) holds exactly
double ramp(double r) { return r < 0.0 ? 1.0 - smoothstep(0.5 * (1.0 - r)) : smoothstep(0.5 * (r + 1.0)); }
double bump(double q) { return smoothstep(2.0 * q - 1.0); }

double polarAngle(const Vec2& x) {
  double t = std::atan2(x[1], x[0]);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

Vec2 u0(const Vec2& x) { return branchValue(std::hypot(x[0], x[1]), polarAngle(x)); }
Vec2 u1(const Vec2& x) {
  const Vec2 v = u0(x);
  return {-v[0], -v[1]};
}

Mat2 du(const Vec2& x, int k) {
  const Mat2 m = branchJacobian(std::hypot(x[0], x[1]), polarAngle(x));
  return k == 0 ? m : scale(m, -1.0);
}

namespace {
double branchAngle(const Vec2& x, double alpha) {
  return alpha + std::fmod(std::fmod(polarAngle(x) - alpha, kTwoPi) + kTwoPi, kTwoPi);
}
}  // namespace

Vec2 ubar(const Vec2& x, double alpha) {
  return branchValue(std::hypot(x[0], x[1]), branchAngle(x, alpha));
}

Mat2 dubar(const Vec2& x, double alpha) {
  return branchJacobian(std::hypot(x[0], x[1]), branchAngle(x, alpha));
}

bool inDelta(const Vec2& x, const Vec2& y) {
  const double r6 = std::pow(norm2(x), 3);
  return std::fabs(dot(y, u0(x))) > r6 / 10.0;
}

NodeCache makeCache(const Vec2& x) {
  NodeCache c;
  c.x = x;
  const double rr = norm2(x);
  c.r6 = rr * rr * rr;
  c.u0 = u0(x);
  c.du0 = du(x, 0);
  return c;
}

FieldRecord evalFields(const Vec2& x, const Vec2& y, const Mat2& z) {
  const NodeCache c = makeCache(x);
  const Aux a = auxiliary(c.r6, c.u0, c.du0, y);
  FieldRecord f;
  f.u0 = c.u0;
  f.u1 = {-c.u0[0], -c.u0[1]};
  f.du0 = c.du0;
  f.du1 = scale(c.du0, -1.0);
  f.psi = a.psi;
  f.U = a.U;
  f.V = a.V;
  f.S = a.S;
  f.g = a.g;
  f.L = lagrangianFrom(a, y, z);
  f.inDelta = std::fabs(dot(y, c.u0)) > c.r6 / 10.0;
  return f;
}

double psi(const Vec2& x, const Vec2& y) {
  const NodeCache c = makeCache(x);
  return auxiliary(c.r6, c.u0, c.du0, y).psi;
}
double fieldS(const Vec2& x, const Vec2& y) {
  const NodeCache c = makeCache(x);
  return auxiliary(c.r6, c.u0, c.du0, y).S;
}
double fieldG(const Vec2& x, const Vec2& y) {
  const NodeCache c = makeCache(x);
  return auxiliary(c.r6, c.u0, c.du0, y).g;
}
double lagrangian(const Vec2& x, const Vec2& y, const Mat2& z) {
  return lagrangian(makeCache(x), y, z);
}
double lagrangian(const NodeCache& c, const Vec2& y, const Mat2& z) {
  return lagrangianFrom(auxiliary(c.r6, c.u0, c.du0, y), y, z);
}

core::VariationalProblem counterexampleProblem() {
  core::VariationalProblem p;
  p.name = p.builtinName = "counterexample-2d";
  p.domain = core::Domain::disk(1.0);
  p.m = 2;
  p.yBox = {{-1.0, 1.0}, {-1.0, 1.0}};
  p.zBox = std::vector<Interval>(4, Interval{-3.0, 3.0});
  const auto ia = p.interiorArity();
  const auto ba = p.boundaryArity();
  p.L = core::ScalarField(ia, [](std::span<const double> q) {
    const Vec2 x{q[0], q[1]}, y{q[2], q[3]};
    Mat2 z;
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < 2; ++i) z[i][l] = q[4 + l * 2 + i];
    return lagrangian(x, y, z);
  });
  p.L.convexInZ = true;
  p.F = core::ScalarField::constant(0.0, ia);
  p.G = core::ScalarField::constant(0.0, ia);
  p.Lb = core::ScalarField::constant(0.0, ba);
  p.Fb = core::ScalarField::constant(0.0, ba);
  p.Gb = core::ScalarField::constant(0.0, ba);
  p.hint = {{16, 16}, 5, 3};
  return p;
}

// ---------------------------------------------------------------------------

PolarGrid::PolarGrid(int nr, int nt)
    : nr_(nr), nt_(nt), dr_(1.0 / nr), dt_(kTwoPi / nt) {
  if (nr < 2 || nt < 4) throw ProblemError("polar grid too coarse");
  cache_.resize(size());
  for (int i = 0; i < nr_; ++i)
    for (int j = 0; j < nt_; ++j) cache_[index(i, j)] = makeCache(point(i, j));
}

double PolarGrid::area(int i) const { return (i + 0.5) * dr_ * dr_ * dt_; }

Vec2 PolarGrid::point(int i, int j) const {
  const double r = radius(i), t = angle(j);
  return {r * std::cos(t), r * std::sin(t)};
}

RelaxedReport relaxedValue(int nr, int nt, double w0, double w1, double shift) {
  const PolarGrid grid(nr, nt);
  RelaxedReport rep;
  double area = 0.0;
  for (int i = 0; i < nr; ++i) area += grid.area(i) * nt;
  rep.mass = (w0 + w1) * area;
  rep.massOk = std::fabs(rep.mass - std::numbers::pi) <= 1e-9 * std::numbers::pi;
  if (!rep.massOk) return rep;
  std::vector<double> contrib(grid.size());
  const auto& cache = grid.cache();
  parallel::forEach(grid.size(), [&](std::size_t k) {
    const auto& c = cache[k];
    const Vec2 ya{c.u0[0] + shift, c.u0[1]};
    const Vec2 yb{-c.u0[0] + shift, -c.u0[1]};
    const double a = grid.area(static_cast<int>(k / grid.nt()));
    contrib[k] = a * (w0 * lagrangian(c, ya, c.du0) +
                      w1 * lagrangian(c, yb, scale(c.du0, -1.0)));
  });
  for (double v : contrib) rep.value += v;
  return rep;
}

// ---------------------------------------------------------------------------

double branchArea(const PolarGrid& grid, const PolarField& h, double alpha) {
  const double cut = std::fmod(std::fmod(alpha, kTwoPi) + kTwoPi, kTwoPi);
  const double dt = grid.dtheta();
  double total = 0.0;
  for (int i = 0; i < grid.nr(); ++i) {
    if (!grid.inCorona(i)) continue;
    const double r = grid.radius(i), area = grid.area(i);
    for (int j = 0; j < grid.nt(); ++j) {
      const double a = j * dt, b = (j + 1) * dt, th = grid.angle(j);
      const Vec2& hv = h.values[grid.index(i, j)];
      auto member = [&](double phi) {
        return norm2(sub(hv, branchValue(r, phi))) <= kThresholdE * kThresholdE;
      };
      if (cut > a && cut < b) {
        const double d = std::remainder(th - alpha, kTwoPi);
        const double above = (b - cut) / dt;
        if (member(alpha + d)) total += area * above;
        if (member(alpha + kTwoPi + d)) total += area * (1.0 - above);
      } else {
        const double phi =
            alpha + std::fmod(std::fmod(th - alpha, kTwoPi) + kTwoPi, kTwoPi);
        if (member(phi)) total += area;
      }
    }
  }
  return total;
}

AlphaResult findAlpha0(const PolarGrid& grid, const PolarField& h, int samples,
                       double tol) {
  if (samples <= 0) samples = 4 * grid.nt();
  auto phi = [&](double a) {
    return branchArea(grid, h, a) - branchArea(grid, h, a + kTwoPi);
  };
  AlphaResult res;
  bool anyMass = false;
  double prevA = 0.0, prevV = phi(0.0);
  anyMass = branchArea(grid, h, 0.0) + branchArea(grid, h, kTwoPi) > 0.0;
  if (prevV == 0.0 && anyMass) {
    res.alpha0 = 0.0;
  } else {
    bool found = false;
    for (int k = 1; k <= samples && !found; ++k) {
      const double a = kTwoPi * k / samples;
      const double v = phi(a);
      if (!anyMass && branchArea(grid, h, a) + branchArea(grid, h, a + kTwoPi) > 0.0)
        anyMass = true;
      if (v == 0.0) {
        res.alpha0 = a;
        found = true;
      } else if ((v > 0.0) != (prevV > 0.0)) {
        double lo = prevA, hi = a, flo = prevV;
        while (hi - lo > tol) {
          const double mid = 0.5 * (lo + hi);
          const double fm = phi(mid);
          if (fm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        res.alpha0 = 0.5 * (lo + hi);
        found = true;
      }
      prevA = a;
      prevV = v;
    }
    if (!found) res.alpha0 = 0.0;
  }
  res.degenerate = !anyMass;
  res.area = branchArea(grid, h, res.alpha0);
  res.phi = res.area - branchArea(grid, h, res.alpha0 + kTwoPi);
  return res;
}

namespace {

// Coefficient of node q in the radial / angular difference at node p.
struct Stencil {
  int count = 0;
  std::array<std::size_t, 4> node{};
  std::array<double, 4> dr{}, dt{};
};

Stencil stencil(const PolarGrid& g, int i, int j) {
  Stencil s;
  const int nr = g.nr(), nt = g.nt();
  auto add = [&](int ii, int jj, double cr, double ct) {
    s.node[s.count] = g.index(ii, jj);
    s.dr[s.count] = cr;
    s.dt[s.count] = ct;
    ++s.count;
  };
  if (i == 0) {
    add(1, j, 1.0 / g.dr(), 0.0);
    add(0, j, -1.0 / g.dr(), 0.0);
  } else if (i == nr - 1) {
    add(nr - 1, j, 1.0 / g.dr(), 0.0);
    add(nr - 2, j, -1.0 / g.dr(), 0.0);
  } else {
    add(i + 1, j, 0.5 / g.dr(), 0.0);
    add(i - 1, j, -0.5 / g.dr(), 0.0);
  }
  add(i, (j + 1) % nt, 0.0, 0.5 / g.dtheta());
  add(i, (j + nt - 1) % nt, 0.0, -0.5 / g.dtheta());
  return s;
}

// Cartesian weights (d/dx1, d/dx2) of stencil entry e at node (i, j).
std::array<double, 2> cartesian(const PolarGrid& g, int i, int j,
                                const Stencil& s, int e) {
  const double th = g.angle(j), r = g.radius(i);
  const double c = std::cos(th), sn = std::sin(th);
  return {c * s.dr[e] - sn / r * s.dt[e], sn * s.dr[e] + c / r * s.dt[e]};
}

Mat2 gradientAt(const PolarGrid& g, const PolarField& h, int i, int j) {
  const Stencil s = stencil(g, i, j);
  Mat2 d{};
  for (int e = 0; e < s.count; ++e) {
    const auto w = cartesian(g, i, j, s, e);
    const Vec2& v = h.values[s.node[e]];
    for (int k = 0; k < 2; ++k) {
      d[k][0] += w[0] * v[k];
      d[k][1] += w[1] * v[k];
    }
  }
  return d;
}

double nodeObjective(const PolarGrid& g, const PolarField& h, int i, int j) {
  const auto& c = g.cache()[g.index(i, j)];
  return g.area(i) * lagrangian(c, h.values[g.index(i, j)], gradientAt(g, h, i, j));
}

struct NodeGrad {
  Vec2 gy;   // area * dL/dy
  Mat2 gz;   // area * dL/dz
};

NodeGrad nodeGradient(const PolarGrid& g, const PolarField& h, int i, int j) {
  const auto& c = g.cache()[g.index(i, j)];
  const Vec2 y = h.values[g.index(i, j)];
  const Mat2 z = gradientAt(g, h, i, j);
  const Aux a = auxiliary(c.r6, c.u0, c.du0, y);
  const double area = g.area(i);
  NodeGrad out{};
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) out.gz[k][l] = area * 2.0 * (z[k][l] - a.V[k][l]);
  constexpr double step = 1e-6;
  for (int k = 0; k < 2; ++k) {
    Vec2 yp = y, ym = y;
    yp[k] += step;
    ym[k] -= step;
    const double lp = lagrangianFrom(auxiliary(c.r6, c.u0, c.du0, yp), yp, z);
    const double lm = lagrangianFrom(auxiliary(c.r6, c.u0, c.du0, ym), ym, z);
    out.gy[k] = area * (lp - lm) / (2.0 * step);
  }
  return out;
}

}  // namespace

std::vector<Mat2> polarGradient(const PolarGrid& grid, const PolarField& h) {
  std::vector<Mat2> out(grid.size());
  for (int i = 0; i < grid.nr(); ++i)
    for (int j = 0; j < grid.nt(); ++j)
      out[grid.index(i, j)] = gradientAt(grid, h, i, j);
  return out;
}

double objectiveSerial(const PolarGrid& grid, const PolarField& h) {
  std::vector<double> contrib(grid.size());
  for (int i = 0; i < grid.nr(); ++i)
    for (int j = 0; j < grid.nt(); ++j)
      contrib[grid.index(i, j)] = nodeObjective(grid, h, i, j);
  double total = 0.0;
  for (double v : contrib) total += v;
  return total;
}

double objectiveParallel(const PolarGrid& grid, const PolarField& h) {
  std::vector<double> contrib(grid.size());
  const int nt = grid.nt();
  parallel::forEach(grid.size(), [&](std::size_t k) {
    contrib[k] = nodeObjective(grid, h, static_cast<int>(k / nt),
                               static_cast<int>(k % nt));
  });
  double total = 0.0;
  for (double v : contrib) total += v;
  return total;
}

namespace {

// Gather for node q: its own y term plus the z terms of every node whose
// stencil contains q, in a fixed order shared by both kernels.
Vec2 gatherGradient(const PolarGrid& grid, const std::vector<NodeGrad>& local, std::size_t q) {
  const int nr = grid.nr(), nt = grid.nt();
  const int qi = static_cast<int>(q / nt), qj = static_cast<int>(q % nt);
  Vec2 acc = local[q].gy;
  const int candidates[5][2] = {{qi, qj},
                                {qi - 1, qj},
                                {qi + 1, qj},
                                {qi, (qj + 1) % nt},
                                {qi, (qj + nt - 1) % nt}};
  for (const auto& pc : candidates) {
    const int pi = pc[0], pj = pc[1];
    if (pi < 0 || pi >= nr) continue;
    const std::size_t p = grid.index(pi, pj);
    const Stencil s = stencil(grid, pi, pj);
    for (int e = 0; e < s.count; ++e) {
      if (s.node[e] != q) continue;
      const auto w = cartesian(grid, pi, pj, s, e);
      for (int k = 0; k < 2; ++k)
        acc[k] += local[p].gz[k][0] * w[0] + local[p].gz[k][1] * w[1];
    }
  }
  return acc;
}

}  // namespace

void gradientSerial(const PolarGrid& grid, const PolarField& h, PolarField& grad) {
  const int nt = grid.nt();
  std::vector<NodeGrad> local(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    local[k] = nodeGradient(grid, h, static_cast<int>(k / nt), static_cast<int>(k % nt));
  grad.values.resize(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) grad.values[q] = gatherGradient(grid, local, q);
}

void gradientParallel(const PolarGrid& grid, const PolarField& h, PolarField& grad) {
  const int nt = grid.nt();
  std::vector<NodeGrad> local(grid.size());
  parallel::forEach(grid.size(), [&](std::size_t k) {
    local[k] = nodeGradient(grid, h, static_cast<int>(k / nt), static_cast<int>(k % nt));
  });
  grad.values.resize(grid.size());
  parallel::forEach(grid.size(),
                    [&](std::size_t q) { grad.values[q] = gatherGradient(grid, local, q); });
}

// ---------------------------------------------------------------------------

namespace {

// Angular one-sided differencing across the slit ray at `cut`.
double scalarAngularDerivative(const PolarGrid& g, const std::vector<double>& f,
                               int i, int j, double cut, bool& nearCut) {
  const int nt = g.nt();
  const int jp = (j + 1) % nt, jm = (j + nt - 1) % nt;
  auto crosses = [&](int a, int b) {
    // ray strictly between the angles of columns a and b = a + 1 (mod nt)
    const double ta = g.angle(a);
    const double d = std::fmod(std::fmod(cut - ta, kTwoPi) + kTwoPi, kTwoPi);
    (void)b;
    return d < g.dtheta();
  };
  const bool crossPlus = crosses(j, jp);
  const bool crossMinus = crosses(jm, j);
  nearCut = crossPlus || crossMinus;
  const double dt = g.dtheta();
  if (crossPlus && !crossMinus)
    return (f[g.index(i, j)] - f[g.index(i, jm)]) / dt;
  if (crossMinus && !crossPlus)
    return (f[g.index(i, jp)] - f[g.index(i, j)]) / dt;
  if (crossPlus && crossMinus) return 0.0;
  return (f[g.index(i, jp)] - f[g.index(i, jm)]) / (2.0 * dt);
}

}  // namespace

ClassicalReport classicalLowerReport(const PolarGrid& grid, const PolarField& h) {
  ClassicalReport rep;
  const AlphaResult ar = findAlpha0(grid, h);
  rep.alpha0 = ar.alpha0;
  rep.areaB = ar.area;
  rep.degenerate = ar.degenerate;
  rep.coronaArea = 3.0 * std::numbers::pi / 4.0;
  rep.caseABound = kThresholdE * kThresholdE * rep.coronaArea / 2.0;
  rep.caseId = rep.areaB < rep.coronaArea / 4.0 ? 'A' : 'B';
  rep.objective = objectiveParallel(grid, h);

  // truncated distance to the branch with its jump at alpha0
  std::vector<double> hbar(grid.size(), 0.0);
  double massGamma = 0.0, sum = 0.0;
  for (int i = 0; i < grid.nr(); ++i) {
    if (!grid.inCorona(i)) continue;
    for (int j = 0; j < grid.nt(); ++j) {
      const auto k = grid.index(i, j);
      const Vec2 ub = ubar(grid.point(i, j), rep.alpha0);
      hbar[k] = std::min(std::sqrt(norm2(sub(h.values[k], ub))), kTruncation);
      massGamma += grid.area(i);
      sum += grid.area(i) * hbar[k];
    }
  }
  rep.meanM = sum / massGamma;

  const auto dh = polarGradient(grid, h);
  int counted = 0, holds = 0;
  for (int i = 0; i < grid.nr(); ++i) {
    if (!grid.inCorona(i)) continue;
    const bool radialInterior = i > 0 && i < grid.nr() - 1 && grid.inCorona(i - 1);
    for (int j = 0; j < grid.nt(); ++j) {
      const auto k = grid.index(i, j);
      const double a = grid.area(i);
      const double dev = hbar[k] - rep.meanM;
      rep.variance += a * dev * dev;

      const auto& c = grid.cache()[k];
      const Aux aux = auxiliary(c.r6, c.u0, c.du0, h.values[k]);
      const double lhs = frob2(dh[k], aux.V);
      rep.derivativeLhs += a * lhs;

      bool nearCut = false;
      const double dth =
          scalarAngularDerivative(grid, hbar, i, j, rep.alpha0, nearCut);
      double drr;
      if (i == grid.nr() - 1 || !grid.inCorona(i - 1))
        drr = i == grid.nr() - 1
                  ? (hbar[k] - hbar[grid.index(i - 1, j)]) / grid.dr()
                  : (hbar[grid.index(i + 1, j)] - hbar[k]) / grid.dr();
      else
        drr = (hbar[grid.index(i + 1, j)] - hbar[grid.index(i - 1, j)]) /
              (2.0 * grid.dr());
      const double r = grid.radius(i);
      const double rhs = drr * drr + dth * dth / (r * r);
      if (!nearCut) rep.derivativeRhs += a * rhs;
      if (!nearCut && radialInterior) {
        ++counted;
        if (std::sqrt(lhs) >= std::sqrt(rhs) - 1e-12) ++holds;
      }
    }
  }
  rep.pointwiseFraction = counted ? static_cast<double>(holds) / counted : 1.0;
  return rep;
}

// ---------------------------------------------------------------------------

SearchRun descend(const PolarGrid& grid, PolarField& h, int steps,
                  double initialStep, bool parallel) {
  auto objective = [&](const PolarField& f) {
    return parallel ? objectiveParallel(grid, f) : objectiveSerial(grid, f);
  };
  SearchRun run;
  double J = objective(h);
  run.initialObjective = J;
  double t = initialStep;
  PolarField grad, trial;
  for (int s = 0; s < steps; ++s) {
    if (parallel)
      gradientParallel(grid, h, grad);
    else
      gradientSerial(grid, h, grad);
    // L2-type preconditioning: divide by the cell area
    for (int i = 0; i < grid.nr(); ++i)
      for (int j = 0; j < grid.nt(); ++j) {
        auto& gv = grad.values[grid.index(i, j)];
        gv[0] /= grid.area(i);
        gv[1] /= grid.area(i);
      }
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      trial = h;
      for (std::size_t k = 0; k < trial.values.size(); ++k) {
        trial.values[k][0] -= t * grad.values[k][0];
        trial.values[k][1] -= t * grad.values[k][1];
      }
      const double Jt = objective(trial);
      if (Jt < J) {
        h = std::move(trial);
        J = Jt;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    run.history.push_back(J);
    t = std::min(2.0 * t, initialStep);
  }
  run.finalObjective = J;
  return run;
}

PolarField randomField(const PolarGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-0.5, 0.5);
  constexpr int kModes = 4;
  double a[2][kModes][2][2];
  for (auto& comp : a)
    for (auto& mode : comp)
      for (auto& trig : mode)
        for (double& v : trig) v = coef(rng);
  PolarField h;
  h.values.resize(grid.size());
  for (int i = 0; i < grid.nr(); ++i) {
    const double r = grid.radius(i);
    for (int j = 0; j < grid.nt(); ++j) {
      const double th = grid.angle(j);
      Vec2 v{0.0, 0.0};
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < kModes; ++k) {
          const double radial0 = a[c][k][0][0] + a[c][k][0][1] * r;
          const double radial1 = a[c][k][1][0] + a[c][k][1][1] * r;
          v[c] += radial0 * std::cos(k * th) + radial1 * std::sin(k * th);
        }
      h.values[grid.index(i, j)] = v;
    }
  }
  return h;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

SearchResult classicalSearch(const SearchOptions& opt) {
  const PolarGrid grid(opt.nr, opt.nt);
  std::vector<PolarField> starts;
  std::vector<std::string> labels;
  PolarField zero, snapped, half;
  zero.values.assign(grid.size(), Vec2{0.0, 0.0});
  snapped.values.resize(grid.size());
  half.values.resize(grid.size());
  for (int i = 0; i < grid.nr(); ++i)
    for (int j = 0; j < grid.nt(); ++j) {
      const auto k = grid.index(i, j);
      const Vec2 v = grid.cache()[k].u0;
      snapped.values[k] = v;
      half.values[k] = grid.angle(j) < std::numbers::pi ? v : Vec2{-v[0], -v[1]};
    }
  starts = {zero, snapped, half};
  labels = {"zero", "u0", "u0/u1 halves"};
  for (int k = 0; k < opt.inits; ++k) {
    starts.push_back(randomField(grid, splitmix64(opt.seed + k)));
    labels.push_back("random-" + std::to_string(k));
  }

  SearchResult res;
  res.runs.resize(starts.size());
  std::vector<PolarField> finals(starts.size());
  // runs are independent; each writes only its own slot
  parallel::forEach(starts.size(), [&](std::size_t r) {
    PolarField h = starts[r];
    res.runs[r] = descend(grid, h, opt.steps, opt.initialStep, false);
    res.runs[r].label = labels[r];
    finals[r] = std::move(h);
  }, parallel::Schedule::Dynamic);
  res.bestRun = 0;
  for (std::size_t r = 1; r < res.runs.size(); ++r)
    if (res.runs[r].finalObjective < res.runs[res.bestRun].finalObjective)
      res.bestRun = r;
  res.minObjective = res.runs[res.bestRun].finalObjective;
  res.minimizer = finals[res.bestRun];
  return res;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kDims = 8;
using Point = std::array<double, kDims>;

double lagrangianAt(const Point& p) {
  const Vec2 x{p[0], p[1]}, y{p[2], p[3]};
  Mat2 z{{{p[4], p[5]}, {p[6], p[7]}}};
  return lagrangian(x, y, z);
}

Point gradientFD(const Point& p, double step) {
  Point g{};
  for (int d = 0; d < kDims; ++d) {
    Point a = p, b = p;
    a[d] += step;
    b[d] -= step;
    g[d] = (lagrangianAt(a) - lagrangianAt(b)) / (2.0 * step);
  }
  return g;
}

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (int d = 0; d < kDims; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

}  // namespace

RegularityReport regularityProbe(int samples, std::uint64_t seed) {
  if (samples < 100) throw ProblemError("regularity probe needs >= 100 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  RegularityReport rep;
  rep.samples = samples;
  constexpr double fdStep = 1e-6;
  for (int s = 0; s < samples; ++s) {
    const bool nearOrigin = s % 2 == 1;
    Point p;
    const double xr = nearOrigin ? 0.05 : 0.9;
    do {
      p[0] = xr * unit(rng);
      p[1] = xr * unit(rng);
    } while (std::hypot(p[0], p[1]) > xr);
    for (int d = 2; d < 4; ++d) p[d] = unit(rng);
    if (nearOrigin && std::hypot(p[2], p[3]) < 0.2) p[2] += 0.5;  // y' != 0
    for (int d = 4; d < kDims; ++d) p[d] = 2.0 * unit(rng);
    Point q = p;
    if (nearOrigin) {
      // straddle x = 0
      q[0] = -p[0];
      q[1] = -p[1];
    } else {
      for (int d = 0; d < kDims; ++d) q[d] += 1e-3 * unit(rng);
    }
    const double dist = distance(p, q);
    if (dist == 0.0) continue;
    const Point gp = gradientFD(p, fdStep), gq = gradientFD(q, fdStep);
    const double ratio = distance(gp, gq) / dist;
    rep.maxRatio = std::max(rep.maxRatio, ratio);
    if (nearOrigin) rep.maxRatioNearOrigin = std::max(rep.maxRatioNearOrigin, ratio);

    // inside Delta: y on a sheet, grad_z L = 2 (z - Du_i)
    const Vec2 x{p[0], p[1]};
    if (std::hypot(x[0], x[1]) > 0.2) {
      const int branch = s % 4 < 2 ? 0 : 1;
      const Vec2 uy = branch == 0 ? u0(x) : u1(x);
      const Mat2 D = du(x, branch);
      Point r = p;
      r[2] = uy[0];
      r[3] = uy[1];
      const Point gr = gradientFD(r, 1e-5);
      const Mat2 z{{{r[4], r[5]}, {r[6], r[7]}}};
      double err = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int l = 0; l < 2; ++l)
          err = std::max(err, std::fabs(gr[4 + i * 2 + l] - 2.0 * (z[i][l] - D[i][l])));
      rep.maxZGradientError = std::max(rep.maxZGradientError, err);
    }
    // z Hessian by second differences
    constexpr double hz = 1e-3;
    const double l0 = lagrangianAt(p);
    for (int a = 4; a < kDims; ++a) {
      for (int b = 4; b < kDims; ++b) {
        Point pp = p, pm = p, mp = p, mm = p;
        pp[a] += hz; pp[b] += hz;
        pm[a] += hz; pm[b] -= hz;
        mp[a] -= hz; mp[b] += hz;
        mm[a] -= hz; mm[b] -= hz;
        double hess;
        if (a == b) {
          Point up = p, dn = p;
          up[a] += hz;
          dn[a] -= hz;
          hess = (lagrangianAt(up) - 2.0 * l0 + lagrangianAt(dn)) / (hz * hz);
        } else {
          hess = (lagrangianAt(pp) - lagrangianAt(pm) - lagrangianAt(mp) +
                  lagrangianAt(mm)) / (4.0 * hz * hz);
        }
        const double expect = a == b ? 2.0 : 0.0;
        rep.maxHessianError = std::max(rep.maxHessianError, std::fabs(hess - expect));
      }
    }
  }
  return rep;
}

std::vector<InvariantCheck> checkInvariants(int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<InvariantCheck> checks = {
      {"u1 = -u0", true, 0.0},
      {"|u_i|^2 = |x|^6", true, 0.0},
      {"psi(x,y) + psi(x,-y) = 1", true, 0.0},
      {"psi = 1 on Delta where <y,u0> > 0, 0 where < 0", true, 0.0},
      {"U, V pick the nearest sheet on Delta", true, 0.0},
      {"g >= 0", true, 0.0},
      {"g = 0 on Delta", true, 0.0},
      {"g >= S", true, 0.0},
      {"S >= 0", true, 0.0},
      {"L >= 0", true, 0.0},
      {"L = 0 on the lifted graph", true, 0.0},
      {"Hess_z L = 2 I", true, 0.0},
  };
  auto record = [&](int c, double violation) {
    checks[c].worst = std::max(checks[c].worst, violation);
    if (violation > 0.0) checks[c].passed = false;
  };
  for (int s = 0; s < points; ++s) {
    Vec2 x;
    do {
      x = {unit(rng), unit(rng)};
    } while (norm2(x) >= 1.0);
    const NodeCache c = makeCache(x);
    const Vec2 v0 = u0(x), v1 = u1(x);
    Vec2 y;
    if (s % 3 == 0) {
      y = {1.5 * unit(rng), 1.5 * unit(rng)};
    } else {
      // near a sheet, so that Delta is well sampled
      const Vec2 base = s % 3 == 1 ? v0 : v1;
      const double amp = 0.3 * std::sqrt(c.r6);
      y = {base[0] + amp * unit(rng), base[1] + amp * unit(rng)};
    }
    Mat2 z{{{3 * unit(rng), 3 * unit(rng)}, {3 * unit(rng), 3 * unit(rng)}}};
    const double r6 = c.r6;
    const double scaleTol = 1e-13 * std::max(1.0, norm2(y) + r6);

    record(0, (v1[0] != -v0[0] || v1[1] != -v0[1]) ? 1.0 : 0.0);
    const double nrm = std::max(std::fabs(norm2(v0) - r6), std::fabs(norm2(v1) - r6));
    record(1, nrm > 1e-14 * std::max(r6, 1e-300) ? nrm : 0.0);

    const Aux a = auxiliary(c.r6, c.u0, c.du0, y);
    const Aux am = auxiliary(c.r6, c.u0, c.du0, {-y[0], -y[1]});
    const double anti = std::fabs(a.psi + am.psi - 1.0);
    record(2, anti > 1e-15 ? anti : 0.0);

    const double ip = dot(y, c.u0);
    const bool delta = std::fabs(ip) > r6 / 10.0;
    if (delta) {
      const double want = ip > 0 ? 1.0 : 0.0;
      record(3, std::fabs(a.psi - want));
      const Vec2& nearest = norm2(sub(y, v0)) <= norm2(sub(y, v1)) ? v0 : v1;
      const Mat2 Dn = &nearest == &v0 ? c.du0 : scale(c.du0, -1.0);
      record(4, std::sqrt(norm2(sub(a.U, nearest))) + std::sqrt(frob2(a.V, Dn)));
      record(6, std::fabs(a.g));
    }
    record(5, a.g < -scaleTol ? -a.g : 0.0);
    record(7, a.g - a.S < -scaleTol ? a.S - a.g : 0.0);
    record(8, a.S < -scaleTol ? -a.S : 0.0);
    const double L = lagrangianFrom(a, y, z);
    record(9, L < -scaleTol ? -L : 0.0);
    if (r6 > 0.0) {
      const double l0 = lagrangian(c, v0, c.du0);
      const double l1 = lagrangian(c, v1, scale(c.du0, -1.0));
      record(10, std::max(l0, l1) > 1e-14 ? std::max(l0, l1) : 0.0);
    }
    // exact quadratic identity: L(z + w) - L(z) - <2(z - V), w> = |w|^2
    Mat2 w{{{unit(rng), unit(rng)}, {unit(rng), unit(rng)}}};
    Mat2 zw = z;
    double lin = 0.0, ww = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int l = 0; l < 2; ++l) {
        zw[i][l] += w[i][l];
        lin += 2.0 * (z[i][l] - a.V[i][l]) * w[i][l];
        ww += w[i][l] * w[i][l];
      }
    const double quad = lagrangianFrom(a, y, zw) - L - lin - ww;
    record(11, std::fabs(quad) > 1e-12 * std::max(1.0, L) ? std::fabs(quad) : 0.0);
  }
  return checks;
}

}  // namespace occrelax::gapx
