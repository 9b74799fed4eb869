#include "occrelax/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "occrelax/gapx.hpp"

namespace occrelax::core {

Domain Domain::interval(double lo, double hi) {
  if (!(hi > lo)) throw ProblemError("interval needs lo < hi");
  Domain d;
  d.kind_ = DomainKind::Interval;
  d.lower_ = {lo};
  d.upper_ = {hi};
  return d;
}

Domain Domain::box(std::vector<Interval> sides) {
  if (sides.empty()) throw ProblemError("box needs at least one side");
  if (sides.size() == 1) return interval(sides[0].lo, sides[0].hi);
  Domain d;
  d.kind_ = DomainKind::Box;
  for (const auto& s : sides) {
    if (!(s.hi > s.lo)) throw ProblemError("box side needs lo < hi");
    d.lower_.push_back(s.lo);
    d.upper_.push_back(s.hi);
  }
  return d;
}

Domain Domain::disk(double radius) {
  if (!(radius > 0)) throw ProblemError("disk radius must be positive");
  Domain d;
  d.kind_ = DomainKind::Disk;
  d.lower_ = {-radius, -radius};
  d.upper_ = {radius, radius};
  d.outer_ = radius;
  return d;
}

Domain Domain::corona(double inner, double outer) {
  if (!(inner > 0 && outer > inner))
    throw ProblemError("corona needs 0 < inner < outer");
  Domain d;
  d.kind_ = DomainKind::Corona;
  d.lower_ = {-outer, -outer};
  d.upper_ = {outer, outer};
  d.inner_ = inner;
  d.outer_ = outer;
  return d;
}

std::vector<Interval> Domain::boundingBox() const {
  std::vector<Interval> box;
  for (std::size_t i = 0; i < lower_.size(); ++i)
    box.push_back({lower_[i], upper_[i]});
  return box;
}

bool Domain::contains(std::span<const double> x) const {
  switch (kind_) {
    case DomainKind::Interval:
    case DomainKind::Box:
      for (std::size_t i = 0; i < lower_.size(); ++i)
        if (!(x[i] > lower_[i] && x[i] < upper_[i])) return false;
      return true;
    case DomainKind::Disk:
      return std::hypot(x[0], x[1]) < outer_;
    case DomainKind::Corona: {
      const double r = std::hypot(x[0], x[1]);
      return r > inner_ && r < outer_;
    }
  }
  return false;
}

double volume(const Domain& domain) {
  using std::numbers::pi;
  switch (domain.kind()) {
    case DomainKind::Interval:
    case DomainKind::Box: {
      double v = 1.0;
      for (const auto& s : domain.boundingBox()) v *= s.hi - s.lo;
      return v;
    }
    case DomainKind::Disk:
      return pi * domain.outerRadius() * domain.outerRadius();
    case DomainKind::Corona: {
      const double a = domain.innerRadius(), b = domain.outerRadius();
      return pi * (b * b - a * a);
    }
  }
  return 0.0;
}

double boundaryMeasure(const Domain& domain) {
  using std::numbers::pi;
  switch (domain.kind()) {
    case DomainKind::Interval:
      return 2.0;
    case DomainKind::Box: {
      const auto box = domain.boundingBox();
      double total = 0.0;
      for (std::size_t f = 0; f < box.size(); ++f) {
        double face = 1.0;
        for (std::size_t d = 0; d < box.size(); ++d)
          if (d != f) face *= box[d].hi - box[d].lo;
        total += 2.0 * face;
      }
      return total;
    }
    case DomainKind::Disk:
      return 2.0 * pi * domain.outerRadius();
    case DomainKind::Corona:
      return 2.0 * pi * (domain.innerRadius() + domain.outerRadius());
  }
  return 0.0;
}

namespace {

void circleNodes(double radius, int count, double orientation,
                 std::vector<BoundaryNode>& out) {
  const double dtheta = 2.0 * std::numbers::pi / count;
  for (int k = 0; k < count; ++k) {
    const double t = k * dtheta;
    const double c = std::cos(t), s = std::sin(t);
    out.push_back({{radius * c, radius * s},
                   {orientation * c, orientation * s},
                   radius * dtheta});
  }
}

}  // namespace

std::vector<BoundaryNode> boundaryNodes(const Domain& domain, int count) {
  if (count < 2) throw ProblemError("boundary node count must be >= 2");
  std::vector<BoundaryNode> nodes;
  switch (domain.kind()) {
    case DomainKind::Interval: {
      const auto b = domain.boundingBox()[0];
      nodes.push_back({{b.lo}, {-1.0}, 1.0});
      nodes.push_back({{b.hi}, {1.0}, 1.0});
      break;
    }
    case DomainKind::Box: {
      const auto box = domain.boundingBox();
      const int dim = static_cast<int>(box.size());
      const int faces = 2 * dim;
      // per face a tensor of k^(dim-1) cell-centred nodes
      const int perFace = std::max(1, count / faces);
      int k = std::max(1, static_cast<int>(std::floor(
                              std::pow(perFace, 1.0 / (dim - 1)) + 1e-9)));
      for (int f = 0; f < dim; ++f) {
        for (int side = 0; side < 2; ++side) {
          std::vector<int> idx(dim - 1, 0);
          for (;;) {
            BoundaryNode node;
            node.x.assign(dim, 0.0);
            node.normal.assign(dim, 0.0);
            node.normal[f] = side ? 1.0 : -1.0;
            node.x[f] = side ? box[f].hi : box[f].lo;
            double w = 1.0;
            for (int d = 0, j = 0; d < dim; ++d) {
              if (d == f) continue;
              const double h = (box[d].hi - box[d].lo) / k;
              node.x[d] = box[d].lo + (idx[j] + 0.5) * h;
              w *= h;
              ++j;
            }
            node.weight = w;
            nodes.push_back(std::move(node));
            int j = 0;
            while (j < dim - 1 && ++idx[j] == k) idx[j++] = 0;
            if (j == dim - 1) break;
          }
        }
      }
      break;
    }
    case DomainKind::Disk:
      circleNodes(domain.outerRadius(), count, 1.0, nodes);
      break;
    case DomainKind::Corona: {
      const int inner = std::max(1, count / 2);
      circleNodes(domain.outerRadius(), std::max(1, count - inner), 1.0, nodes);
      circleNodes(domain.innerRadius(), inner, -1.0, nodes);
      break;
    }
  }
  return nodes;
}

ScalarField::ScalarField(expr::Arity arity, Fn fn, std::string source)
    : arity_(arity), fn_(std::move(fn)), source_(std::move(source)) {}

ScalarField ScalarField::fromExpression(const std::string& source,
                                        expr::Arity arity) {
  auto e = expr::parse(source, arity);
  return ScalarField(
      arity, [e](std::span<const double> p) { return e.eval(p); }, source);
}

ScalarField ScalarField::constant(double value, expr::Arity arity) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  std::string src = value < 0 ? std::string("(") + buf + ")" : std::string(buf);
  return ScalarField(
      arity, [value](std::span<const double>) { return value; }, src);
}

void VariationalProblem::validate() const {
  if (m < 1) throw ProblemError("codimension m must be >= 1");
  const auto nm = static_cast<std::size_t>(n() * m);
  if (zBox.size() != nm)
    throw ProblemError("zBox must have n*m = " + std::to_string(nm) + " entries");
  if (yBox.size() != static_cast<std::size_t>(m))
    throw ProblemError("yBox must have m entries");
  for (const auto& b : zBox)
    if (!(b.hi >= b.lo)) throw ProblemError("zBox interval is empty");
  for (const auto& b : yBox)
    if (!(b.hi >= b.lo)) throw ProblemError("yBox interval is empty");
  auto check = [&](const ScalarField& f, const expr::Arity& a, const char* name) {
    if (!f.defined()) throw ProblemError(std::string("field ") + name + " missing");
    if (f.arity().n != a.n || f.arity().m != a.m || f.arity().hasZ != a.hasZ)
      throw ProblemError(std::string("field ") + name + " has mismatched arity");
  };
  check(L, interiorArity(), "L");
  check(F, interiorArity(), "F");
  check(G, interiorArity(), "G");
  check(Lb, boundaryArity(), "Lb");
  check(Fb, boundaryArity(), "Fb");
  check(Gb, boundaryArity(), "Gb");
  for (const auto& c : integral) check(c.H, interiorArity(), "H");
}

double defaultControlTolerance(const ControlProblem& cp) {
  const auto& b = cp.base;
  const int n = b.n(), m = b.m;
  const auto xbox = b.domain.boundingBox();
  // 3 samples per coordinate (lo, mid, hi), capped by a deterministic stride
  const int dims = n + m + n * m;
  std::vector<Interval> axes = xbox;
  axes.insert(axes.end(), b.yBox.begin(), b.yBox.end());
  axes.insert(axes.end(), b.zBox.begin(), b.zBox.end());
  long total = 1;
  for (int d = 0; d < dims && total < 4096; ++d) total *= 3;
  const long stride = std::max<long>(1, total / 729);
  double scale = 0.0;
  std::vector<double> p(dims + cp.controlDim);
  for (long s = 0; s < total; s += stride) {
    long code = s;
    for (int d = 0; d < dims; ++d) {
      const int k = static_cast<int>(code % 3);
      code /= 3;
      p[d] = axes[d].lo + 0.5 * k * (axes[d].hi - axes[d].lo);
    }
    if (!cp.F) break;
    for (const auto& u : cp.controlGrid) {
      std::copy(u.begin(), u.end(), p.begin() + dims);
      scale = std::max(scale, std::fabs(cp.F(p)));
    }
  }
  return std::max(1e-6 * scale, 1e-12);
}

VariationalProblem reduceControl(const ControlProblem& cp) {
  if (cp.controlGrid.empty()) throw ProblemError("control grid is empty");
  VariationalProblem out = cp.base;
  const auto ia = out.interiorArity();
  const auto ba = out.boundaryArity();
  const double tol = cp.tolF ? *cp.tolF : defaultControlTolerance(cp);
  const double penalty = cp.penalty;
  const std::size_t dims = ia.pointSize();
  const std::size_t bdims = ba.pointSize();

  auto grid = std::make_shared<const std::vector<std::vector<double>>>(cp.controlGrid);
  auto bgrid = std::make_shared<const std::vector<std::vector<double>>>(
      cp.boundaryControlGrid.empty() ? cp.controlGrid : cp.boundaryControlGrid);

  // min over admissible samples; nullopt when none is admissible
  auto bestInterior = [=, L = cp.L, F = cp.F, G = cp.G](
                          std::span<const double> p) -> std::optional<double> {
    std::vector<double> q(p.begin(), p.begin() + dims);
    std::optional<double> best;
    for (const auto& u : *grid) {
      q.resize(dims);
      q.insert(q.end(), u.begin(), u.end());
      if (F && std::fabs(F(q)) > tol) continue;
      if (G && G(q) > tol) continue;
      const double v = L(q);
      if (!best || v < *best) best = v;
    }
    return best;
  };
  auto bestBoundary = [=, Lb = cp.Lb, Fb = cp.Fb, Gb = cp.Gb](
                          std::span<const double> p) -> std::optional<double> {
    std::vector<double> q(p.begin(), p.begin() + bdims);
    std::optional<double> best;
    for (const auto& u : *bgrid) {
      q.resize(bdims);
      q.insert(q.end(), u.begin(), u.end());
      if (Fb && std::fabs(Fb(q)) > tol) continue;
      if (Gb && Gb(q) > tol) continue;
      const double v = Lb ? Lb(q) : 0.0;
      if (!best || v < *best) best = v;
    }
    return best;
  };

  out.L = ScalarField(ia, [=](std::span<const double> p) {
    return bestInterior(p).value_or(penalty);
  });
  out.F = ScalarField(ia, [=](std::span<const double> p) {
    return bestInterior(p) ? 0.0 : 1.0;
  });
  out.G = ScalarField::constant(0.0, ia);
  out.Lb = ScalarField(ba, [=](std::span<const double> p) {
    return bestBoundary(p).value_or(penalty);
  });
  out.Fb = ScalarField(ba, [=](std::span<const double> p) {
    return bestBoundary(p) ? 0.0 : 1.0;
  });
  out.Gb = ScalarField::constant(0.0, ba);
  out.builtinName.clear();
  return out;
}

namespace {

VariationalProblem intervalProblem(const std::string& name, Interval ybox,
                                   Interval zbox) {
  VariationalProblem p;
  p.name = name;
  p.builtinName = name;
  p.domain = Domain::interval(0.0, 1.0);
  p.m = 1;
  p.yBox = {ybox};
  p.zBox = {zbox};
  const auto ia = p.interiorArity();
  const auto ba = p.boundaryArity();
  p.G = ScalarField::constant(0.0, ia);
  p.Lb = ScalarField::constant(0.0, ba);
  p.Fb = ScalarField::constant(0.0, ba);
  p.Gb = ScalarField::constant(0.0, ba);
  return p;
}

}  // namespace

std::vector<std::string> builtinNames() {
  return {"double-well", "gap-ineq",  "gap-eq",
          "two-sheet",   "codim1-demo", "counterexample-2d"};
}

VariationalProblem builtin(const std::string& name) {
  if (name == "double-well") {
    auto p = intervalProblem(name, {0.0, 0.0}, {-1.0, 1.0});
    const auto ia = p.interiorArity();
    p.L = ScalarField::fromExpression("min(abs(z1-1),abs(z1+1))", ia);
    p.F = ScalarField::fromExpression("y1", ia);
    p.hint = {{16}, 1, 3};
    return p;
  }
  if (name == "gap-ineq") {
    auto p = intervalProblem(name, {0.0, 1.0}, {-1.0, 1.0});
    const auto ia = p.interiorArity();
    p.L = ScalarField::fromExpression("y1", ia);
    p.L.convexInZ = true;
    p.F = ScalarField::fromExpression("y1*(1-y1)", ia);
    p.integral.push_back({ScalarField::fromExpression("1-10*y1", ia),
                          Relation::LessEqualZero, 0.0});
    p.hint = {{16}, 11, 3};
    return p;
  }
  if (name == "gap-eq") {
    auto p = intervalProblem(name, {0.0, 2.0}, {-1.0, 1.0});
    const auto ia = p.interiorArity();
    p.L = ScalarField::fromExpression("y1", ia);
    p.L.convexInZ = true;
    p.F = ScalarField::fromExpression("y1*(y1-1)*(y1-2)", ia);
    p.integral.push_back({ScalarField::fromExpression("(7/4)*y1-(3/4)*y1^2", ia),
                          Relation::EqualTarget, 0.5});
    p.hint = {{16}, 9, 3};
    return p;
  }
  if (name == "two-sheet") {
    // Sheets gamma(x) = 1 - x and eta(x) = x cross at x = 1/2. L vanishes
    // only for slope -1 on gamma and +1 on eta, which forces a constant mix
    // on each side of the crossing; the integral rows pin it to 2/3 on gamma.
    auto p = intervalProblem(name, {0.0, 1.0}, {-1.0, 1.0});
    const auto ia = p.interiorArity();
    p.L = ScalarField::fromExpression(
        "((z1+1)*(y1-x1))^2 + ((z1-1)*(y1-(1-x1)))^2", ia);
    p.L.convexInZ = true;
    p.F = ScalarField::fromExpression("(y1-(1-x1))*(y1-x1)", ia);
    p.integral.push_back(
        {ScalarField::fromExpression("y1-x1", ia), Relation::EqualTarget, 0.0});
    p.integral.push_back({ScalarField::fromExpression("abs(y1-x1)", ia),
                          Relation::EqualTarget, 1.0 / 3.0});
    // sloped sheets are exact lifts only against y-affine test functions
    p.hint = {{8}, 17, 3, 1, 1};
    return p;
  }
  if (name == "codim1-demo") {
    // Neumann problem -Lap y + y = g0 on the unit square with manufactured
    // solution y* = c (p(x1) + p(x2)), p(t) = t^2 - 2 t^3 / 3, c = 3/10.
    VariationalProblem p;
    p.name = p.builtinName = name;
    p.domain = Domain::box({{0.0, 1.0}, {0.0, 1.0}});
    p.m = 1;
    p.yBox = {{-0.05, 0.25}};
    p.zBox = {{-0.2, 0.2}, {-0.2, 0.2}};
    const auto ia = p.interiorArity();
    const auto ba = p.boundaryArity();
    p.L = ScalarField::fromExpression(
        "z1^2 + z2^2 + (y1 - 0.3*(x1^2 - (2/3)*x1^3 + x2^2 - (2/3)*x2^3"
        " - 4 + 4*x1 + 4*x2))^2",
        ia);
    p.L.convexInZ = true;
    p.F = ScalarField::constant(0.0, ia);
    p.G = ScalarField::constant(0.0, ia);
    p.Lb = ScalarField::constant(0.0, ba);
    p.Fb = ScalarField::constant(0.0, ba);
    p.Gb = ScalarField::constant(0.0, ba);
    p.hint = {{12, 12}, 9, 5, 2, 1};
    return p;
  }
  if (name == "counterexample-2d") return gapx::counterexampleProblem();
  throw ProblemError("unknown builtin problem '" + name + "'");
}

}  // namespace occrelax::core
