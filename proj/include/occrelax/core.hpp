#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "occrelax/expr.hpp"

namespace occrelax {

/// Thrown for malformed problem data or unsupported requests.
class ProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0, hi = 1.0;
};

namespace core {

enum class DomainKind { Interval, Box, Disk, Corona };

/// Bounded connected open region. Disks and coronas are centred at the
/// origin and live in the plane.
class Domain {
 public:
  static Domain interval(double lo, double hi);
  static Domain box(std::vector<Interval> sides);
  static Domain disk(double radius);
  static Domain corona(double inner, double outer);

  [[nodiscard]] DomainKind kind() const { return kind_; }
  [[nodiscard]] int dimension() const { return static_cast<int>(lower_.size()); }
  /// Axis-aligned bounding box, one interval per coordinate.
  [[nodiscard]] std::vector<Interval> boundingBox() const;
  [[nodiscard]] bool contains(std::span<const double> x) const;
  [[nodiscard]] double innerRadius() const { return inner_; }
  [[nodiscard]] double outerRadius() const { return outer_; }

 private:
  Domain() = default;
  DomainKind kind_ = DomainKind::Interval;
  std::vector<double> lower_, upper_;
  double inner_ = 0.0, outer_ = 0.0;
};

struct BoundaryNode {
  std::vector<double> x;
  std::vector<double> normal;  // outward, unit length
  double weight = 0.0;         // (n-1)-dimensional boundary measure
};

[[nodiscard]] double volume(const Domain& domain);

/// Quadrature nodes on the boundary. Intervals always return their two
/// endpoints. Disks split `count` equal arcs; coronas split `count` between
/// the two circles; boxes place cell-centred nodes on every face (corners
/// are never nodes).
[[nodiscard]] std::vector<BoundaryNode> boundaryNodes(const Domain& domain,
                                                      int count);

/// Total boundary measure in closed form.
[[nodiscard]] double boundaryMeasure(const Domain& domain);

/// A scalar field on x (n), y (m) and optionally z (n*m) coordinates.
/// Points are flat spans [x..., y..., z...] with z[l*m + i] = dy_i/dx_l.
class ScalarField {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  ScalarField() = default;
  ScalarField(expr::Arity arity, Fn fn, std::string source = {});
  static ScalarField fromExpression(const std::string& source, expr::Arity arity);
  static ScalarField constant(double value, expr::Arity arity);

  double operator()(std::span<const double> point) const { return fn_(point); }
  [[nodiscard]] bool defined() const { return static_cast<bool>(fn_); }
  [[nodiscard]] const expr::Arity& arity() const { return arity_; }
  /// Expression text when the field came from the expression language.
  [[nodiscard]] const std::string& source() const { return source_; }

  bool convexInZ = false;

 private:
  expr::Arity arity_;
  Fn fn_;
  std::string source_;
};

enum class Relation { LessEqualZero, EqualTarget };

struct IntegralConstraint {
  ScalarField H;
  Relation relation = Relation::LessEqualZero;
  double target = 0.0;
};

/// Suggested discretisation shipped with the built-in problems.
struct GridHint {
  std::vector<int> nx;
  int ny = 5;
  int nz = 5;
  int degree = 4;    // boundary-coupled polynomial degree
  int yDegree = -1;  // polynomial y family of this degree; -1 for dual hats
};

struct VariationalProblem {
  std::string name;
  Domain domain = Domain::interval(0.0, 1.0);
  int m = 1;
  std::vector<Interval> yBox;  // m intervals bounding the y grid
  std::vector<Interval> zBox;  // n*m intervals bounding admissible gradients
  ScalarField L, Lb, F, G, Fb, Gb;
  std::vector<IntegralConstraint> integral;
  GridHint hint;
  std::string builtinName;  // set when the problem came from builtin()

  [[nodiscard]] int n() const { return domain.dimension(); }
  [[nodiscard]] expr::Arity interiorArity() const { return {n(), m, true}; }
  [[nodiscard]] expr::Arity boundaryArity() const { return {n(), m, false}; }
  /// Throws ProblemError if arities or boxes are inconsistent.
  void validate() const;
};

/// Control-dependent problem; every interior field takes points
/// [x, y, z, u] and every boundary field [x, y, u].
struct ControlProblem {
  VariationalProblem base;  // supplies domain, m, boxes and integral rows
  int controlDim = 1;
  ScalarField::Fn L, F, G;        // interior fields with control argument; F, G optional
  ScalarField::Fn Lb, Fb, Gb;     // boundary fields with control argument; all optional
  std::vector<std::vector<double>> controlGrid;
  std::vector<std::vector<double>> boundaryControlGrid;
  double penalty = 1e6;
  std::optional<double> tolF;  // default: 1e-6 times max |F| on the working box
};

/// Replaces the control by grid minimisation:
///   Lbar(x,y,z) = min { L(x,y,z,u) : |F(x,y,z,u)| <= tol_F, G <= tol_F },
/// with the configured penalty where no sample is admissible. The returned F
/// is an indicator (0 admissible, 1 not) of the projected admissible set and
/// G is identically zero.
[[nodiscard]] VariationalProblem reduceControl(const ControlProblem& cp);

/// Scale-aware tolerance used by reduceControl: 1e-6 * max |F| over a
/// deterministic sample of the working box and control grid.
[[nodiscard]] double defaultControlTolerance(const ControlProblem& cp);

[[nodiscard]] std::vector<std::string> builtinNames();
[[nodiscard]] VariationalProblem builtin(const std::string& name);

}  // namespace core
}  // namespace occrelax
