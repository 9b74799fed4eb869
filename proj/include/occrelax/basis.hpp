#pragma once

#include <span>
#include <string>
#include <vector>

#include "occrelax/measure.hpp"

namespace occrelax::relax {

/// One-dimensional factor of a tensor-product test function.
struct Factor {
  enum class Kind { Legendre, Hat } kind = Kind::Legendre;
  int power = 0;                         // Legendre: P_power((t - center) / halfWidth)
  double center = 0, halfWidth = 1;
  double left = 0, peak = 0, right = 0;  // Hat: 0 at left/right, 1 at peak

  [[nodiscard]] double value(double t) const;
  [[nodiscard]] double derivative(double t) const;
  /// Mean of the factor over [a, b] (the value when a == b).
  [[nodiscard]] double average(double a, double b) const;
  /// Mean of the derivative over [a, b] (the derivative when a == b).
  [[nodiscard]] double derivativeAverage(double a, double b) const;
};

/// phi(x, y) = prod_d X_d(x_d) * prod_k Y_k(y_k). Polynomial factors are
/// Legendre polynomials scaled to the grid box: the span equals that of the
/// monomials of the same degree, with far better conditioned LP rows.
struct TestFunction {
  std::vector<Factor> x, y;
  bool boundaryCoupled = false;  // false: compactly supported in Omega
};

enum class YFamily {
  DualHats,    // {1, y} plus hats with kinks between y nodes (m = 1)
  Polynomial,  // polynomials of total degree <= yDegree
};

struct BasisOptions {
  int degree = 4;  // total degree of the boundary-coupled polynomials
  YFamily yFamily = YFamily::DualHats;
  int yDegree = 3;
};

class TestBasis {
 public:
  TestBasis() = default;
  TestBasis(const measure::Grid& grid, const BasisOptions& options);

  [[nodiscard]] std::size_t size() const { return functions_.size(); }
  [[nodiscard]] const TestFunction& operator[](std::size_t f) const {
    return functions_[f];
  }
  [[nodiscard]] const std::vector<TestFunction>& functions() const { return functions_; }
  [[nodiscard]] const BasisOptions& options() const { return options_; }

  /// Coefficient of an interior node in the weak row (f, l): the mean over
  /// the x cell of d phi/d x_l + sum_k d phi/d y_k z_{k l}.
  [[nodiscard]] double interiorCoefficient(std::size_t f, int l,
                                           std::span<const double> cellLo,
                                           std::span<const double> cellHi,
                                           std::span<const double> y,
                                           std::span<const double> z) const;
  /// Mean of phi over a boundary patch (point value for zero width).
  [[nodiscard]] double boundaryValue(std::size_t f, std::span<const double> lo,
                                     std::span<const double> hi,
                                     std::span<const double> y) const;

 private:
  std::vector<TestFunction> functions_;
  BasisOptions options_;
  int n_ = 1, m_ = 1;
};

/// x extent of interior cell i and boundary patch b.
void cellBounds(const measure::Grid& grid, std::size_t i, std::vector<double>& lo,
                std::vector<double>& hi);
void patchBounds(const measure::Grid& grid, std::size_t b, std::vector<double>& lo,
                 std::vector<double>& hi);

/// max over rows (f, l) of |interior side - boundary side| for the measure.
[[nodiscard]] double weakResidual(const measure::GriddedMeasure& mu,
                                  const TestBasis& basis);

}  // namespace occrelax::relax
