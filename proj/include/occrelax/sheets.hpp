#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "occrelax/core.hpp"
#include "occrelax/measure.hpp"
#include "occrelax/relax.hpp"

namespace occrelax::sheets {

/// Raised when an operation needs codimension one (m = 1).
class CodimensionError : public ProblemError {
 public:
  using ProblemError::ProblemError;
};

/// rho(x_i, y_j) = -(mass of the column at or below y_j) / (column mass).
struct DensityField {
  std::size_t xCount = 0, yCount = 0;
  std::vector<double> values;  // i * yCount + j
  std::vector<double> columnMass;
  /// Zero-mass columns and the column each one copies (nearest with mass).
  std::vector<std::size_t> emptyColumns, sourceColumn;
  double c = 1.0;
  double lo = -1.0, hi = 0.0;  // range interval I

  [[nodiscard]] double at(std::size_t i, std::size_t j) const {
    return values[i * yCount + j];
  }
  /// Column whose data a given column uses (itself unless it was empty).
  [[nodiscard]] std::size_t source(std::size_t i) const;
};

/// Throws CodimensionError for m != 1 and ProblemError if every column is empty.
[[nodiscard]] DensityField density(const measure::GriddedMeasure& mu);

/// Distinct nonzero values of rho, sorted descending (tolerance 1e-9).
[[nodiscard]] std::vector<double> plateaus(const DensityField& rho);

/// Number of plateaus when every plateau is a multiple of 1 / count, so
/// that uniform levels decompose the measure exactly; else the smallest
/// such K up to 64; otherwise 16.
[[nodiscard]] int defaultSheetCount(const DensityField& rho);

struct SheetFamily {
  std::vector<double> levels;   // r_k = -(k - 1/2) / K
  std::vector<double> weights;  // nu_k = 1 / K
  std::vector<std::vector<std::size_t>> yIndex;           // [k][i]
  std::vector<std::vector<double>> values;                // [k][i]
  std::vector<std::vector<std::vector<double>>> derivative;    // [k][i][l], centroid
  std::vector<std::vector<std::vector<double>>> fdDerivative;  // [k][i][l], cross-check
  /// Boundary traces from the quantiles of mu_b, [k][b]; a boundary node
  /// without mass takes the sheet value of the nearest x node.
  std::vector<std::vector<double>> boundaryValues;

  [[nodiscard]] std::size_t size() const { return levels.size(); }
  /// Sheet k as a grid function (centroid derivative, boundary trace).
  [[nodiscard]] measure::GridFunction function(std::size_t k) const;
};

/// Left-continuous quantile sheets phi_r(x) = min { y_j : rho(x, y_j) <= r }.
[[nodiscard]] SheetFamily extractSheets(const DensityField& rho,
                                        const measure::GriddedMeasure& mu, int K);

struct SuperpositionReport {
  std::vector<double> deviation;  // per test field
  double maxDeviation = 0.0;
  double boundaryDeviation = 0.0;  // max over boundary test fields, if any
};

/// max over fields of |int f dmu - sum_k nu_k sum_i m_i f(x_i, phi_k, Dphi_k)|
/// with m_i the column mass; boundary fields compare int f dmu_b with
/// sum_k nu_k sum_b m_b f(x_b, phi_k) using the boundary node masses.
[[nodiscard]] SuperpositionReport checkSuperposition(
    const measure::GriddedMeasure& mu, const SheetFamily& family,
    const std::vector<core::ScalarField>& fields,
    const std::vector<core::ScalarField>& boundaryFields = {});

struct SheetValue {
  double level = 0.0;
  double value = 0.0;    // with the centroid derivative
  double fdValue = 0.0;  // with finite-difference derivatives of the values
  double maxF = 0.0, maxG = 0.0, maxFb = 0.0, maxGb = 0.0;  // |F|, max(G, 0), ...
  double integralViolation = 0.0;
  bool feasible = false;
};

struct RecoveryOptions {
  int K = 0;  // 0: defaultSheetCount
  relax::Tolerances tol;  // default 1e-6 * (1 + max |field| over the grid)
};

struct Recovery {
  std::vector<SheetValue> sheets;
  SheetFamily family;
  std::size_t best = 0;        // argmin value among feasible sheets
  double bestValue = 0.0;
  double averageValue = 0.0;   // sum_k nu_k value_k
  double relaxedValue = 0.0;
  bool noGapAsserted = false;  // L convex in z
  std::string note;
  [[nodiscard]] bool withinSlack(double eps) const { return bestValue <= relaxedValue + eps; }
};

/// Evaluates every sheet and returns the best feasible one. Throws
/// CodimensionError for m != 1 and relax::ConstraintViolation with a
/// per-sheet report when no sheet is feasible.
[[nodiscard]] Recovery recoverClassical(const core::VariationalProblem& problem,
                                        const measure::GriddedMeasure& mu,
                                        double relaxedValue,
                                        const RecoveryOptions& options = {});

/// CSV x1..,y1,rho and r,x1..,phi,dphi1.. (17 significant digits).
[[nodiscard]] std::string densityCsv(const DensityField& rho, const measure::Grid& grid);
[[nodiscard]] std::string sheetsCsv(const SheetFamily& family, const measure::Grid& grid);

}  // namespace occrelax::sheets
