#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "occrelax/core.hpp"

namespace occrelax::measure {

/// Requested resolution. Single entries broadcast to every axis.
struct GridSpec {
  std::vector<int> nx{16};
  std::vector<int> ny{5};
  std::vector<int> nz{5};
};

/// Tensor grid over Omega x Y x Z. x nodes are cell centres of a uniform
/// tensor over the bounding box, kept when the centre lies in Omega. y and z
/// nodes are uniform and include the box endpoints; a degenerate box or a
/// size of 1 gives the single node `lo`.
struct Grid {
  int n = 1, m = 1;
  std::vector<int> nx;
  std::vector<double> xLo, xH;                 // per axis origin and width
  std::vector<std::vector<double>> xNodes;     // retained cell centres
  std::vector<std::vector<int>> xCells;        // tensor index of each
  std::vector<double> cellVolume;              // scaled to sum to |Omega|
  std::vector<std::vector<double>> yAxes;      // m axes
  std::vector<std::vector<double>> zAxes;      // n*m axes
  std::vector<core::BoundaryNode> boundary;
  /// Tangential half widths of the face patch owned by each boundary node
  /// (zero where the node is a point sample).
  std::vector<std::vector<double>> boundaryHalfWidth;

  [[nodiscard]] std::size_t xCount() const { return xNodes.size(); }
  [[nodiscard]] std::size_t yCount() const;
  [[nodiscard]] std::size_t zCount() const;
  [[nodiscard]] std::size_t bCount() const { return boundary.size(); }
  [[nodiscard]] std::vector<double> yPoint(std::size_t j) const;
  [[nodiscard]] std::vector<double> zPoint(std::size_t k) const;
  [[nodiscard]] std::size_t node(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * yCount() + j) * zCount() + k;
  }
  [[nodiscard]] std::size_t bnode(std::size_t b, std::size_t j) const {
    return b * yCount() + j;
  }
  /// Index of the retained x node with the given tensor index, or -1.
  [[nodiscard]] long findCell(const std::vector<int>& cell) const;
  /// Flat point [x, y, z] for interior node (i, j, k).
  [[nodiscard]] std::vector<double> interiorPoint(std::size_t i, std::size_t j,
                                                  std::size_t k) const;
  [[nodiscard]] std::vector<double> boundaryPoint(std::size_t b, std::size_t j) const;
  /// Nearest y node to a y value (per component); throws if outside the box
  /// by more than half a spacing.
  [[nodiscard]] std::size_t nearestY(std::span<const double> y) const;
  [[nodiscard]] std::size_t nearestZ(std::span<const double> z) const;

  double domainVolume = 0.0;

 private:
  friend Grid makeGrid(const core::VariationalProblem&, const GridSpec&);
  std::vector<long> cellLookup_;
};

[[nodiscard]] Grid makeGrid(const core::VariationalProblem& problem,
                            const GridSpec& spec);

/// Nonnegative weights on interior nodes (x, y, z) and boundary nodes (b, y).
class GriddedMeasure {
 public:
  GriddedMeasure() = default;
  explicit GriddedMeasure(std::shared_ptr<const Grid> grid);

  [[nodiscard]] const Grid& grid() const { return *grid_; }
  [[nodiscard]] std::shared_ptr<const Grid> gridPtr() const { return grid_; }
  std::vector<double> weights;          // size xCount*yCount*zCount
  std::vector<double> boundaryWeights;  // size bCount*yCount

  [[nodiscard]] double mass() const;
  [[nodiscard]] double boundaryMass() const;
  /// Integral of an interior field and of a boundary field.
  [[nodiscard]] double integrate(const core::ScalarField& f) const;
  [[nodiscard]] double integrateBoundary(const core::ScalarField& f) const;
  /// Throws ProblemError on negative weights or |mass - |Omega|| > 1e-9 |Omega|.
  void checkInvariants() const;

 private:
  std::shared_ptr<const Grid> grid_;
};

/// Values and gradient of a Y-valued function at the grid nodes.
struct GridFunction {
  std::vector<std::vector<double>> values;          // per x node, m entries
  std::vector<std::vector<double>> gradient;        // per x node, z layout
  std::vector<std::vector<double>> boundaryValues;  // per boundary node
};

using PointFunction = std::function<std::vector<double>(std::span<const double>)>;

/// Samples f at the x nodes and boundary nodes; the gradient is the grid
/// finite difference (central where both neighbours exist, else one-sided).
[[nodiscard]] GridFunction sampleFunction(const Grid& grid, const PointFunction& f);

/// Grid finite-difference gradient of nodal values.
[[nodiscard]] std::vector<std::vector<double>> finiteDifferenceGradient(
    const Grid& grid, const std::vector<std::vector<double>>& values);

/// Occupation measure of a grid function by nearest-node deposition.
[[nodiscard]] GriddedMeasure occupationLift(std::shared_ptr<const Grid> grid,
                                            const GridFunction& y);

/// Mass per x cell divided by the cell volume.
[[nodiscard]] std::vector<double> projectionProfile(const GriddedMeasure& mu);

struct CentroidField {
  std::vector<double> marginal;                // per (x, y) node
  std::vector<std::vector<double>> Z;          // conditional z mean, empty when no mass
};

[[nodiscard]] CentroidField centroid(const GriddedMeasure& mu);

/// Moves each fiber's mass to the z node nearest its centroid.
[[nodiscard]] GriddedMeasure concentrate(const GriddedMeasure& mu);

/// Snapping error sum_fibres mass * |L(x, y, snap(Z)) - L(x, y, Z)|; bounds
/// the difference between concentrating onto the grid and onto Z itself.
[[nodiscard]] double snappingError(const GriddedMeasure& mu, const core::ScalarField& L);

/// CSV with header x1..,y1..,z11..,weight (only positive weights) and the
/// boundary companion x1..,y1..,weight. Doubles at 17 significant digits.
void writeCsv(const GriddedMeasure& mu, const std::string& interiorPath,
              const std::string& boundaryPath);
[[nodiscard]] std::string interiorCsv(const GriddedMeasure& mu);
[[nodiscard]] std::string boundaryCsv(const GriddedMeasure& mu);
/// Rebuilds a measure on `grid` from the two CSV texts; rows must hit nodes.
[[nodiscard]] GriddedMeasure readCsv(std::shared_ptr<const Grid> grid,
                                     const std::string& interiorText,
                                     const std::string& boundaryText);

}  // namespace occrelax::measure
