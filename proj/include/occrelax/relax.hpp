#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "occrelax/basis.hpp"
#include "occrelax/core.hpp"
#include "occrelax/lp.hpp"
#include "occrelax/measure.hpp"

namespace occrelax::relax {

struct Tolerances {
  std::optional<double> F, G;  // default: 1e-6 * max |field| over the grid
};

/// The discretised relaxation as an LP together with the column map.
struct Assembly {
  lp::LinearProgram lp;
  std::vector<std::size_t> interiorNode;  // column -> grid node index
  std::vector<std::size_t> boundaryNode;  // column - interiorNode.size() -> bnode
  std::size_t massRow = 0;
  std::size_t firstWeakRow = 0, firstIntegralRow = 0;
  double tolF = 0.0, tolG = 0.0, tolFb = 0.0, tolGb = 0.0;
};

/// Rows, in order: mass, weak rows sorted by (basis index, l), integral rows.
[[nodiscard]] Assembly assemble(const core::VariationalProblem& problem,
                                const measure::Grid& grid, const TestBasis& basis,
                                const Tolerances& tol = {});

struct RelaxationResult {
  lp::Status status = lp::Status::NumericalFailure;
  std::string message;
  double value = 0.0;              // LP objective
  double recomputedValue = 0.0;    // integral of L and L_b against the measure
  measure::GriddedMeasure measure;
  lp::Certificate certificate;
  long iterations = 0;
  std::size_t rows = 0, columns = 0;
  std::size_t activeSupport = 0;   // retained interior + boundary nodes
  double weakResidual = 0.0;
  double seconds = 0.0;
};

struct RelaxOptions {
  measure::GridSpec grid;
  BasisOptions basis;
  Tolerances tol;
  lp::SolveOptions lp;
};

/// Grid spec from the problem's hint.
[[nodiscard]] measure::GridSpec hintedGrid(const core::VariationalProblem& problem);
[[nodiscard]] BasisOptions hintedBasis(const core::VariationalProblem& problem);

[[nodiscard]] RelaxationResult solveRelaxation(const core::VariationalProblem& problem,
                                               std::shared_ptr<const measure::Grid> grid,
                                               const TestBasis& basis,
                                               const Tolerances& tol = {},
                                               const lp::SolveOptions& lpOptions = {});
/// Convenience overload that builds grid and basis from the options.
[[nodiscard]] RelaxationResult solveRelaxation(const core::VariationalProblem& problem,
                                               const RelaxOptions& options);

class ConstraintViolation : public ProblemError {
 public:
  ConstraintViolation(const std::string& what, std::vector<std::string> details)
      : ProblemError(what), details_(std::move(details)) {}
  [[nodiscard]] const std::vector<std::string>& details() const { return details_; }

 private:
  std::vector<std::string> details_;
};

struct ClassicalOptions {
  Tolerances tol;
  bool checkConstraints = true;
};

/// Midpoint quadrature of the classical objective for a grid function with
/// its finite-difference gradient; throws ConstraintViolation listing nodes
/// where F, G, F_b or G_b exceed the tolerance.
[[nodiscard]] double classicalValue(const core::VariationalProblem& problem,
                                    const measure::Grid& grid,
                                    const measure::GridFunction& candidate,
                                    const ClassicalOptions& options = {});

/// The double-well integrand with L replaced by its convex hull in z,
/// max(|z| - 1, 0).
[[nodiscard]] core::VariationalProblem convexifiedDoubleWell();

}  // namespace occrelax::relax
