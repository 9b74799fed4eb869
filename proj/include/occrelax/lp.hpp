#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace occrelax::lp {

enum class Relation { LessEqual, GreaterEqual, Equal };

struct Row {
  std::vector<std::pair<int, double>> coef;  // (column, value), any order
  Relation relation = Relation::Equal;
  double rhs = 0.0;
};

/// min c^T x  s.t. rows, 0 <= x <= upper.
struct LinearProgram {
  int numVars = 0;
  std::vector<double> cost;
  std::vector<Row> rows;
  std::vector<double> upper;  // empty, or one entry per variable (inf = none)

  int addVariable(double c, double ub = std::numeric_limits<double>::infinity());
  void addRow(Row row) { rows.push_back(std::move(row)); }
  /// Throws std::invalid_argument on bad indices or non-finite data.
  void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

[[nodiscard]] const char* toString(Status s);

enum class Pricing {
  Bland,    // lowest eligible index on every pivot
  Dantzig,  // most negative reduced cost, lexicographic ratio test on ties
};

enum class Algorithm {
  Auto,    // dual simplex on perturbed costs when every cost is >= 0, else primal
  Primal,  // two-phase primal simplex
};

struct SolveOptions {
  Algorithm algorithm = Algorithm::Auto;
  long maxIterations = 1'000'000;
  int refactorEvery = 50;
  Pricing pricing = Pricing::Dantzig;
  double feasibilityTol = 1e-9;
  double optimalityTol = 1e-9;
  double pivotTol = 1e-9;
};

struct Certificate {
  double primal = 0.0;          // max constraint / bound violation
  double dual = 0.0;            // max reduced-cost or dual-sign violation
  double complementarity = 0.0; // max |slack * multiplier|
  double gap = 0.0;             // |primal objective - dual objective|
  double scale = 1.0;           // 1 + |b|_inf + |c|_inf
  [[nodiscard]] double tolerance() const { return 1e-7 * scale; }
  [[nodiscard]] bool ok() const {
    const double t = tolerance();
    return primal <= t && dual <= t && complementarity <= t && gap <= t;
  }
};

/// Duals follow min-form conventions: <= rows carry y <= 0, >= rows y >= 0,
/// equality rows are free; upper-bound multipliers are <= 0.
struct LpSolution {
  Status status = Status::NumericalFailure;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> boundDual;
  double objective = 0.0;
  double dualObjective = 0.0;
  long iterations = 0;
  long phase1Iterations = 0;  // phase 1 (primal) or dual simplex iterations
  Certificate certificate;
  std::string message;
};

[[nodiscard]] LpSolution solve(const LinearProgram& lp, const SolveOptions& opt = {});

/// Recomputes the certificate from lp and the reported x, y, boundDual.
[[nodiscard]] Certificate verify(const LinearProgram& lp, const LpSolution& sol);

/// Plain-text format:
///   min <numVars> j:c ...
///   <= | >= | =  <rhs> j:a ...
///   ub <j> <value>
/// Lines starting with '#' are comments.
[[nodiscard]] std::string dump(const LinearProgram& lp);
[[nodiscard]] LinearProgram parse(std::string_view text);

}  // namespace occrelax::lp
