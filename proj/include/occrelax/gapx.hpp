#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "occrelax/core.hpp"

namespace occrelax::gapx {

using Vec2 = std::array<double, 2>;
/// Row i, column l: d(component i)/d(x_l).
using Mat2 = std::array<std::array<double, 2>, 2>;

inline constexpr double kThresholdE = 1.0 / 41.0;
inline constexpr double kTruncation = 1.0 / 10.0;
inline constexpr double kMeanBound = 1.0 / 40.0;
inline constexpr double kSeparation = 1.0 / 40.0 - 1.0 / 41.0;
/// Pass threshold for the classical search minimum; calibrated from runs
/// at 16 x 64 (smallest minimum found about 1.04).
inline constexpr double kSearchThreshold = 1e-4;
/// Smallest radial resolution; the angular count is four times it.
inline constexpr int kMinResolution = 16;

/// Quintic smoothstep on [-1, 1]: 0 below, 1 above, ramp(-r) = 1 - ramp(r).
[[nodiscard]] double ramp(double r);
/// Bump that is 0 for q <= 1/2 and 1 for q >= 1.
[[nodiscard]] double bump(double q);

/// Polar angle folded into [0, 2*pi).
[[nodiscard]] double polarAngle(const Vec2& x);

[[nodiscard]] Vec2 u0(const Vec2& x);
[[nodiscard]] Vec2 u1(const Vec2& x);
/// Jacobian of u_k; on the positive x1 axis it is the limit from above.
[[nodiscard]] Mat2 du(const Vec2& x, int k);
/// The branch of the double cover whose jump sits at angle alpha.
[[nodiscard]] Vec2 ubar(const Vec2& x, double alpha);
[[nodiscard]] Mat2 dubar(const Vec2& x, double alpha);

/// |<y, u0(x)>| > |x|^6 / 10.
[[nodiscard]] bool inDelta(const Vec2& x, const Vec2& y);

struct FieldRecord {
  Vec2 u0, u1;
  Mat2 du0, du1;
  double psi = 0.0;
  Vec2 U;
  Mat2 V;
  double S = 0.0;
  double g = 0.0;
  double L = 0.0;
  bool inDelta = false;
};

/// Evaluates every auxiliary field at (x, y, z); x in the closed unit disk.
[[nodiscard]] FieldRecord evalFields(const Vec2& x, const Vec2& y, const Mat2& z);

[[nodiscard]] double psi(const Vec2& x, const Vec2& y);
[[nodiscard]] double fieldS(const Vec2& x, const Vec2& y);
[[nodiscard]] double fieldG(const Vec2& x, const Vec2& y);
[[nodiscard]] double lagrangian(const Vec2& x, const Vec2& y, const Mat2& z);

/// Per-node data of u0 that does not depend on (y, z); lets the grid kernels
/// skip the trigonometry.
struct NodeCache {
  Vec2 x;
  double r6 = 0.0;  // |x|^6
  Vec2 u0;
  Mat2 du0;
};
[[nodiscard]] NodeCache makeCache(const Vec2& x);
[[nodiscard]] double lagrangian(const NodeCache& c, const Vec2& y, const Mat2& z);

/// The counterexample as a VariationalProblem (n = m = 2, unit disk).
[[nodiscard]] core::VariationalProblem counterexampleProblem();

// ---------------------------------------------------------------------------
// Polar grids over the unit disk.

/// Cell-centred polar grid: r_i = (i + 1/2)/nr, theta_j = (j + 1/2) 2pi/nt.
/// Cell areas are exact annular sectors.
class PolarGrid {
 public:
  PolarGrid(int nr, int nt);
  [[nodiscard]] int nr() const { return nr_; }
  [[nodiscard]] int nt() const { return nt_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(nr_) * nt_; }
  [[nodiscard]] std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * nt_ + j;
  }
  [[nodiscard]] double radius(int i) const { return (i + 0.5) * dr_; }
  [[nodiscard]] double angle(int j) const { return (j + 0.5) * dt_; }
  [[nodiscard]] double dr() const { return dr_; }
  [[nodiscard]] double dtheta() const { return dt_; }
  [[nodiscard]] double area(int i) const;
  [[nodiscard]] Vec2 point(int i, int j) const;
  /// Whether radial ring i lies in the corona 1/2 <= r <= 1.
  [[nodiscard]] bool inCorona(int i) const { return (i * dr_) >= 0.5 - 1e-12; }
  [[nodiscard]] const std::vector<NodeCache>& cache() const { return cache_; }

 private:
  int nr_, nt_;
  double dr_, dt_;
  std::vector<NodeCache> cache_;
};

/// A Y-valued field sampled at the nodes of a PolarGrid.
struct PolarField {
  std::vector<Vec2> values;
};

// ---------------------------------------------------------------------------
// Relaxed side.

struct RelaxedReport {
  double value = 0.0;
  double mass = 0.0;
  bool massOk = true;
};

/// Integral of L against w0 xi0#dx + w1 xi1#dx, with the graphs shifted by
/// `shift` in y. The default weights give the relaxed minimiser.
[[nodiscard]] RelaxedReport relaxedValue(int nr, int nt, double w0 = 0.5,
                                         double w1 = 0.5, double shift = 0.0);

// ---------------------------------------------------------------------------
// Classical side.

/// |B_alpha| with membership |h - ubar_alpha| <= E; cells cut by the ray at
/// alpha are split in proportion to the angular extent on each side.
[[nodiscard]] double branchArea(const PolarGrid& grid, const PolarField& h,
                                double alpha);

struct AlphaResult {
  double alpha0 = 0.0;
  double phi = 0.0;  // |B_alpha0| - |B_alpha0 + 2pi|
  double area = 0.0; // |B_alpha0|
  bool degenerate = false;  // both sets empty for every alpha
};

[[nodiscard]] AlphaResult findAlpha0(const PolarGrid& grid, const PolarField& h,
                                     int samples = 0, double tol = 1e-6);

/// Cartesian Jacobian of a polar-grid field by central differences
/// (periodic in theta, one-sided at the radial ends). Columns adjacent to
/// the ray at `cutAngle` take one-sided angular differences from their own
/// side when `useCut` is set.
[[nodiscard]] std::vector<Mat2> polarGradient(const PolarGrid& grid,
                                              const PolarField& h);

struct ClassicalReport {
  char caseId = 'A';
  double alpha0 = 0.0;
  double areaB = 0.0;
  double coronaArea = 0.0;
  double caseABound = 0.0;     // E^2 |Gamma| / 2
  double objective = 0.0;      // discretised integral of L(x, h, Dh)
  double meanM = 0.0;          // mean of the truncated distance over Gamma
  double variance = 0.0;       // integral of (hbar0 - M)^2 over Gamma
  double derivativeLhs = 0.0;  // integral of |Dh - V(x,h)|^2 over Gamma
  double derivativeRhs = 0.0;  // integral of |D hbar0|^2 off the slit
  double pointwiseFraction = 0.0;  // share of nodes with |Dh - V| >= |D hbar0|
  bool degenerate = false;
};

[[nodiscard]] ClassicalReport classicalLowerReport(const PolarGrid& grid,
                                                   const PolarField& h);

/// Discretised objective sum_cells area * L(x, h, Dh) (serial reference).
[[nodiscard]] double objectiveSerial(const PolarGrid& grid, const PolarField& h);
/// Same value, per-node contributions computed in parallel and summed in
/// node order (bitwise identical to the serial reference).
[[nodiscard]] double objectiveParallel(const PolarGrid& grid, const PolarField& h);
/// Gradient of the discretised objective with respect to the node values.
/// dL/dy by central differences, dL/dz = 2(z - V) in closed form. Both
/// kernels gather per node in the same order and agree bitwise.
void gradientSerial(const PolarGrid& grid, const PolarField& h, PolarField& grad);
void gradientParallel(const PolarGrid& grid, const PolarField& h, PolarField& grad);

struct SearchOptions {
  int inits = 50;
  int steps = 500;
  std::uint64_t seed = 42;
  int nr = 16;
  int nt = 64;
  double initialStep = 0.05;
};

struct SearchRun {
  std::string label;
  double initialObjective = 0.0;
  double finalObjective = 0.0;
  std::vector<double> history;  // objective after every accepted step
};

struct SearchResult {
  double minObjective = 0.0;
  std::size_t bestRun = 0;
  PolarField minimizer;
  std::vector<SearchRun> runs;
};

/// Gradient descent with step halving from a single initial field.
[[nodiscard]] SearchRun descend(const PolarGrid& grid, PolarField& h, int steps,
                                double initialStep, bool parallel = true);

/// Multi-start search: the structured starts {0, u0, u0 on theta < pi and u1
/// beyond} followed by `inits` seeded random fields.
[[nodiscard]] SearchResult classicalSearch(const SearchOptions& opt);

/// Seeded random starting field (smooth low-mode combination).
[[nodiscard]] PolarField randomField(const PolarGrid& grid, std::uint64_t seed);

struct RegularityReport {
  int samples = 0;
  double maxRatio = 0.0;         // max |grad L(p) - grad L(q)| / |p - q|
  double maxRatioNearOrigin = 0.0;
  double maxZGradientError = 0.0;  // |grad_z L - 2 (z - Du_i)| inside Delta
  double maxHessianError = 0.0;    // |Hess_z L - 2 I|
};

[[nodiscard]] RegularityReport regularityProbe(int samples, std::uint64_t seed);

struct InvariantCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;
};

/// Field invariants at `points` random samples (deterministic in seed).
[[nodiscard]] std::vector<InvariantCheck> checkInvariants(int points,
                                                          std::uint64_t seed);

}  // namespace occrelax::gapx
