#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "occrelax/lp.hpp"

namespace occrelax::lp::oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Brute-force oracle: every choice of n independent active constraints
/// among rows and bounds gives a candidate vertex; the best feasible one
/// is optimal for a bounded polytope. nullopt when no vertex is feasible.
inline std::optional<double> vertexOracle(const LinearProgram& lp) {
  const int n = lp.numVars;
  struct Con {
    Eigen::VectorXd a;
    double b;
    Relation rel;
  };
  std::vector<Con> cons;
  for (const auto& r : lp.rows) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (const auto& [j, v] : r.coef) a[j] += v;
    cons.push_back({a, r.rhs, r.relation});
  }
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    cons.push_back({e, 0.0, Relation::GreaterEqual});
    if (!lp.upper.empty() && std::isfinite(lp.upper[j]))
      cons.push_back({e, lp.upper[j], Relation::LessEqual});
  }
  const int k = static_cast<int>(cons.size());
  auto feasible = [&](const Eigen::VectorXd& x) {
    for (const auto& c : cons) {
      const double v = c.a.dot(x), tol = 1e-9 * (1.0 + std::fabs(c.b));
      if (c.rel == Relation::Equal && std::fabs(v - c.b) > tol) return false;
      if (c.rel == Relation::LessEqual && v > c.b + tol) return false;
      if (c.rel == Relation::GreaterEqual && v < c.b - tol) return false;
    }
    return true;
  };
  std::optional<double> best;
  std::vector<int> pick(n);
  // lexicographic n-subsets of k constraints
  for (int i = 0; i < n; ++i) pick[i] = i;
  if (n > k) return std::nullopt;
  for (;;) {
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) A.row(i) = cons[pick[i]].a.transpose(), b[i] = cons[pick[i]].b;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() == n) {
      const Eigen::VectorXd x = lu.solve(b);
      if (feasible(x)) {
        double obj = 0.0;
        for (int j = 0; j < n; ++j) obj += lp.cost[j] * x[j];
        if (!best || obj < *best) best = obj;
      }
    }
    int i = n - 1;
    while (i >= 0 && pick[i] == k - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int t = i + 1; t < n; ++t) pick[t] = pick[t - 1] + 1;
  }
  return best;
}

/// Integer data in [-4, 4] (degenerate vertices are common); a cap row
/// keeps the polytope bounded.
inline LinearProgram randomLp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dims(1, 8), coef(-4, 4), rhs(-3, 8), rel(0, 2), coin(0, 3);
  LinearProgram lp;
  const int n = dims(rng), m = dims(rng);
  for (int j = 0; j < n; ++j) lp.addVariable(coef(rng), coin(rng) == 0 ? 1.0 + coin(rng) : kInf);
  for (int i = 0; i < m; ++i) {
    Row r;
    for (int j = 0; j < n; ++j)
      if (coin(rng) != 0) r.coef.push_back({j, static_cast<double>(coef(rng))});
    r.relation = static_cast<Relation>(rel(rng));
    r.rhs = rhs(rng);
    lp.addRow(r);
  }
  Row cap;
  for (int j = 0; j < n; ++j) cap.coef.push_back({j, 1.0});
  cap.relation = Relation::LessEqual;
  cap.rhs = 10.0;
  lp.addRow(cap);
  return lp;
}

inline LinearProgram twoAtom() {
  // mass at y = 0 and y = 1, L = y, H = 1 - 10 y with int H <= 0
  LinearProgram lp;
  lp.addVariable(0.0);
  lp.addVariable(1.0);
  lp.addRow({{{0, 1.0}, {1, 1.0}}, Relation::Equal, 1.0});
  lp.addRow({{{0, 1.0}, {1, -9.0}}, Relation::LessEqual, 0.0});
  return lp;
}

inline LinearProgram threeAtom() {
  LinearProgram lp;
  lp.addVariable(0.0);
  lp.addVariable(1.0);
  lp.addVariable(2.0);
  lp.addRow({{{0, 1.0}, {1, 1.0}, {2, 1.0}}, Relation::Equal, 1.0});
  lp.addRow({{{1, 1.0}, {2, 0.5}}, Relation::Equal, 0.5});
  return lp;
}

}  // namespace occrelax::lp::oracle
