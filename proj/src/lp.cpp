#include "occrelax/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "occrelax/io_util.hpp"

namespace occrelax::lp {

int LinearProgram::addVariable(double c, double ub) {
  cost.push_back(c);
  if (!upper.empty() || std::isfinite(ub)) {
    upper.resize(numVars, std::numeric_limits<double>::infinity());
    upper.push_back(ub);
  }
  return numVars++;
}

void LinearProgram::validate() const {
  if (numVars < 0 || cost.size() != static_cast<std::size_t>(numVars))
    throw std::invalid_argument("cost vector length differs from numVars");
  if (!upper.empty() && upper.size() != static_cast<std::size_t>(numVars))
    throw std::invalid_argument("upper bound vector length differs from numVars");
  for (double c : cost)
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite cost");
  for (double u : upper)
    if (std::isnan(u) || u < 0.0) throw std::invalid_argument("bad upper bound");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].rhs))
      throw std::invalid_argument("non-finite rhs in row " + std::to_string(i));
    for (const auto& [j, a] : rows[i].coef) {
      if (j < 0 || j >= numVars)
        throw std::invalid_argument("column index out of range in row " +
                                    std::to_string(i));
      if (!std::isfinite(a))
        throw std::invalid_argument("non-finite coefficient in row " +
                                    std::to_string(i));
    }
  }
}

const char* toString(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

enum class ColKind { Structural, Slack, Artificial };

// Flags equality rows that are linear combinations of earlier-pivoted ones.
// Rows are sketched by a sparse random embedding of the columns (fixed seed),
// which keeps their linear dependencies with probability one, and the sketch
// goes through a column-pivoted QR.
std::vector<char> dependentRows(const std::vector<std::vector<std::pair<int, double>>>& rows,
                                int numVars) {
  const int m = static_cast<int>(rows.size());
  std::vector<char> dependent(m, 0);
  if (m < 2) return dependent;
  const int k = std::min(numVars, 2 * m + 8);
  constexpr int kPerColumn = 8;
  std::vector<std::array<std::pair<int, double>, kPerColumn>> sketch(numVars);
  std::mt19937_64 rng(0x5eed);
  std::uniform_int_distribution<int> pos(0, k - 1);
  std::normal_distribution<double> gauss;
  for (auto& col : sketch)
    for (auto& e : col) e = {pos(rng), gauss(rng)};
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(k, m);
  for (int i = 0; i < m; ++i) {
    double amax = 0.0;
    for (const auto& [j, a] : rows[i]) amax = std::max(amax, std::fabs(a));
    if (amax == 0.0) continue;
    for (const auto& [j, a] : rows[i])
      for (const auto& [c, w] : sketch[j]) P(c, i) += a / amax * w;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(P);
  qr.setThreshold(1e-9);
  const int rank = static_cast<int>(qr.rank());
  for (int t = rank; t < m; ++t) dependent[qr.colsPermutation().indices()[t]] = 1;
  return dependent;
}

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolveOptions& opt) : lp_(lp), opt_(opt) {
    build();
  }

  LpSolution run();

 private:
  void build();
  void refactor();
  bool singular_ = false;
  // Returns Optimal, Unbounded, IterationLimit or NumericalFailure.
  Status iterate(const std::vector<double>& cost, bool phase1);
  void pivot(int r, int q, const Eigen::VectorXd& alpha, double theta);
  [[nodiscard]] bool breakTie(int i, int r, const Eigen::VectorXd& alpha, bool bland) const;
  // Dual simplex from the initial basis; requires nonnegative reduced costs
  // there. Returns Optimal, Infeasible, IterationLimit or NumericalFailure.
  Status dualIterate(const std::vector<double>& cost);

  const LinearProgram& lp_;
  SolveOptions opt_;
  int m_ = 0, n_ = 0, ncols_ = 0;
  std::vector<int> colStart_, rowIdx_;
  std::vector<double> val_;
  std::vector<ColKind> kind_;
  std::vector<double> sign_;    // row scale, negative where the row was flipped
  std::vector<int> boundVar_;   // structural variable of an upper-bound row, or -1
  std::vector<int> origin_;     // row of the input LP, or -1 for bound rows
  std::vector<int> dropped_;    // dependent input rows left out of the solve
  Eigen::VectorXd b_;
  std::vector<int> basis_;
  std::vector<int> where_;      // basis position of each column, or -1
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  long iterations_ = 0;
  long refactors_ = 0;
  int sinceRefactor_ = 0;
  std::string failure_;
};

void Simplex::build() {
  n_ = lp_.numVars;
  struct NormRow {
    std::map<int, double> coef;
    Relation rel;
    double rhs;
    int bound;
  };
  std::vector<NormRow> all;
  for (const auto& r : lp_.rows) {
    NormRow nr{{}, r.relation, r.rhs, -1};
    for (const auto& [j, a] : r.coef) nr.coef[j] += a;
    for (auto it = nr.coef.begin(); it != nr.coef.end();)
      it = it->second == 0.0 ? nr.coef.erase(it) : std::next(it);
    all.push_back(std::move(nr));
  }

  // dependent equality rows would leave artificials that can never leave a
  // nonsingular basis; they are dropped and checked for consistency at the end
  std::vector<int> eqRows;
  std::vector<std::vector<std::pair<int, double>>> eqCoef;
  for (int i = 0; i < static_cast<int>(all.size()); ++i)
    if (all[i].rel == Relation::Equal) {
      eqRows.push_back(i);
      eqCoef.emplace_back(all[i].coef.begin(), all[i].coef.end());
    }
  std::vector<char> drop(all.size(), 0);
  const auto dep = dependentRows(eqCoef, n_);
  for (std::size_t t = 0; t < eqRows.size(); ++t)
    if (dep[t]) drop[eqRows[t]] = 1;

  std::vector<NormRow> rows;
  for (int i = 0; i < static_cast<int>(all.size()); ++i) {
    if (drop[i]) {
      dropped_.push_back(i);
      continue;
    }
    origin_.push_back(i);
    rows.push_back(std::move(all[i]));
  }
  for (int j = 0; j < static_cast<int>(lp_.upper.size()); ++j)
    if (std::isfinite(lp_.upper[j])) {
      origin_.push_back(-1);
      rows.push_back({{{j, 1.0}}, Relation::LessEqual, lp_.upper[j], j});
    }

  m_ = static_cast<int>(rows.size());
  sign_.resize(m_);
  boundVar_.resize(m_);
  b_.resize(m_);
  std::vector<std::vector<std::pair<int, double>>> cols(n_);
  for (int i = 0; i < m_; ++i) {
    auto& r = rows[i];
    double amax = 0.0;
    for (const auto& [j, a] : r.coef) amax = std::max(amax, std::fabs(a));
    // power-of-two scale: exact, so scaled data carries no rounding
    const int e = amax > 0.0 ? std::ilogb(amax) : 0;
    const double s = std::ldexp(r.rhs < 0.0 ? -1.0 : 1.0, -e);
    sign_[i] = s;
    boundVar_[i] = r.bound;
    b_[i] = s * r.rhs;
    if (s < 0 && r.rel != Relation::Equal)
      r.rel = r.rel == Relation::LessEqual ? Relation::GreaterEqual : Relation::LessEqual;
    for (const auto& [j, a] : r.coef) cols[j].push_back({i, s * a});
  }

  colStart_.push_back(0);
  auto pushCol = [&](const std::vector<std::pair<int, double>>& c, ColKind k) {
    for (const auto& [i, a] : c) {
      rowIdx_.push_back(i);
      val_.push_back(a);
    }
    colStart_.push_back(static_cast<int>(rowIdx_.size()));
    kind_.push_back(k);
    return static_cast<int>(kind_.size()) - 1;
  };
  for (int j = 0; j < n_; ++j) pushCol(cols[j], ColKind::Structural);
  basis_.assign(m_, -1);
  for (int i = 0; i < m_; ++i) {
    switch (rows[i].rel) {
      case Relation::LessEqual:
        basis_[i] = pushCol({{i, 1.0}}, ColKind::Slack);
        break;
      case Relation::GreaterEqual:
        pushCol({{i, -1.0}}, ColKind::Slack);
        basis_[i] = pushCol({{i, 1.0}}, ColKind::Artificial);
        break;
      case Relation::Equal:
        basis_[i] = pushCol({{i, 1.0}}, ColKind::Artificial);
        break;
    }
  }
  ncols_ = static_cast<int>(kind_.size());
  where_.assign(ncols_, -1);
  for (int i = 0; i < m_; ++i) where_[basis_[i]] = i;
  binv_ = Eigen::MatrixXd::Identity(m_, m_);
  xb_ = b_;
}

void Simplex::refactor() {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
  for (int i = 0; i < m_; ++i) {
    const int c = basis_[i];
    for (int k = colStart_[c]; k < colStart_[c + 1]; ++k) B(rowIdx_[k], i) = val_[k];
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  binv_ = lu.inverse();
  singular_ = !binv_.allFinite();
  xb_ = lu.solve(b_);
  // one refinement step with an extended-precision residual
  Eigen::VectorXd res(m_);
  for (int r = 0; r < m_; ++r) {
    long double acc = b_[r];
    for (int i = 0; i < m_; ++i)
      acc -= static_cast<long double>(B(r, i)) * static_cast<long double>(xb_[i]);
    res[r] = static_cast<double>(acc);
  }
  xb_ += lu.solve(res);
  for (int i = 0; i < m_; ++i)
    if (xb_[i] < 0.0 && xb_[i] > -opt_.feasibilityTol * (1.0 + b_.cwiseAbs().maxCoeff()))
      xb_[i] = 0.0;
  sinceRefactor_ = 0;
  ++refactors_;
}

void Simplex::pivot(int r, int q, const Eigen::VectorXd& alpha, double theta) {
  xb_ -= theta * alpha;
  xb_[r] = theta;
  for (int i = 0; i < m_; ++i)
    if (xb_[i] < 0.0 && xb_[i] > -1e-13) xb_[i] = 0.0;
  const Eigen::RowVectorXd pivotRow = binv_.row(r) / alpha[r];
  binv_.noalias() -= alpha * pivotRow;
  binv_.row(r) = pivotRow;
  where_[basis_[r]] = -1;
  basis_[r] = q;
  where_[q] = r;
  ++iterations_;
  if (++sinceRefactor_ >= opt_.refactorEvery) refactor();
}

// Under Bland the lower basic index wins. Otherwise rows of B^-1 scaled by
// 1 / alpha are compared lexicographically, which is the ratio test of the
// symbolically perturbed rhs b + (eps, eps^2, ...) and rules out cycling.
bool Simplex::breakTie(int i, int r, const Eigen::VectorXd& alpha, bool bland) const {
  if (bland) return basis_[i] < basis_[r];
  const double ai = 1.0 / alpha[i], ar = 1.0 / alpha[r];
  for (int k = 0; k < m_; ++k) {
    const double vi = binv_(i, k) * ai, vr = binv_(r, k) * ar;
    const double tol = 1e-11 * (std::fabs(vi) + std::fabs(vr));
    if (vi < vr - tol) return true;
    if (vi > vr + tol) return false;
  }
  return alpha[i] > alpha[r];
}

Status Simplex::iterate(const std::vector<double>& cost, bool phase1) {
  Eigen::VectorXd cb(m_);
  Eigen::VectorXd alpha(m_);
  const double bscale = 1.0 + (m_ ? b_.cwiseAbs().maxCoeff() : 0.0);
  for (;;) {
    if (iterations_ >= opt_.maxIterations) return Status::IterationLimit;
    if (singular_) {
      failure_ = "primal simplex basis became singular after " + std::to_string(iterations_) + " pivots";
      return Status::NumericalFailure;
    }
    for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
    const Eigen::VectorXd y = binv_.transpose() * cb;
    const bool bland = opt_.pricing == Pricing::Bland;
    int q = -1;
    double best = -opt_.optimalityTol;
    for (int j = 0; j < ncols_; ++j) {
      if (where_[j] >= 0) continue;
      if (!phase1 && kind_[j] == ColKind::Artificial) continue;
      double d = cost[j];
      for (int k = colStart_[j]; k < colStart_[j + 1]; ++k) d -= y[rowIdx_[k]] * val_[k];
      if (d < best) {
        q = j;
        if (bland) break;
        best = d;
      }
    }
    if (q < 0) {
      // confirm optimality on a fresh factorization
      if (sinceRefactor_ > 0) {
        refactor();
        continue;
      }
      return Status::Optimal;
    }

    alpha.setZero();
    for (int k = colStart_[q]; k < colStart_[q + 1]; ++k)
      alpha.noalias() += val_[k] * binv_.col(rowIdx_[k]);
    const double amax = alpha.cwiseAbs().maxCoeff();
    const double pivotFloor = std::max(opt_.pivotTol, 1e-7 * amax);

    // basic values below the feasibility tolerance count as degenerate
    const double zeroTol = opt_.feasibilityTol * bscale;
    // In phase 2 basic artificials are fixed at zero: any nonzero entry
    // blocks the step at zero and they leave first.
    int r = -1;
    double ratio = 0.0;
    bool rFixed = false;
    for (int i = 0; i < m_; ++i) {
      const bool fixed = !phase1 && kind_[basis_[i]] == ColKind::Artificial;
      if (fixed ? std::fabs(alpha[i]) <= pivotFloor : alpha[i] <= pivotFloor) continue;
      const double t = fixed || xb_[i] <= zeroTol ? 0.0 : xb_[i] / alpha[i];
      const double eps = 1e-12 * (1.0 + ratio);
      bool take = r < 0 || t < ratio - eps;
      if (!take && t <= ratio + eps) {
        if (fixed != rFixed)
          take = fixed;
        else if (fixed)
          take = std::fabs(alpha[i]) > std::fabs(alpha[r]);
        else
          take = breakTie(i, r, alpha, bland);
      }
      if (take) {
        ratio = r < 0 ? t : std::min(ratio, t);
        r = i;
        rFixed = fixed;
      }
    }
    if (r < 0) {
      if (sinceRefactor_ > 0) {
        refactor();
        continue;
      }
      return Status::Unbounded;
    }
    // a small pivot computed through updates may be a true zero; recheck it
    // on a fresh factorization before trusting it
    if (std::fabs(alpha[r]) < 1e-6 * amax && sinceRefactor_ > 0) {
      refactor();
      continue;
    }
    pivot(r, q, alpha, ratio);
    if (!xb_.allFinite()) {
      failure_ = "non-finite basic solution after pivot " + std::to_string(iterations_) +
                 " (entering column " + std::to_string(q) + ", row " +
                 std::to_string(r) + ")";
      return Status::NumericalFailure;
    }
  }
}

Status Simplex::dualIterate(const std::vector<double>& cost) {
  const double bscale = 1.0 + (m_ ? b_.cwiseAbs().maxCoeff() : 0.0);
  const double feasTol = opt_.feasibilityTol * bscale;
  const double dualTol = opt_.optimalityTol;
  Eigen::VectorXd cb(m_), alpha(m_);
  std::vector<double> rowAlpha(ncols_, 0.0), reduced(ncols_, 0.0);
  auto eligible = [&](int j) { return where_[j] < 0 && kind_[j] != ColKind::Artificial; };
  long fresh = -1;  // reduced costs are recomputed after every refactorization
  for (;;) {
    if (iterations_ >= opt_.maxIterations) return Status::IterationLimit;
    if (singular_) {
      failure_ = "dual simplex basis became singular after " + std::to_string(iterations_) + " pivots";
      return Status::NumericalFailure;
    }
    if (fresh != refactors_) {
      for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
      const Eigen::VectorXd y = binv_.transpose() * cb;
      for (int j = 0; j < ncols_; ++j) {
        double d = eligible(j) ? cost[j] : 0.0;
        if (eligible(j))
          for (int k = colStart_[j]; k < colStart_[j + 1]; ++k) d -= y[rowIdx_[k]] * val_[k];
        reduced[j] = d;
      }
      fresh = refactors_;
    }

    // leaving row by exact dual steepest edge: violation^2 / |row of B^-1|^2;
    // artificials are fixed at zero
    const Eigen::VectorXd weight = binv_.cwiseAbs2().rowwise().sum();
    int r = -1;
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double v =
          kind_[basis_[i]] == ColKind::Artificial ? std::fabs(xb_[i]) : -xb_[i];
      if (v <= feasTol) continue;
      const double score = v * v / weight[i];
      if (score > worst) {
        worst = score;
        r = i;
      }
    }
    if (r < 0) return Status::Optimal;
    const double dir = xb_[r] > 0.0 ? 1.0 : -1.0;  // +1: leave at upper bound 0

    const Eigen::RowVectorXd rho = binv_.row(r);
    double amax = 0.0;
    for (int j = 0; j < ncols_; ++j) {
      if (!eligible(j)) {
        rowAlpha[j] = 0.0;
        continue;
      }
      double a = 0.0;
      for (int k = colStart_[j]; k < colStart_[j + 1]; ++k) a += rho[rowIdx_[k]] * val_[k];
      rowAlpha[j] = dir * a;
      amax = std::max(amax, std::fabs(a));
    }
    const double pivotFloor = std::max(opt_.pivotTol, 1e-7 * amax);

    // Harris two-pass ratio test: bound the step with relaxed reduced costs,
    // then take the largest pivot among the candidates within the bound
    double bound = std::numeric_limits<double>::infinity();
    for (int j = 0; j < ncols_; ++j)
      if (rowAlpha[j] > pivotFloor)
        bound = std::min(bound, (std::max(0.0, reduced[j]) + dualTol) / rowAlpha[j]);
    if (!std::isfinite(bound)) return Status::Infeasible;
    int q = -1;
    for (int j = 0; j < ncols_; ++j) {
      if (rowAlpha[j] <= pivotFloor || std::max(0.0, reduced[j]) / rowAlpha[j] > bound) continue;
      if (q < 0 || rowAlpha[j] > rowAlpha[q]) q = j;
    }

    alpha.setZero();
    for (int k = colStart_[q]; k < colStart_[q + 1]; ++k)
      alpha.noalias() += val_[k] * binv_.col(rowIdx_[k]);
    // the pivot seen along the row and down the column must agree
    const double drift = std::fabs(dir * alpha[r] - rowAlpha[q]);
    const bool small = std::fabs(alpha[r]) < 1e-5 * amax && sinceRefactor_ > 0;
    if (std::fabs(alpha[r]) <= opt_.pivotTol || small ||
        drift > 1e-8 * (1.0 + std::fabs(alpha[r]))) {
      if (sinceRefactor_ > 0) {
        refactor();
        continue;
      }
      failure_ = "dual simplex pivot " + formatDouble(alpha[r]) + " is unstable";
      return Status::NumericalFailure;
    }

    // dual step along the pivot row
    const double t = std::max(0.0, reduced[q]) / rowAlpha[q];
    for (int j = 0; j < ncols_; ++j)
      if (rowAlpha[j] != 0.0) reduced[j] -= t * rowAlpha[j];
    reduced[q] = 0.0;
    reduced[basis_[r]] = -t * dir;

    pivot(r, q, alpha, xb_[r] / alpha[r]);
    if (!xb_.allFinite()) {
      failure_ = "non-finite basic solution after dual pivot " + std::to_string(iterations_);
      return Status::NumericalFailure;
    }
  }
}

LpSolution Simplex::run() {
  LpSolution sol;
  std::vector<double> phase1(ncols_, 0.0), phase2(ncols_, 0.0);
  bool anyArtificial = false;
  for (int j = 0; j < ncols_; ++j) {
    if (kind_[j] == ColKind::Artificial) {
      phase1[j] = 1.0;
      anyArtificial = true;
    }
    if (kind_[j] == ColKind::Structural) phase2[j] = lp_.cost[j];
  }
  const double bscale = 1.0 + (m_ ? b_.cwiseAbs().maxCoeff() : 0.0);

  bool useDual = opt_.algorithm == Algorithm::Auto && opt_.pricing != Pricing::Bland;
  for (int j = 0; j < n_ && useDual; ++j)
    if (lp_.cost[j] < 0.0) useDual = false;

  if (useDual) {
    // deterministic cost perturbation against dual degeneracy; the primal
    // pass below restores optimality for the true costs
    std::vector<double> perturbed(ncols_, 0.0);
    for (int j = 0; j < ncols_; ++j) {
      if (kind_[j] == ColKind::Artificial) continue;
      const double u = 0.5 + 0.5 * std::fmod(0.6180339887498949 * (j + 1), 1.0);
      perturbed[j] = phase2[j] + 1e-7 * u * (1.0 + std::fabs(phase2[j]));
    }
    const Status s = dualIterate(perturbed);
    sol.phase1Iterations = iterations_;
    if (s != Status::Optimal) {
      sol.status = s;
      sol.message = s == Status::Infeasible       ? "dual simplex found a dual ray"
                    : s == Status::IterationLimit ? "iteration cap reached in the dual simplex"
                                                  : failure_;
      sol.iterations = iterations_;
      return sol;
    }
  } else if (anyArtificial) {
    Status s = iterate(phase1, true);
    sol.phase1Iterations = iterations_;
    if (s == Status::IterationLimit || s == Status::NumericalFailure) {
      sol.status = s;
      sol.message = s == Status::IterationLimit ? "iteration cap reached in phase 1"
                                                : failure_;
      sol.iterations = iterations_;
      return sol;
    }
    refactor();
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i)
      if (kind_[basis_[i]] == ColKind::Artificial) infeas += xb_[i];
    if (infeas > opt_.feasibilityTol * bscale * std::max(1, m_ / 10)) {
      sol.status = Status::Infeasible;
      sol.message = "phase 1 optimum " + formatDouble(infeas) + " > 0";
      sol.iterations = iterations_;
      return sol;
    }
  }

  const Status s = iterate(phase2, false);
  sol.iterations = iterations_;
  if (s != Status::Optimal) {
    sol.status = s;
    sol.message = s == Status::Unbounded        ? "objective unbounded below"
                  : s == Status::IterationLimit ? "iteration cap reached in phase 2"
                                                : failure_;
    return sol;
  }
  refactor();
  sol.status = Status::Optimal;
  sol.x.assign(n_, 0.0);
  for (int i = 0; i < m_; ++i)
    if (basis_[i] < n_) sol.x[basis_[i]] = std::max(0.0, xb_[i]);
  Eigen::VectorXd cb(m_);
  for (int i = 0; i < m_; ++i) cb[i] = phase2[basis_[i]];
  const Eigen::VectorXd y = binv_.transpose() * cb;
  const int nOrig = static_cast<int>(lp_.rows.size());
  sol.y.assign(nOrig, 0.0);
  sol.boundDual.assign(lp_.upper.empty() ? 0 : n_, 0.0);
  for (int i = 0; i < m_; ++i) {
    const double yi = sign_[i] * y[i];
    if (boundVar_[i] >= 0)
      sol.boundDual[boundVar_[i]] = yi;
    else
      sol.y[origin_[i]] = yi;
  }
  sol.objective = 0.0;
  for (int j = 0; j < n_; ++j) sol.objective += lp_.cost[j] * sol.x[j];
  sol.certificate = verify(lp_, sol);
  for (int i : dropped_) {
    double ax = 0.0;
    for (const auto& [j, a] : lp_.rows[i].coef) ax += a * sol.x[j];
    const double res = std::fabs(ax - lp_.rows[i].rhs);
    if (res > sol.certificate.tolerance()) {
      sol.status = Status::Infeasible;
      sol.message = "dependent equality row " + std::to_string(i) +
                    " is inconsistent with the others (residual " + formatDouble(res) + ")";
      return sol;
    }
  }
  double d = 0.0;
  for (int i = 0; i < nOrig; ++i) d += lp_.rows[i].rhs * sol.y[i];
  for (std::size_t j = 0; j < sol.boundDual.size(); ++j)
    if (std::isfinite(lp_.upper[j])) d += lp_.upper[j] * sol.boundDual[j];
  sol.dualObjective = d;
  return sol;
}

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolveOptions& opt) {
  lp.validate();
  Simplex s(lp, opt);
  return s.run();
}

Certificate verify(const LinearProgram& lp, const LpSolution& sol) {
  Certificate c;
  double bmax = 0.0, cmax = 0.0;
  for (const auto& r : lp.rows) bmax = std::max(bmax, std::fabs(r.rhs));
  for (double v : lp.cost) cmax = std::max(cmax, std::fabs(v));
  c.scale = 1.0 + bmax + cmax;
  const int n = lp.numVars;
  if (sol.x.size() != static_cast<std::size_t>(n) || sol.y.size() != lp.rows.size()) {
    c.primal = c.dual = c.complementarity = c.gap =
        std::numeric_limits<double>::infinity();
    return c;
  }
  auto ub = [&](int j) {
    return lp.upper.empty() ? std::numeric_limits<double>::infinity() : lp.upper[j];
  };
  auto mu = [&](int j) {
    return sol.boundDual.empty() ? 0.0 : sol.boundDual[j];
  };

  std::vector<double> reduced(lp.cost.begin(), lp.cost.end());
  double primalObj = 0.0, dualObj = 0.0;
  for (int j = 0; j < n; ++j) {
    primalObj += lp.cost[j] * sol.x[j];
    c.primal = std::max(c.primal, -sol.x[j]);
    if (std::isfinite(ub(j))) {
      c.primal = std::max(c.primal, sol.x[j] - ub(j));
      c.dual = std::max(c.dual, mu(j));  // must be <= 0
      c.complementarity =
          std::max(c.complementarity, std::fabs(mu(j) * (sol.x[j] - ub(j))));
      dualObj += ub(j) * mu(j);
      reduced[j] -= mu(j);
    } else if (mu(j) != 0.0) {
      c.dual = std::max(c.dual, std::fabs(mu(j)));
    }
  }
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& r = lp.rows[i];
    double ax = 0.0;
    for (const auto& [j, a] : r.coef) {
      ax += a * sol.x[j];
      reduced[j] -= sol.y[i] * a;
    }
    const double slack = ax - r.rhs;
    const double y = sol.y[i];
    switch (r.relation) {
      case Relation::Equal:
        c.primal = std::max(c.primal, std::fabs(slack));
        break;
      case Relation::LessEqual:
        c.primal = std::max(c.primal, slack);
        c.dual = std::max(c.dual, y);
        c.complementarity = std::max(c.complementarity, std::fabs(y * slack));
        break;
      case Relation::GreaterEqual:
        c.primal = std::max(c.primal, -slack);
        c.dual = std::max(c.dual, -y);
        c.complementarity = std::max(c.complementarity, std::fabs(y * slack));
        break;
    }
    dualObj += r.rhs * y;
  }
  for (int j = 0; j < n; ++j) {
    c.dual = std::max(c.dual, -reduced[j]);
    c.complementarity = std::max(c.complementarity, std::fabs(reduced[j] * sol.x[j]));
  }
  c.gap = std::fabs(primalObj - dualObj);
  return c;
}

std::string dump(const LinearProgram& lp) {
  std::ostringstream out;
  out << "min " << lp.numVars;
  for (int j = 0; j < lp.numVars; ++j)
    if (lp.cost[j] != 0.0) out << ' ' << j << ':' << formatDouble(lp.cost[j]);
  out << '\n';
  for (const auto& r : lp.rows) {
    out << (r.relation == Relation::LessEqual      ? "<="
            : r.relation == Relation::GreaterEqual ? ">="
                                                   : "=")
        << ' ' << formatDouble(r.rhs);
    for (const auto& [j, a] : r.coef) out << ' ' << j << ':' << formatDouble(a);
    out << '\n';
  }
  for (std::size_t j = 0; j < lp.upper.size(); ++j)
    if (std::isfinite(lp.upper[j])) out << "ub " << j << ' ' << formatDouble(lp.upper[j]) << '\n';
  return out.str();
}

LinearProgram parse(std::string_view text) {
  LinearProgram lp;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineNo = 0;
  bool haveObjective = false;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("LP line " + std::to_string(lineNo) + ": " + msg);
  };
  auto pairs = [&](std::istringstream& ls) {
    std::vector<std::pair<int, double>> out;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) fail("expected j:value, got '" + tok + "'");
      int j = 0;
      try {
        j = std::stoi(tok.substr(0, colon));
      } catch (const std::exception&) {
        fail("bad column index in '" + tok + "'");
      }
      if (j < 0 || j >= lp.numVars) fail("column index out of range in '" + tok + "'");
      try {
        out.push_back({j, parseDouble(tok.substr(colon + 1))});
      } catch (const std::exception&) {
        fail("bad value in '" + tok + "'");
      }
    }
    return out;
  };
  while (std::getline(in, line)) {
    ++lineNo;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "min") {
      if (haveObjective) fail("duplicate objective line");
      if (!(ls >> lp.numVars) || lp.numVars < 0) fail("missing variable count");
      lp.cost.assign(lp.numVars, 0.0);
      for (const auto& [j, v] : pairs(ls)) lp.cost[j] += v;
      haveObjective = true;
      continue;
    }
    if (!haveObjective) fail("objective line must come first");
    if (head == "ub") {
      int j;
      std::string v;
      if (!(ls >> j >> v) || j < 0 || j >= lp.numVars) fail("malformed ub line");
      if (lp.upper.empty())
        lp.upper.assign(lp.numVars, std::numeric_limits<double>::infinity());
      lp.upper[j] = parseDouble(v);
      continue;
    }
    Row r;
    if (head == "<=")
      r.relation = Relation::LessEqual;
    else if (head == ">=")
      r.relation = Relation::GreaterEqual;
    else if (head == "=")
      r.relation = Relation::Equal;
    else
      fail("unknown line type '" + head + "'");
    std::string rhs;
    if (!(ls >> rhs)) fail("missing rhs");
    r.rhs = parseDouble(rhs);
    r.coef = pairs(ls);
    lp.rows.push_back(std::move(r));
  }
  if (!haveObjective) throw std::invalid_argument("LP text has no objective line");
  return lp;
}

}  // namespace occrelax::lp
