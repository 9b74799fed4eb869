// Acceptance runner: one PASS/FAIL line per criterion; exit status 0 iff all pass.
// Usage: acceptance [path to the occrelax CLI]

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "json.hpp"
#include "lp_oracle.hpp"
#include "occrelax/gapx.hpp"
#include "occrelax/relax.hpp"
#include "occrelax/sheets.hpp"

using namespace occrelax;

namespace {

// Pinned tolerances and limits.
constexpr double kZeroTol = 1e-8;           // criteria 1, 7, 9: vanishing relaxed values
constexpr double kClassicalTol = 1e-9;      // criteria 1, 3: classical values
constexpr double kGapValueTol = 1e-6;       // criteria 2, 3: relaxed gap values
constexpr double kSuperpositionTol = 1e-9;  // criterion 4
constexpr double kProfileTol = 1e-6;        // criterion 5
constexpr double kSlackFraction = 0.05;     // criterion 6: eps = 5% of M_r
constexpr double kLpTol = 1e-9;             // criterion 8: agreement with the oracle
constexpr double kCaseABound = 7.01e-4;     // criterion 7: quoted to three digits
constexpr double kCaseABoundTol = 1e-6;

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void run(int id, const char* title, double limitSeconds, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double t = seconds(t0);
  if (limitSeconds > 0.0) o.require(t < limitSeconds, "runtime");
  if (!o.pass) ++failures;
  std::printf("criterion %d %s: %s;%s (%.2f s)\n", id, o.pass ? "PASS" : "FAIL", title,
              o.detail.str().c_str(), t);
  std::fflush(stdout);
}

relax::RelaxationResult relaxHinted(const core::VariationalProblem& p) {
  return relax::solveRelaxation(p, {relax::hintedGrid(p), relax::hintedBasis(p), {}, {}});
}

double classicalConstant(const core::VariationalProblem& p, double c) {
  const auto g = measure::makeGrid(p, relax::hintedGrid(p));
  const auto f = measure::sampleFunction(
      g, [c](std::span<const double>) { return std::vector<double>{c}; });
  return relax::classicalValue(p, g, f);
}

/// Runs `cli relax --builtin double-well --nz 3` and reads M_r.
double cliDoubleWell(const std::string& cli) {
  const auto dir = std::filesystem::temp_directory_path() / "occrelax-acceptance-dw";
  std::filesystem::remove_all(dir);
  const std::string cmd =
      "\"" + cli + "\" relax --builtin double-well --nz 3 --out \"" + dir.string() + "\" > /dev/null";
  if (std::system(cmd.c_str()) != 0) throw std::runtime_error("CLI relax failed");
  std::ifstream in(dir / "result.json");
  const auto j = nlohmann::json::parse(in);
  std::filesystem::remove_all(dir);
  return j.at("M_r").get<double>();
}

std::vector<core::ScalarField> affineFields(const core::VariationalProblem& p) {
  const auto ia = p.interiorArity();
  return {core::ScalarField::fromExpression("1", ia), core::ScalarField::fromExpression("y1", ia),
          core::ScalarField::fromExpression("z1", ia),
          core::ScalarField::fromExpression("y1*z1", ia)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";

  run(1, "double-well gap", 1.0, [&](Outcome& o) {
    const auto p = core::builtin("double-well");
    const auto r = relaxHinted(p);
    const double c = classicalConstant(p, 0.0);
    o.detail << " M_r " << r.value << ", classical(y=0) " << c;
    o.require(p.yBox[0].lo == 0.0 && p.yBox[0].hi == 0.0, "y grid is {0}");
    o.require(r.status == lp::Status::Optimal && std::fabs(r.value) <= kZeroTol, "M_r = 0");
    o.require(std::fabs(c - 1.0) <= kClassicalTol, "classical value 1");
    if (!cli.empty()) {
      const double v = cliDoubleWell(cli);
      o.detail << ", CLI M_r " << v;
      o.require(std::fabs(v) <= kZeroTol, "CLI M_r = 0");
    }
  });

  run(2, "inequality-constraint gap", 5.0, [&](Outcome& o) {
    const auto p = core::builtin("gap-ineq");
    const auto r = relaxHinted(p);
    const auto s = lp::solve(lp::oracle::twoAtom());
    const double c = classicalConstant(p, 1.0);
    o.detail << " M_r " << r.value << ", 2-atom LP " << s.objective << ", classical(y=1) " << c;
    o.require(std::fabs(r.value - 0.1) <= kGapValueTol, "M_r = 0.1");
    o.require(s.status == lp::Status::Optimal && s.objective == 0.1, "oracle LP exactly 0.1");
    o.require(std::fabs(c - 1.0) <= kClassicalTol, "classical value 1");
  });

  run(3, "equality-constraint gap", 0.0, [&](Outcome& o) {
    const auto p = core::builtin("gap-eq");
    const auto r = relaxHinted(p);
    const auto s = lp::solve(lp::oracle::threeAtom());
    const double c = classicalConstant(p, 2.0);
    o.detail << " M_r " << r.value << ", 3-atom LP " << s.objective << ", classical(y=2) " << c;
    o.require(std::fabs(r.value - 0.5) <= kGapValueTol, "M_r = 0.5");
    o.require(s.status == lp::Status::Optimal && s.objective == 0.5, "oracle LP exactly 0.5");
    o.require(std::fabs(c - 2.0) <= kClassicalTol, "classical value 2");
  });

  run(4, "sheet decomposition fidelity", 1.0, [&](Outcome& o) {
    // 2/3 on gamma = 1 - x, 1/3 on eta = x; they cross once at x = 1/2
    const auto p = fixture::unitProblem({0.0, 1.0}, {-1.0, 1.0});
    const auto g = fixture::intervalGrid(p, 16, 33, 3);
    const fixture::Curve gamma = [](double x) { return 1.0 - x; };
    const fixture::Curve eta = [](double x) { return x; };
    const auto mu = fixture::curveMixture(g, {gamma, eta}, {2.0 / 3.0, 1.0 / 3.0});
    const auto rho = sheets::density(mu);
    bool values = true;
    for (double v : rho.values)
      values = values && (v == 0.0 || v == -1.0 / 3.0 || v == -2.0 / 3.0 || v == -1.0);
    const auto fam = sheets::extractSheets(rho, mu, 3);
    bool match = fam.size() == 3;
    for (std::size_t i = 0; match && i < g->xCount(); ++i) {
      const double x = g->xNodes[i][0];
      match = fam.values[0][i] == std::min(gamma(x), eta(x)) &&
              fam.values[1][i] == gamma(x) && fam.values[2][i] == std::max(gamma(x), eta(x));
    }
    const auto rep = sheets::checkSuperposition(mu, fam, affineFields(p));
    o.detail << " plateaus " << sheets::plateaus(rho).size() << ", superposition "
             << rep.maxDeviation;
    o.require(values, "density values in {0, -1/3, -2/3, -1}");
    o.require(match, "sheets match the curves node-wise");
    o.require(rep.maxDeviation <= kSuperpositionTol, "superposition deviation");
  });

  run(5, "monotonicity and range", 0.0, [&](Outcome& o) {
    const auto p = fixture::unitProblem({0.0, 1.0}, {-1.0, 1.0});
    std::mt19937_64 rng(5);
    int bad = 0;
    double worstProfile = 0.0;
    for (int t = 0; t < 100; ++t) {
      const int nx = 4 + static_cast<int>(rng() % 13), ny = 5 + static_cast<int>(rng() % 20);
      const auto g = fixture::intervalGrid(p, nx, ny, 9);
      const auto mu = fixture::randomAtomicMeasure(g, rng);
      const auto rho = sheets::density(mu);
      bool ok = true;
      for (std::size_t i = 0; i < rho.xCount; ++i)
        for (std::size_t j = 0; j < rho.yCount; ++j) {
          const double v = rho.at(i, j);
          ok = ok && v >= -1.0 && v <= 0.0 && (j == 0 || v <= rho.at(i, j - 1));
        }
      const auto fam = sheets::extractSheets(rho, mu, sheets::defaultSheetCount(rho));
      for (std::size_t k = 1; k < fam.size(); ++k)
        for (std::size_t i = 0; i < g->xCount(); ++i)
          ok = ok && fam.values[k][i] >= fam.values[k - 1][i];
      for (double v : measure::projectionProfile(mu))
        worstProfile = std::max(worstProfile, std::fabs(v - 1.0));
      bad += ok ? 0 : 1;
    }
    o.detail << " 100 measures, violations " << bad << ", profile deviation " << worstProfile;
    o.require(bad == 0, "range and monotonicity");
    o.require(worstProfile <= kProfileTol, "constant projection profile");
  });

  run(6, "no-gap pipeline in codimension one", 60.0, [&](Outcome& o) {
    const auto p = core::builtin("codim1-demo");
    double previous = INFINITY;
    for (int nz : {5, 9}) {
      relax::RelaxOptions opt{relax::hintedGrid(p), relax::hintedBasis(p), {}, {}};
      opt.grid.nx = {12, 12};
      opt.grid.ny = {9};
      opt.grid.nz = {nz};
      const auto r = relax::solveRelaxation(p, opt);
      if (r.status != lp::Status::Optimal) throw std::runtime_error("relaxation not optimal");
      const auto rec = sheets::recoverClassical(p, r.measure, r.value);
      const double eps = kSlackFraction * r.value;
      const double err = std::fabs(rec.bestValue - r.value);
      o.detail << " nz " << nz << ": M_r " << r.value << ", best " << rec.bestValue << ", |diff| "
               << err << ";";
      o.require(rec.bestValue <= r.value + eps, "best <= M_r + eps");
      o.require(err <= eps, "|best - M_r| <= eps");
      o.require(err < previous, "eps shrinks under refinement");
      previous = err;
    }
  });

  run(7, "counterexample gap", 300.0, [&](Outcome& o) {
    const auto rv = gapx::relaxedValue(32, 128);
    const gapx::PolarGrid g(16, 64);
    gapx::PolarField zero;
    zero.values.assign(g.size(), gapx::Vec2{0.0, 0.0});
    const double bound = gapx::classicalLowerReport(g, zero).caseABound;
    const auto search = gapx::classicalSearch({});
    const auto inv = gapx::checkInvariants(100000, 42);
    bool invOk = true;
    for (const auto& c : inv) invOk = invOk && c.passed;
    o.detail << " relaxed " << rv.value << ", case-A bound " << bound << ", search min "
             << search.minObjective << ", invariants " << inv.size();
    o.require(rv.massOk && rv.value <= kZeroTol, "relaxed value vanishes");
    o.require(std::fabs(bound - std::pow(1.0 / 41.0, 2) * 3.0 * std::numbers::pi / 8.0) <= 1e-15 &&
                  std::fabs(bound - kCaseABound) <= kCaseABoundTol,
              "case-A bound");
    o.require(search.minObjective >= gapx::kSearchThreshold, "search minimum above threshold");
    o.require(invOk, "field invariants");
  });

  run(8, "LP solver correctness", 0.0, [&](Outcome& o) {
    std::mt19937_64 rng(2024);
    int solved = 0, mismatches = 0, badCert = 0, nondeterministic = 0;
    for (int t = 0; t < 200; ++t) {
      const auto p = lp::oracle::randomLp(rng);
      const auto oracle = lp::oracle::vertexOracle(p);
      const auto a = lp::solve(p), b = lp::solve(p);
      if (a.status != b.status || a.x != b.x || a.y != b.y ||
          std::bit_cast<std::uint64_t>(a.objective) != std::bit_cast<std::uint64_t>(b.objective))
        ++nondeterministic;
      if (!oracle) {
        mismatches += a.status == lp::Status::Infeasible ? 0 : 1;
        continue;
      }
      if (a.status != lp::Status::Optimal || std::fabs(a.objective - *oracle) > kLpTol) {
        ++mismatches;
        continue;
      }
      ++solved;
      if (!lp::verify(p, a).ok()) ++badCert;
    }
    o.detail << " solved " << solved << ", mismatches " << mismatches << ", certificate failures "
             << badCert << ", nondeterministic " << nondeterministic;
    o.require(mismatches == 0, "oracle agreement");
    o.require(badCert == 0, "certificates");
    o.require(nondeterministic == 0, "bitwise determinism");
  });

  run(9, "Jensen and convexification", 0.0, [&](Outcome& o) {
    auto p = fixture::unitProblem({0.0, 1.0}, {-1.0, 1.0});
    const auto g = fixture::intervalGrid(p, 6, 4, 7);
    const auto L = core::ScalarField::fromExpression("z1^2", p.interiorArity());
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
      measure::GriddedMeasure mu(g);
      const std::size_t per = g->yCount() * g->zCount();
      for (std::size_t i = 0; i < g->xCount(); ++i) {
        double s = 0.0;
        for (std::size_t q = 0; q < per; ++q) s += mu.weights[i * per + q] = u(rng) < 0.3 ? u(rng) : 0.0;
        if (s == 0.0) mu.weights[i * per] = s = 1.0;
        for (std::size_t q = 0; q < per; ++q) mu.weights[i * per + q] *= g->cellVolume[i] / s;
      }
      const double eps = measure::snappingError(mu, L);
      if (measure::concentrate(mu).integrate(L) > mu.integrate(L) + eps + 1e-15) ++bad;
    }
    const auto cv = relaxHinted(relax::convexifiedDoubleWell());
    o.detail << " Jensen violations " << bad << "/100, convexified M_r " << cv.value;
    o.require(bad == 0, "Jensen inequality");
    o.require(cv.status == lp::Status::Optimal && std::fabs(cv.value) <= kZeroTol,
              "convexified M_r = 0");
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
