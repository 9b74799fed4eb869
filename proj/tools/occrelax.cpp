#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "occrelax/gapx.hpp"
#include "occrelax/io_util.hpp"
#include "occrelax/lp.hpp"
#include "occrelax/measure.hpp"
#include "occrelax/problem_io.hpp"
#include "occrelax/relax.hpp"
#include "occrelax/sheets.hpp"

namespace {

using namespace occrelax;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kIo = 1, kInfeasible = 2, kUnbounded = 3, kCodim = 4, kGap = 5 };

/// Exit code carried out of a subcommand.
struct ExitError : std::runtime_error {
  ExitError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

struct RunConfig {
  std::string subcommand;
  std::string builtin, problemPath, from, lpPath;
  std::vector<int> nx;
  std::optional<int> ny, nz, degree, yDegree;
  int sheets = 0;
  std::uint64_t seed = 42;
  std::string out = "occrelax-out";
  std::optional<double> tolF, tolG;
  // gap verify
  int resolution = gapx::kMinResolution;
  int inits = 50, steps = 500, invariantPoints = 100000;
};

json configJson(const RunConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  if (!c.builtin.empty()) j["builtin"] = c.builtin;
  if (!c.problemPath.empty()) j["problem"] = c.problemPath;
  if (!c.from.empty()) j["from"] = c.from;
  if (!c.lpPath.empty()) j["lp"] = c.lpPath;
  j["seed"] = c.seed;
  j["out"] = c.out;
  if (c.tolF) j["tol_f"] = *c.tolF;
  if (c.tolG) j["tol_g"] = *c.tolG;
  return j;
}

void writeOut(const RunConfig& c, const std::string& name, const std::string& text) {
  writeFileAtomic((fs::path(c.out) / name).string(), text);
}

void writeManifest(const RunConfig& c, json resolved) {
  json m;
  m["tool"] = "occrelax";
  m["version"] = kVersion;
  m["config"] = std::move(resolved);
  writeOut(c, "manifest.json", io::dumpJson(m));
}

void prepareOut(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw ExitError(kIo, "cannot create output directory '" + c.out + "': " + ec.message());
}

void requireSize(const char* what, int v) {
  if (v < 2) throw ExitError(kIo, std::string(what) + " must be at least 2");
}

core::VariationalProblem loadProblem(const RunConfig& c) {
  if (c.builtin.empty() == c.problemPath.empty())
    throw ExitError(kIo, "give exactly one of --builtin or --problem");
  if (!c.builtin.empty()) return core::builtin(c.builtin);
  return io::loadProblem(c.problemPath);
}

struct Resolved {
  measure::GridSpec grid;
  relax::BasisOptions basis;
  relax::Tolerances tol;
};

Resolved resolve(const RunConfig& c, const core::VariationalProblem& p) {
  Resolved r;
  r.grid = relax::hintedGrid(p);
  r.basis = relax::hintedBasis(p);
  if (!c.nx.empty()) {
    for (int v : c.nx) requireSize("--nx", v);
    r.grid.nx = c.nx;
  }
  if (c.ny) requireSize("--ny", *c.ny), r.grid.ny = {*c.ny};
  if (c.nz) requireSize("--nz", *c.nz), r.grid.nz = {*c.nz};
  if (c.degree) {
    if (*c.degree < 0) throw ExitError(kIo, "--degree must be nonnegative");
    r.basis.degree = *c.degree;
  }
  if (c.yDegree) {
    if (*c.yDegree < 0) {
      r.basis.yFamily = relax::YFamily::DualHats;
    } else {
      r.basis.yFamily = relax::YFamily::Polynomial;
      r.basis.yDegree = *c.yDegree;
    }
  }
  r.tol.F = c.tolF;
  r.tol.G = c.tolG;
  return r;
}

json resolvedJson(const RunConfig& c, const core::VariationalProblem& p, const Resolved& r) {
  json j = configJson(c);
  j["problem_name"] = p.name;
  j["problem_spec"] = io::problemToJson(p);
  j["nx"] = r.grid.nx;
  j["ny"] = r.grid.ny;
  j["nz"] = r.grid.nz;
  j["degree"] = r.basis.degree;
  j["y_family"] = r.basis.yFamily == relax::YFamily::Polynomial ? "polynomial" : "dual-hats";
  if (r.basis.yFamily == relax::YFamily::Polynomial) j["y_degree"] = r.basis.yDegree;
  return j;
}

json certificateJson(const lp::Certificate& cert) {
  return {{"primal", cert.primal},
          {"dual", cert.dual},
          {"complementarity", cert.complementarity},
          {"gap", cert.gap},
          {"tolerance", cert.tolerance()},
          {"ok", cert.ok()}};
}

int statusExit(lp::Status s, const std::string& message) {
  switch (s) {
    case lp::Status::Optimal:
      return kOk;
    case lp::Status::Infeasible:
      return kInfeasible;
    case lp::Status::Unbounded:
      return kUnbounded;
    default:
      std::cerr << "error: LP solve failed (" << lp::toString(s) << "): " << message << '\n';
      return kIo;
  }
}

struct Relaxed {
  core::VariationalProblem problem;
  Resolved resolved;
  std::shared_ptr<const measure::Grid> grid;
  relax::RelaxationResult result;
};

Relaxed runRelaxation(const RunConfig& c, core::VariationalProblem p) {
  Relaxed r{std::move(p), {}, {}, {}};
  r.resolved = resolve(c, r.problem);
  r.grid = std::make_shared<measure::Grid>(measure::makeGrid(r.problem, r.resolved.grid));
  const relax::TestBasis basis(*r.grid, r.resolved.basis);
  r.result = relax::solveRelaxation(r.problem, r.grid, basis, r.resolved.tol);
  return r;
}

int cmdRelax(const RunConfig& c) {
  auto r = runRelaxation(c, loadProblem(c));
  prepareOut(c);
  const auto& res = r.result;
  json j;
  j["problem"] = r.problem.name;
  j["status"] = lp::toString(res.status);
  if (!res.message.empty()) j["message"] = res.message;
  if (res.status == lp::Status::Optimal) {
    j["M_r"] = res.value;
    j["recomputed_value"] = res.recomputedValue;
  }
  j["lp"] = {{"rows", res.rows},
             {"columns", res.columns},
             {"iterations", res.iterations},
             {"active_support", res.activeSupport}};
  j["residuals"] = {{"weak", res.weakResidual}, {"certificate", certificateJson(res.certificate)}};
  writeOut(c, "result.json", io::dumpJson(j));
  if (res.status == lp::Status::Optimal) {
    writeOut(c, "measure_interior.csv", measure::interiorCsv(res.measure));
    writeOut(c, "measure_boundary.csv", measure::boundaryCsv(res.measure));
  }
  writeManifest(c, resolvedJson(c, r.problem, r.resolved));
  if (res.status == lp::Status::Optimal)
    std::cout << "M_r = " << formatDouble(res.value) << '\n';
  else
    std::cout << "status: " << lp::toString(res.status) << '\n';
  return statusExit(res.status, res.message);
}

int cmdDecompose(const RunConfig& c) {
  auto problem = loadProblem(c);
  if (problem.m != 1)
    throw ExitError(kCodim, "decompose needs codimension m = 1; problem '" + problem.name +
                                "' has m = " + std::to_string(problem.m));
  if (c.sheets < 0) throw ExitError(kIo, "--sheets must be nonnegative");

  Resolved resolved;
  measure::GriddedMeasure mu;
  if (!c.from.empty()) {
    resolved = resolve(c, problem);
    auto grid = std::make_shared<measure::Grid>(measure::makeGrid(problem, resolved.grid));
    const fs::path dir(c.from);
    mu = measure::readCsv(grid, readFile((dir / "measure_interior.csv").string()),
                          readFile((dir / "measure_boundary.csv").string()));
  } else {
    auto r = runRelaxation(c, std::move(problem));
    problem = std::move(r.problem);
    resolved = r.resolved;
    if (r.result.status != lp::Status::Optimal) {
      std::cerr << "relaxation did not solve: " << lp::toString(r.result.status) << '\n';
      return statusExit(r.result.status, r.result.message);
    }
    mu = std::move(r.result.measure);
  }
  const auto& g = mu.grid();
  const auto rho = sheets::density(mu);
  const int K = c.sheets > 0 ? c.sheets : sheets::defaultSheetCount(rho);
  const auto family = sheets::extractSheets(rho, mu, K);

  const auto ia = problem.interiorArity(), ba = problem.boundaryArity();
  std::vector<std::string> names = {"1", "y1"};
  for (int l = 1; l <= g.n; ++l) {
    names.push_back("z" + std::to_string(l));
    names.push_back("y1*z" + std::to_string(l));
  }
  std::vector<core::ScalarField> fields;
  for (const auto& s : names) fields.push_back(core::ScalarField::fromExpression(s, ia));
  const std::vector<core::ScalarField> bfields = {core::ScalarField::fromExpression("1", ba),
                                                  core::ScalarField::fromExpression("y1", ba)};
  const auto rep = sheets::checkSuperposition(mu, family, fields, bfields);

  json j;
  j["problem"] = problem.name;
  j["sheets"] = K;
  j["levels"] = family.levels;
  j["plateaus"] = sheets::plateaus(rho);
  j["empty_columns"] = rho.emptyColumns;
  json dev = json::object();
  for (std::size_t f = 0; f < names.size(); ++f) dev[names[f]] = rep.deviation[f];
  j["deviation"] = dev;
  j["max_deviation"] = rep.maxDeviation;
  j["boundary_deviation"] = rep.boundaryDeviation;

  const double relaxedValue = mu.integrate(problem.L) + mu.integrateBoundary(problem.Lb);
  sheets::RecoveryOptions ro;
  ro.K = K;
  ro.tol = resolved.tol;
  json rec;
  rec["relaxed_value"] = relaxedValue;
  try {
    const auto recovery = sheets::recoverClassical(problem, mu, relaxedValue, ro);
    rec["best_level"] = recovery.sheets[recovery.best].level;
    rec["best_value"] = recovery.bestValue;
    rec["average_value"] = recovery.averageValue;
    rec["no_gap_asserted"] = recovery.noGapAsserted;
    if (!recovery.note.empty()) rec["note"] = recovery.note;
    json per = json::array();
    for (const auto& s : recovery.sheets)
      per.push_back({{"level", s.level},
                     {"value", s.value},
                     {"fd_value", s.fdValue},
                     {"feasible", s.feasible}});
    rec["sheets"] = per;
  } catch (const relax::ConstraintViolation& e) {
    rec["error"] = e.what();
    rec["details"] = e.details();
  }
  j["recovery"] = rec;

  prepareOut(c);
  writeOut(c, "rho.csv", sheets::densityCsv(rho, g));
  writeOut(c, "sheets.csv", sheets::sheetsCsv(family, g));
  writeOut(c, "superposition_report.json", io::dumpJson(j));
  auto resolvedCfg = resolvedJson(c, problem, resolved);
  resolvedCfg["sheets"] = K;
  writeManifest(c, resolvedCfg);
  std::cout << K << " sheets, superposition deviation " << formatDouble(rep.maxDeviation)
            << '\n';
  return kOk;
}

int cmdGapVerify(const RunConfig& c) {
  if (c.resolution < gapx::kMinResolution)
    throw ExitError(kIo, "--resolution must be at least " +
                             std::to_string(gapx::kMinResolution));
  if (c.inits < 0 || c.steps < 0) throw ExitError(kIo, "--inits and --steps must be nonnegative");
  const int nr = c.resolution, nt = 4 * c.resolution;
  const auto relaxed = gapx::relaxedValue(nr, nt);

  gapx::SearchOptions so;
  so.inits = c.inits;
  so.steps = c.steps;
  so.seed = c.seed;
  so.nr = nr;
  so.nt = nt;
  const auto search = gapx::classicalSearch(so);
  const gapx::PolarGrid grid(nr, nt);
  const auto lower = gapx::classicalLowerReport(grid, search.minimizer);
  const auto invariants = gapx::checkInvariants(c.invariantPoints, c.seed);

  bool invariantsOk = true;
  json inv = json::array();
  std::vector<std::string> failing;
  for (const auto& chk : invariants) {
    inv.push_back({{"name", chk.name}, {"passed", chk.passed}, {"worst", chk.worst}});
    if (!chk.passed) invariantsOk = false, failing.push_back(chk.name);
  }
  const bool relaxedOk = relaxed.value <= 1e-8 && relaxed.massOk;
  const bool searchOk = search.minObjective >= gapx::kSearchThreshold;

  json j;
  j["relaxed_value"] = relaxed.value;
  j["classical_min_found"] = search.minObjective;
  j["threshold"] = gapx::kSearchThreshold;
  j["caseA_bound"] = lower.caseABound;
  j["alpha0"] = lower.alpha0;
  j["case"] = std::string(1, lower.caseId);
  j["best_run"] = search.runs.empty() ? std::string() : search.runs[search.bestRun].label;
  j["invariant_checks"] = inv;
  j["passed"] = relaxedOk && searchOk && invariantsOk;

  std::ostringstream csv;
  csv << "r,theta,x1,x2,y1,y2\n";
  for (int i = 0; i < nr; ++i)
    for (int t = 0; t < nt; ++t) {
      const auto x = grid.point(i, t);
      const auto& y = search.minimizer.values[grid.index(i, t)];
      csv << formatDouble(grid.radius(i)) << ',' << formatDouble(grid.angle(t)) << ','
          << formatDouble(x[0]) << ',' << formatDouble(x[1]) << ',' << formatDouble(y[0])
          << ',' << formatDouble(y[1]) << '\n';
    }

  prepareOut(c);
  writeOut(c, "gap_report.json", io::dumpJson(j));
  writeOut(c, "minimizer.csv", csv.str());
  json cfg = configJson(c);
  cfg["resolution"] = c.resolution;
  cfg["angular"] = nt;
  cfg["inits"] = c.inits;
  cfg["steps"] = c.steps;
  cfg["invariant_points"] = c.invariantPoints;
  writeManifest(c, cfg);

  std::cout << "relaxed " << formatDouble(relaxed.value) << ", classical min found "
            << formatDouble(search.minObjective) << '\n';
  if (!invariantsOk) {
    std::string list;
    for (const auto& f : failing) list += (list.empty() ? "" : "; ") + f;
    throw ExitError(kGap, "invariant check failed: " + list);
  }
  if (!relaxedOk) throw ExitError(kGap, "relaxed value exceeds 1e-8");
  if (!searchOk) throw ExitError(kGap, "classical minimum found is below the threshold");
  return kOk;
}

int cmdExamples(const RunConfig& c) {
  json list = json::array();
  for (const auto& name : core::builtinNames()) {
    const auto p = core::builtin(name);
    list.push_back({{"name", name}, {"n", p.n()}, {"m", p.m}});
    std::cout << name << "  (n = " << p.n() << ", m = " << p.m << ")\n";
  }
  prepareOut(c);
  writeOut(c, "examples.json", io::dumpJson(list));
  writeManifest(c, configJson(c));
  return kOk;
}

int cmdLpSolve(const RunConfig& c) {
  const auto lpText = readFile(c.lpPath);
  lp::LinearProgram program;
  try {
    program = lp::parse(lpText);
    program.validate();
  } catch (const std::exception& e) {
    throw ExitError(kIo, std::string("cannot parse LP: ") + e.what());
  }
  const auto sol = lp::solve(program);
  json j;
  j["status"] = lp::toString(sol.status);
  if (!sol.message.empty()) j["message"] = sol.message;
  j["iterations"] = sol.iterations;
  if (sol.status == lp::Status::Optimal) {
    j["objective"] = sol.objective;
    j["dual_objective"] = sol.dualObjective;
    j["x"] = sol.x;
    j["y"] = sol.y;
    j["certificate"] = certificateJson(sol.certificate);
  }
  prepareOut(c);
  writeOut(c, "lp_result.json", io::dumpJson(j));
  writeManifest(c, configJson(c));
  if (sol.status == lp::Status::Optimal)
    std::cout << "objective " << formatDouble(sol.objective) << '\n';
  else
    std::cout << "status: " << lp::toString(sol.status) << '\n';
  return statusExit(sol.status, sol.message);
}

void addProblemOptions(CLI::App* sub, RunConfig& c) {
  auto* b = sub->add_option("--builtin", c.builtin, "built-in problem name");
  auto* p = sub->add_option("--problem", c.problemPath, "problem JSON file");
  b->excludes(p);
  sub->add_option("--nx", c.nx, "x cells per axis (one value broadcasts)");
  sub->add_option("--ny", c.ny, "y nodes");
  sub->add_option("--nz", c.nz, "z nodes per gradient component");
  sub->add_option("--degree", c.degree, "boundary-coupled polynomial degree");
  sub->add_option("--y-degree", c.yDegree, "polynomial y family degree (-1: dual hats)");
  sub->add_option("--tol-f", c.tolF, "support tolerance for F");
  sub->add_option("--tol-g", c.tolG, "support tolerance for G");
}

void addCommon(CLI::App* sub, RunConfig& c) {
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occupation-measure relaxations of variational problems"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  RunConfig c;

  auto* relaxCmd = app.add_subcommand("relax", "solve the discretised relaxation");
  addProblemOptions(relaxCmd, c);
  addCommon(relaxCmd, c);

  auto* decompose = app.add_subcommand("decompose", "decompose a codimension-one measure into sheets");
  addProblemOptions(decompose, c);
  addCommon(decompose, c);
  decompose->add_option("--sheets", c.sheets, "sheet count (0: from the density plateaus)");
  decompose->add_option("--from", c.from, "directory with measure CSVs from a relax run");

  auto* gap = app.add_subcommand("gap", "two-dimensional counterexample");
  gap->require_subcommand(1);
  auto* verify = gap->add_subcommand("verify", "run the gap verification");
  addCommon(verify, c);
  verify->add_option("--resolution", c.resolution, "radial nodes (angular = 4x)")
      ->capture_default_str();
  verify->add_option("--inits", c.inits, "random initial fields")->capture_default_str();
  verify->add_option("--steps", c.steps, "descent steps per start")->capture_default_str();
  verify->add_option("--invariant-points", c.invariantPoints, "random points for field invariants")
      ->capture_default_str();

  auto* examples = app.add_subcommand("examples", "list built-in problems");
  addCommon(examples, c);

  auto* lpSolve = app.add_subcommand("lp-solve", "solve an LP in the plain-text format");
  lpSolve->add_option("file", c.lpPath, "LP file")->required();
  addCommon(lpSolve, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kIo;
  }

  try {
    if (relaxCmd->parsed()) return c.subcommand = "relax", cmdRelax(c);
    if (decompose->parsed()) return c.subcommand = "decompose", cmdDecompose(c);
    if (verify->parsed()) return c.subcommand = "gap verify", cmdGapVerify(c);
    if (examples->parsed()) return c.subcommand = "examples", cmdExamples(c);
    if (lpSolve->parsed()) return c.subcommand = "lp-solve", cmdLpSolve(c);
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const sheets::CodimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCodim;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kIo;
}
