#include <gtest/gtest.h>

#include <random>

#include "occrelax/io_util.hpp"
#include "occrelax/problem_io.hpp"

using namespace occrelax;

namespace {

std::vector<double> randomPoint(std::mt19937_64& rng, const core::VariationalProblem& p,
                                bool interior) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pt;
  for (const auto& s : p.domain.boundingBox()) pt.push_back(s.lo + (s.hi - s.lo) * u(rng));
  for (const auto& s : p.yBox) pt.push_back(s.lo + (s.hi - s.lo) * u(rng));
  if (interior)
    for (const auto& s : p.zBox) pt.push_back(s.lo + (s.hi - s.lo) * u(rng));
  return pt;
}

}  // namespace

TEST(ProblemIo, EveryBuiltinRoundTrips) {
  std::mt19937_64 rng(21);
  for (const auto& name : core::builtinNames()) {
    const auto p = core::builtin(name);
    const auto text = io::dumpJson(io::problemToJson(p));
    const auto q = io::parseProblem(text);
    EXPECT_EQ(q.m, p.m);
    EXPECT_EQ(q.n(), p.n());
    EXPECT_EQ(q.integral.size(), p.integral.size());
    EXPECT_EQ(q.L.convexInZ, p.L.convexInZ);
    for (int t = 0; t < 100; ++t) {
      const auto xi = randomPoint(rng, p, true);
      const auto xb = randomPoint(rng, p, false);
      ASSERT_EQ(q.L(xi), p.L(xi)) << name;
      ASSERT_EQ(q.F(xi), p.F(xi)) << name;
      ASSERT_EQ(q.G(xi), p.G(xi)) << name;
      ASSERT_EQ(q.Lb(xb), p.Lb(xb)) << name;
      ASSERT_EQ(q.Fb(xb), p.Fb(xb)) << name;
      ASSERT_EQ(q.Gb(xb), p.Gb(xb)) << name;
      for (std::size_t c = 0; c < p.integral.size(); ++c)
        ASSERT_EQ(q.integral[c].H(xi), p.integral[c].H(xi)) << name;
    }
    // the serialised text is a fixed point
    EXPECT_EQ(io::dumpJson(io::problemToJson(q)), text) << name;
  }
}

TEST(ProblemIo, Schema) {
  const auto p = io::parseProblem(R"({
    "name": "strip",
    "domain": {"kind": "box", "sides": [[0, 1], [0, 2]]},
    "m": 1,
    "yBox": [[-1, 1]],
    "zBox": [[-1, 1], [-1, 1]],
    "L": "z1^2 + z2^2",
    "L_convex": true,
    "F": "y1 - x1",
    "integral": [{"H": "y1", "rel": "eq", "target": 0.25}],
    "hint": {"nx": [4, 8], "ny": 3, "nz": 3, "degree": 2}
  })");
  EXPECT_EQ(p.n(), 2);
  EXPECT_TRUE(p.L.convexInZ);
  EXPECT_EQ(p.G(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}), 0.0);
  EXPECT_EQ(p.integral[0].relation, core::Relation::EqualTarget);
  EXPECT_EQ(p.hint.nx, (std::vector<int>{4, 8}));
  EXPECT_EQ(io::parseProblem(R"({"builtin": "gap-eq"})").builtinName, "gap-eq");
}

TEST(ProblemIo, Errors) {
  try {
    (void)io::parseProblem("{\"domain\": ");
    FAIL();
  } catch (const ProblemError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 12"), std::string::npos) << e.what();
  }
  EXPECT_THROW((void)io::parseProblem(R"({"builtin": "nope"})"), ProblemError);
  EXPECT_THROW((void)io::parseProblem(R"({"domain": {"kind": "torus"}})"), ProblemError);
  EXPECT_THROW((void)io::parseProblem(
                   R"({"domain": {"kind": "interval", "lo": 0, "hi": 1}, "yBox": [[0, 1]],
                       "zBox": [[0, 1]], "L": "y1 +"})"),
               ProblemError);
  EXPECT_THROW((void)io::parseProblem(
                   R"({"domain": {"kind": "interval", "lo": 0, "hi": 1}, "yBox": [[0, 1]],
                       "zBox": [[0, 1], [0, 1]], "L": "y1"})"),
               ProblemError);
}

TEST(ProblemIo, DoublesPrintAtFullPrecision) {
  nlohmann::json j = {{"a", 0.1}, {"b", 1.0 / 3.0}, {"c", 7}, {"d", "s"}};
  const auto text = io::dumpJson(j);
  EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
  EXPECT_NE(text.find("0.33333333333333331"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(text)["b"].get<double>(), 1.0 / 3.0);
}

TEST(IoUtil, FormatAndParseRoundTrip) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int t = 0; t < 1000; ++t) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(parseDouble(formatDouble(v)), v);
  }
  EXPECT_THROW((void)parseDouble("1.5x"), std::exception);
}
