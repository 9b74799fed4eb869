#include <gtest/gtest.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>

#include "occrelax/expr.hpp"

using namespace occrelax::expr;

namespace {

double at(const std::string& src, std::vector<double> p, Arity a = {1, 1, true}) {
  return parse(src, a).eval(p);
}

/// Independent evaluator over the printed text: same grammar, evaluated
/// while parsing, sharing no code with the library.
class Reference {
 public:
  Reference(std::string s, const Arity& a, std::span<const double> p) : s_(std::move(s)), p_(p) {
    for (std::size_t k = 0; k < a.pointSize(); ++k) slots_[variableName(k, a)] = k;
  }
  double run() {
    const double v = expr();
    space();
    if (i_ != s_.size()) throw std::runtime_error("trailing");
    return v;
  }

 private:
  void space() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    space();
    if (i_ < s_.size() && s_[i_] == c) return ++i_, true;
    return false;
  }
  double expr() {
    double v = term();
    for (;;) {
      if (eat('+')) v = v + term();
      else if (eat('-')) v = v - term();
      else return v;
    }
  }
  double term() {
    double v = unary();
    for (;;) {
      if (eat('*')) {
        v = v * unary();
      } else if (eat('/')) {
        const double d = unary();
        if (d == 0.0) throw std::domain_error("div");
        v = v / d;
      } else {
        return v;
      }
    }
  }
  double unary() { return eat('-') ? -unary() : power(); }
  double power() {
    double b = primary();
    if (!eat('^')) return b;
    const bool neg = eat('-');
    space();
    int k = 0;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_])))
      k = 10 * k + (s_[i_++] - '0');
    double r = 1.0;
    for (int j = 0; j < k; ++j) r *= b;
    if (neg) {
      if (r == 0.0) throw std::domain_error("pow");
      r = 1.0 / r;
    }
    return r;
  }
  double primary() {
    space();
    if (eat('(')) {
      const double v = expr();
      eat(')');
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.') {
      char* end = nullptr;
      const double v = std::strtod(s_.c_str() + i_, &end);
      i_ = static_cast<std::size_t>(end - s_.c_str());
      return v;
    }
    std::string name;
    while (i_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[i_]))) name += s_[i_++];
    if (name == "min" || name == "max" || name == "abs") {
      eat('(');
      const double a = expr();
      double r = std::fabs(a);
      if (name != "abs") {
        eat(',');
        const double b = expr();
        r = name == "min" ? std::min(a, b) : std::max(a, b);
      }
      eat(')');
      return r;
    }
    return p_[slots_.at(name)];
  }

  std::string s_;
  std::span<const double> p_;
  std::map<std::string, std::size_t> slots_;
  std::size_t i_ = 0;
};

NodePtr node(auto alt) { return std::make_shared<const Node>(Node{std::move(alt)}); }

NodePtr randomTree(std::mt19937_64& rng, const Arity& a, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 7);
  switch (pick(rng)) {
    case 0: {
      std::uniform_real_distribution<double> u(0.0, 4.0);
      return node(Literal{std::ldexp(std::round(u(rng) * 64.0), -4)});
    }
    case 1: {
      std::uniform_int_distribution<std::size_t> s(0, a.pointSize() - 1);
      return node(Variable{s(rng)});
    }
    case 2: case 3: case 4: {
      std::uniform_int_distribution<int> op(0, 3);
      return node(Binary{static_cast<BinOp>(op(rng)), randomTree(rng, a, depth - 1),
                         randomTree(rng, a, depth - 1)});
    }
    case 5:
      return node(Negate{randomTree(rng, a, depth - 1)});
    case 6: {
      std::uniform_int_distribution<int> e(-2, 4);
      return node(Power{randomTree(rng, a, depth - 1), e(rng)});
    }
    default: {
      std::uniform_int_distribution<int> f(0, 2);
      const auto fn = static_cast<Func>(f(rng));
      std::vector<NodePtr> args{randomTree(rng, a, depth - 1)};
      if (fn != Func::Abs) args.push_back(randomTree(rng, a, depth - 1));
      return node(Call{fn, std::move(args)});
    }
  }
}

}  // namespace

TEST(Expr, Examples) {
  EXPECT_EQ(at("1+2*3", {0.5, 0.5, 0.5}), 7.0);
  EXPECT_EQ(at("min(abs(z1-1),abs(z1+1))", {0.0, 0.0, 0.0}), 1.0);
  EXPECT_EQ(at("y1*(1-y1)", {0.3, 1.0, 0.0}), 0.0);
  EXPECT_EQ(at("x1^2", {3.0, 0.0, 0.0}), 9.0);
  EXPECT_EQ(at("(7/4)*y1-(3/4)*y1^2", {0.0, 2.0, 0.0}), 0.5);
  EXPECT_EQ(at("abs(y1)", {0.0, -2.0, 0.0}), 2.0);
}

TEST(Expr, Precedence) {
  EXPECT_EQ(at("2-3-4", {0, 0, 0}), -5.0);
  EXPECT_EQ(at("-2^2", {0, 0, 0}), -4.0);
  EXPECT_EQ(at("2^-1", {0, 0, 0}), 0.5);
  EXPECT_EQ(at("8/4/2", {0, 0, 0}), 1.0);
  EXPECT_EQ(at("max(x, y) - min(x, z)", {1, 2, 3}), 1.0);
}

TEST(Expr, VariableNames) {
  const Arity a{2, 1, true};
  const std::vector<double> p{1, 2, 3, 4, 5};
  EXPECT_EQ(parse("x1 + 10*x2 + 100*y1 + 1000*z1 + 10000*z2", a).eval(p), 54321.0);
  EXPECT_EQ(parse("z11 + z21", a).eval(p), 9.0);
  const Arity b{2, 2, true};
  EXPECT_EQ(variableName(4, b), "z11");
  EXPECT_EQ(variableName(5, b), "z12");
  EXPECT_EQ(variableName(6, b), "z21");
}

TEST(Expr, ErrorsCarryOffsets) {
  try {
    (void)parse("1 + * 2", {1, 1, true});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW((void)parse("", {1, 1, true}), ParseError);
  EXPECT_THROW((void)parse("y2", {1, 1, true}), ParseError);
  EXPECT_THROW((void)parse("z1", {1, 1, false}), ParseError);
  EXPECT_THROW((void)parse("foo(1)", {1, 1, true}), ParseError);
  EXPECT_THROW((void)parse("(1 + 2", {1, 1, true}), ParseError);
  EXPECT_THROW((void)parse("1/x", {1, 1, true}).eval(std::vector<double>{0, 0, 0}), EvalError);
}

TEST(ExprProperty, PrintParseRoundTrip) {
  std::mt19937_64 rng(11);
  const Arity arities[] = {{1, 1, true}, {2, 1, true}, {2, 2, true}, {2, 2, false}};
  for (int t = 0; t < 1000; ++t) {
    const Arity a = arities[t % 4];
    const Expr tree(randomTree(rng, a, 5), a);
    const Expr once = parse(tree.print(), a);
    const Expr twice = parse(once.print(), a);
    ASSERT_TRUE(sameTree(once.root(), twice.root())) << tree.print();
    EXPECT_EQ(once.print(), twice.print());
  }
}

TEST(ExprProperty, EvalMatchesReferenceBitwise) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Arity arities[] = {{1, 1, true}, {2, 1, true}, {2, 2, true}};
  int compared = 0;
  for (int t = 0; t < 1000; ++t) {
    const Arity a = arities[t % 3];
    const Expr tree(randomTree(rng, a, 5), a);
    std::vector<double> p(a.pointSize());
    for (double& v : p) v = u(rng);
    double lib = 0.0, ref = 0.0;
    bool libThrew = false, refThrew = false;
    try { lib = tree.eval(p); } catch (const EvalError&) { libThrew = true; }
    try { ref = Reference(tree.print(), a, p).run(); } catch (const std::domain_error&) { refThrew = true; }
    ASSERT_EQ(libThrew, refThrew) << tree.print();
    if (libThrew) continue;
    ++compared;
    if (std::isnan(lib)) {
      EXPECT_TRUE(std::isnan(ref));
    } else {
      ASSERT_EQ(std::bit_cast<std::uint64_t>(lib), std::bit_cast<std::uint64_t>(ref))
          << tree.print();
    }
  }
  EXPECT_GT(compared, 900);
}
