#include "occrelax/expr.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace occrelax::expr {

ParseError::ParseError(const std::string& what, std::size_t offset,
                       std::size_t line, std::size_t column)
    : std::runtime_error(what + " at line " + std::to_string(line) +
                         ", column " + std::to_string(column) + " (offset " +
                         std::to_string(offset) + ")"),
      offset_(offset),
      line_(line),
      column_(column) {}

namespace {

double integerPower(double base, int exponent) {
  const bool invert = exponent < 0;
  unsigned k = static_cast<unsigned>(invert ? -static_cast<long>(exponent)
                                            : exponent);
  double r = 1.0;
  for (unsigned i = 0; i < k; ++i) r *= base;
  if (invert) {
    if (r == 0.0) throw EvalError("division by zero in negative power");
    r = 1.0 / r;
  }
  return r;
}

double evalNode(const Node& node, std::span<const double> p) {
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, Variable>) {
          return p[n.slot];
        } else if constexpr (std::is_same_v<T, Binary>) {
          const double a = evalNode(*n.lhs, p);
          const double b = evalNode(*n.rhs, p);
          switch (n.op) {
            case BinOp::Add: return a + b;
            case BinOp::Sub: return a - b;
            case BinOp::Mul: return a * b;
            case BinOp::Div:
              if (b == 0.0) throw EvalError("division by zero");
              return a / b;
          }
          return 0.0;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return -evalNode(*n.operand, p);
        } else if constexpr (std::is_same_v<T, Power>) {
          return integerPower(evalNode(*n.base, p), n.exponent);
        } else {
          const double a = evalNode(*n.args[0], p);
          switch (n.fn) {
            case Func::Abs: return std::fabs(a);
            case Func::Min: return std::min(a, evalNode(*n.args[1], p));
            case Func::Max: return std::max(a, evalNode(*n.args[1], p));
          }
          return 0.0;
        }
      },
      node.v);
}

std::string formatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void printNode(const Node& node, const Arity& arity, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          if (std::signbit(n.value)) {
            out += "(-" + formatDouble(-n.value) + ")";
          } else {
            out += formatDouble(n.value);
          }
        } else if constexpr (std::is_same_v<T, Variable>) {
          out += variableName(n.slot, arity);
        } else if constexpr (std::is_same_v<T, Binary>) {
          static constexpr const char* ops[] = {" + ", " - ", " * ", " / "};
          out += '(';
          printNode(*n.lhs, arity, out);
          out += ops[static_cast<int>(n.op)];
          printNode(*n.rhs, arity, out);
          out += ')';
        } else if constexpr (std::is_same_v<T, Negate>) {
          out += "(-";
          printNode(*n.operand, arity, out);
          out += ')';
        } else if constexpr (std::is_same_v<T, Power>) {
          out += '(';
          printNode(*n.base, arity, out);
          out += ")^" + std::to_string(n.exponent);
        } else {
          static constexpr const char* names[] = {"min", "max", "abs"};
          out += names[static_cast<int>(n.fn)];
          out += '(';
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ", ";
            printNode(*n.args[i], arity, out);
          }
          out += ')';
        }
      },
      node.v);
}

NodePtr make(auto&& alt) {
  return std::make_shared<const Node>(Node{std::forward<decltype(alt)>(alt)});
}

class Parser {
 public:
  Parser(std::string_view src, Arity arity) : src_(src), arity_(arity) {}

  NodePtr run() {
    skipSpace();
    if (pos_ >= src_.size()) fail("empty expression");
    NodePtr e = parseExpr();
    skipSpace();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { failAt(msg, pos_); }

  [[noreturn]] void failAt(const std::string& msg, std::size_t at) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, at, line, col);
  }

  void skipSpace() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skipSpace();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr parseExpr() {
    NodePtr lhs = parseTerm();
    for (;;) {
      if (accept('+')) {
        lhs = make(Binary{BinOp::Add, lhs, parseTerm()});
      } else if (accept('-')) {
        lhs = make(Binary{BinOp::Sub, lhs, parseTerm()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr parseTerm() {
    NodePtr lhs = parseUnary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Binary{BinOp::Mul, lhs, parseUnary()});
      } else if (accept('/')) {
        lhs = make(Binary{BinOp::Div, lhs, parseUnary()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr parseUnary() {
    if (accept('-')) {
      NodePtr operand = parseUnary();
      if (const auto* lit = std::get_if<Literal>(&operand->v))
        return make(Literal{-lit->value});
      return make(Negate{operand});
    }
    return parsePower();
  }

  NodePtr parsePower() {
    NodePtr base = parsePrimary();
    if (!accept('^')) return base;
    skipSpace();
    const std::size_t start = pos_;
    bool negative = accept('-');
    skipSpace();
    const std::size_t digits = pos_;
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    if (digits == pos_) failAt("exponent must be an integer literal", start);
    int k = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + digits, src_.data() + pos_, k);
    if (ec != std::errc() || k > 1024) failAt("exponent out of range", start);
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' ||
                               src_[pos_] == 'E'))
      failAt("exponent must be an integer literal", start);
    return make(Power{base, negative ? -k : k});
  }

  NodePtr parsePrimary() {
    skipSpace();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parseExpr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parseNumber();
    if (std::isalpha(static_cast<unsigned char>(c))) return parseIdentifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr parseNumber() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_ || !std::isfinite(v))
      failAt("malformed number", start);
    return make(Literal{v});
  }

  NodePtr parseIdentifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isalnum(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    const std::string_view id = src_.substr(start, pos_ - start);
    if (id == "min" || id == "max" || id == "abs") {
      const Func fn = id == "min" ? Func::Min : id == "max" ? Func::Max : Func::Abs;
      expect('(');
      std::vector<NodePtr> args{parseExpr()};
      while (accept(',')) args.push_back(parseExpr());
      expect(')');
      const std::size_t want = fn == Func::Abs ? 1 : 2;
      if (args.size() != want)
        failAt(std::string(id) + " expects " + std::to_string(want) +
                   " argument(s)",
               start);
      return make(Call{fn, std::move(args)});
    }
    return make(Variable{resolve(id, start)});
  }

  std::size_t resolve(std::string_view id, std::size_t at) const {
    const auto n = static_cast<std::size_t>(arity_.n);
    const auto m = static_cast<std::size_t>(arity_.m);
    auto index = [&](std::string_view digits) -> std::size_t {
      std::size_t k = 0;
      if (digits.empty()) return 0;
      for (char ch : digits) {
        if (!std::isdigit(static_cast<unsigned char>(ch)))
          failAt("unknown identifier '" + std::string(id) + "'", at);
      }
      std::from_chars(digits.data(), digits.data() + digits.size(), k);
      return k;
    };
    const char head = id[0];
    const std::string_view rest = id.substr(1);
    if (head == 'x' || head == 'y') {
      const std::size_t dim = head == 'x' ? n : m;
      std::size_t k = rest.empty() ? (dim == 1 ? 1 : 0) : index(rest);
      if (rest.empty() && dim != 1)
        failAt("bare '" + std::string(1, head) + "' needs dimension 1", at);
      if (k < 1 || k > dim)
        failAt("variable '" + std::string(id) + "' outside arity", at);
      return (head == 'x' ? 0 : n) + (k - 1);
    }
    if (head == 'z') {
      if (!arity_.hasZ)
        failAt("z variables not available in a boundary field", at);
      std::size_t l = 0, i = 0;
      if (rest.empty()) {
        if (n != 1 || m != 1) failAt("bare 'z' needs n = m = 1", at);
        l = i = 1;
      } else if (m == 1 && rest.size() == 1) {
        l = index(rest);
        i = 1;
      } else if (rest.size() == 2) {
        l = index(rest.substr(0, 1));
        i = index(rest.substr(1, 1));
      } else {
        failAt("unknown identifier '" + std::string(id) + "'", at);
      }
      if (l < 1 || l > n || i < 1 || i > m)
        failAt("variable '" + std::string(id) + "' outside arity", at);
      return n + m + (l - 1) * m + (i - 1);
    }
    failAt("unknown identifier '" + std::string(id) + "'", at);
  }

  std::string_view src_;
  Arity arity_;
  std::size_t pos_ = 0;
};

}  // namespace

double Expr::eval(std::span<const double> point) const {
  if (!root_) throw EvalError("empty expression");
  if (point.size() < arity_.pointSize())
    throw EvalError("point dimension does not match arity");
  return evalNode(*root_, point);
}

std::string Expr::print() const {
  std::string out;
  if (root_) printNode(*root_, arity_, out);
  return out;
}

Expr parse(std::string_view source, Arity arity) {
  return Expr(Parser(source, arity).run(), arity);
}

std::string variableName(std::size_t slot, const Arity& arity) {
  const auto n = static_cast<std::size_t>(arity.n);
  const auto m = static_cast<std::size_t>(arity.m);
  if (slot < n) return "x" + std::to_string(slot + 1);
  if (slot < n + m) return "y" + std::to_string(slot - n + 1);
  const std::size_t k = slot - n - m;
  return "z" + std::to_string(k / m + 1) + std::to_string(k % m + 1);
}

bool sameTree(const NodePtr& a, const NodePtr& b) {
  if (!a || !b) return a == b;
  if (a->v.index() != b->v.index()) return false;
  return std::visit(
      [&](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const auto& nb = std::get<T>(b->v);
        if constexpr (std::is_same_v<T, Literal>) {
          return std::bit_cast<std::uint64_t>(na.value) ==
                 std::bit_cast<std::uint64_t>(nb.value);
        } else if constexpr (std::is_same_v<T, Variable>) {
          return na.slot == nb.slot;
        } else if constexpr (std::is_same_v<T, Binary>) {
          return na.op == nb.op && sameTree(na.lhs, nb.lhs) &&
                 sameTree(na.rhs, nb.rhs);
        } else if constexpr (std::is_same_v<T, Negate>) {
          return sameTree(na.operand, nb.operand);
        } else if constexpr (std::is_same_v<T, Power>) {
          return na.exponent == nb.exponent && sameTree(na.base, nb.base);
        } else {
          if (na.fn != nb.fn || na.args.size() != nb.args.size()) return false;
          for (std::size_t i = 0; i < na.args.size(); ++i)
            if (!sameTree(na.args[i], nb.args[i])) return false;
          return true;
        }
      },
      a->v);
}

}  // namespace occrelax::expr
