#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace occrelax::expr {

/// Number of x, y components a field expression may reference. z has n*m
/// components laid out row-major as z[l*m + i] = dy_i/dx_l.
struct Arity {
  int n = 1;
  int m = 1;
  bool hasZ = true;

  [[nodiscard]] std::size_t pointSize() const {
    return static_cast<std::size_t>(n + m + (hasZ ? n * m : 0));
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset, std::size_t line,
             std::size_t column);
  std::size_t offset() const { return offset_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t offset_, line_, column_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BinOp { Add, Sub, Mul, Div };
enum class Func { Min, Max, Abs };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Literal {
  double value;
};
struct Variable {
  std::size_t slot;  // index into the flat evaluation point
};
struct Binary {
  BinOp op;
  NodePtr lhs, rhs;
};
struct Negate {
  NodePtr operand;
};
struct Power {
  NodePtr base;
  int exponent;
};
struct Call {
  Func fn;
  std::vector<NodePtr> args;
};

struct Node {
  std::variant<Literal, Variable, Binary, Negate, Power, Call> v;
};

/// Immutable parsed expression.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, Arity arity) : root_(std::move(root)), arity_(arity) {}

  [[nodiscard]] double eval(std::span<const double> point) const;
  [[nodiscard]] std::string print() const;
  [[nodiscard]] const Arity& arity() const { return arity_; }
  [[nodiscard]] const NodePtr& root() const { return root_; }
  [[nodiscard]] bool empty() const { return !root_; }

 private:
  NodePtr root_;
  Arity arity_;
};

/// Parses the field grammar:
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' ['-'] integer)?
///   primary := number | variable | func '(' args ')' | '(' expr ')'
///   func    := min | max | abs
///
/// Variables: x1..xn, y1..ym, z<l><i> (l in 1..n, i in 1..m). With m = 1,
/// z<l> is accepted; with n = 1 and m = 1 the bare names x, y, z are also
/// accepted.
[[nodiscard]] Expr parse(std::string_view source, Arity arity);

/// Name of the variable occupying a point slot (canonical spelling).
[[nodiscard]] std::string variableName(std::size_t slot, const Arity& arity);

/// Structural equality of two trees (literal values compared bitwise).
[[nodiscard]] bool sameTree(const NodePtr& a, const NodePtr& b);

}  // namespace occrelax::expr
