#pragma once

// Metric expression mini-language.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right associative, -x^2 = -(x^2)
//   primary := number | 'x' | 'y' | 'pi' | 'e'
//            | func '(' expr ')' | '(' expr ')'
//   func    := sin cos exp ln sqrt atan cosh sinh abs

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "blaschke/error.hpp"
#include "blaschke/grid.hpp"

namespace blaschke::expr {

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, std::size_t position)
      : Error("syntax error at position " + std::to_string(position) + ": " + msg),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UnknownIdentifierError : public SyntaxError {
 public:
  UnknownIdentifierError(const std::string& name, std::size_t position)
      : SyntaxError("unknown identifier '" + name + "'", position), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Evaluation left the domain of a function (ln of a non-positive number,
/// division by zero, ...).
class EvaluationError : public DomainError {
 public:
  using DomainError::DomainError;
};

enum class BinaryOp { add, sub, mul, div, pow };
enum class Function { sin, cos, exp, ln, sqrt, atan, cosh, sinh, abs };

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Number {
  double value;
  std::string text;  // literal as written, for evaluation in wider types
};
struct Variable {
  char name;  // 'x' or 'y'
};
struct NamedConstant {
  std::string name;  // "pi" or "e"
};
struct Negate {
  NodePtr arg;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs, rhs;
};
struct Call {
  Function fn;
  NodePtr arg;
};

struct Node {
  std::variant<Number, Variable, NamedConstant, Negate, Binary, Call> v;
};

namespace detail {

inline const char* function_name(Function f) {
  switch (f) {
    case Function::sin: return "sin";
    case Function::cos: return "cos";
    case Function::exp: return "exp";
    case Function::ln: return "ln";
    case Function::sqrt: return "sqrt";
    case Function::atan: return "atan";
    case Function::cosh: return "cosh";
    case Function::sinh: return "sinh";
    case Function::abs: return "abs";
  }
  return "?";
}

inline bool lookup_function(std::string_view name, Function& out) {
  static constexpr Function all[] = {Function::sin,  Function::cos,  Function::exp,
                                     Function::ln,   Function::sqrt, Function::atan,
                                     Function::cosh, Function::sinh, Function::abs};
  for (Function f : all)
    if (name == function_name(f)) {
      out = f;
      return true;
    }
  return false;
}

inline char op_char(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return '+';
    case BinaryOp::sub: return '-';
    case BinaryOp::mul: return '*';
    case BinaryOp::div: return '/';
    case BinaryOp::pow: return '^';
  }
  return '?';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(msg, pos_); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr make(auto&& v) {
    return std::make_unique<Node>(Node{std::forward<decltype(v)>(v)});
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = make(Binary{BinaryOp::add, std::move(lhs), term()});
      else if (accept('-'))
        lhs = make(Binary{BinaryOp::sub, std::move(lhs), term()});
      else
        return lhs;
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = make(Binary{BinaryOp::mul, std::move(lhs), unary()});
      else if (accept('/'))
        lhs = make(Binary{BinaryOp::div, std::move(lhs), unary()});
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Negate{unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return make(Binary{BinaryOp::pow, std::move(base), unary()});
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (accept('(')) {
      auto inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t n = digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) fail("malformed number");
    // Exponent only when followed by digits, so "2e" is not swallowed.
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < s_.size() && (s_[look] == '+' || s_[look] == '-')) ++look;
      if (look < s_.size() && std::isdigit(static_cast<unsigned char>(s_[look]))) {
        pos_ = look;
        digits();
      }
    }
    std::string text(s_.substr(start, pos_ - start));
    const double value = std::stod(text);
    return make(Number{value, std::move(text)});
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string name(s_.substr(start, pos_ - start));
    Function fn;
    if (lookup_function(name, fn)) {
      if (!accept('(')) fail("expected '(' after " + name);
      auto arg = expr();
      if (!accept(')')) fail("expected ')'");
      return make(Call{fn, std::move(arg)});
    }
    if (name == "x" || name == "y") return make(Variable{name[0]});
    if (name == "pi" || name == "e") return make(NamedConstant{name});
    throw UnknownIdentifierError(name, start);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

template <class T>
T apply(Function f, const T& a) {
  using std::abs, std::atan, std::cos, std::cosh, std::exp, std::log, std::sin, std::sinh,
      std::sqrt;
  switch (f) {
    case Function::sin: return sin(a);
    case Function::cos: return cos(a);
    case Function::exp: return exp(a);
    case Function::ln:
      if (!(a > 0)) throw EvaluationError("ln of a non-positive number");
      return log(a);
    case Function::sqrt:
      if (a < 0) throw EvaluationError("sqrt of a negative number");
      return sqrt(a);
    case Function::atan: return atan(a);
    case Function::cosh: return cosh(a);
    case Function::sinh: return sinh(a);
    case Function::abs: return abs(a);
  }
  return T(0);
}

// Literals are converted from their text so that wider types do not inherit
// the rounding of the double value.
template <class T>
T literal(const std::string& text, double value) {
  if constexpr (std::is_same_v<T, double>)
    return value;
  else
    return T(text.c_str());
}

template <class T>
T eval(const Node& n, const T& x, const T& y) {
  struct Visitor {
    const T& x;
    const T& y;
    T operator()(const Number& v) const { return literal<T>(v.text, v.value); }
    T operator()(const Variable& v) const { return v.name == 'x' ? x : y; }
    T operator()(const NamedConstant& v) const {
      return v.name == "pi" ? literal<T>("3.14159265358979323846264338327950288", std::numbers::pi)
                            : literal<T>("2.71828182845904523536028747135266250", std::numbers::e);
    }
    T operator()(const Negate& v) const { return -eval(*v.arg, x, y); }
    T operator()(const Binary& v) const {
      const T a = eval(*v.lhs, x, y), b = eval(*v.rhs, x, y);
      switch (v.op) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div:
          if (b == 0) throw EvaluationError("division by zero");
          return a / b;
        case BinaryOp::pow: {
          using std::pow;
          return pow(a, b);
        }
      }
      return T(0);
    }
    T operator()(const Call& v) const { return apply(v.fn, eval(*v.arg, x, y)); }
  };
  const T r = std::visit(Visitor{x, y}, n.v);
  using std::isfinite;
  if (!isfinite(r)) throw EvaluationError("expression is not finite");
  return r;
}

inline void print(const Node& n, std::string& out) {
  struct Visitor {
    std::string& out;
    void operator()(const Number& v) const {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v.value);
      out += buf;
    }
    void operator()(const Variable& v) const { out += v.name; }
    void operator()(const NamedConstant& v) const { out += v.name; }
    void operator()(const Negate& v) const {
      out += "(-";
      print(*v.arg, out);
      out += ')';
    }
    void operator()(const Binary& v) const {
      out += '(';
      print(*v.lhs, out);
      out += ' ';
      out += op_char(v.op);
      out += ' ';
      print(*v.rhs, out);
      out += ')';
    }
    void operator()(const Call& v) const {
      out += function_name(v.fn);
      out += '(';
      print(*v.arg, out);
      out += ')';
    }
  };
  std::visit(Visitor{out}, n.v);
}

inline bool equal(const Node& a, const Node& b) {
  if (a.v.index() != b.v.index()) return false;
  if (auto* p = std::get_if<Number>(&a.v)) return p->value == std::get<Number>(b.v).value;
  if (auto* p = std::get_if<Variable>(&a.v)) return p->name == std::get<Variable>(b.v).name;
  if (auto* p = std::get_if<NamedConstant>(&a.v))
    return p->name == std::get<NamedConstant>(b.v).name;
  if (auto* p = std::get_if<Negate>(&a.v)) return equal(*p->arg, *std::get<Negate>(b.v).arg);
  if (auto* p = std::get_if<Binary>(&a.v)) {
    const auto& q = std::get<Binary>(b.v);
    return p->op == q.op && equal(*p->lhs, *q.lhs) && equal(*p->rhs, *q.rhs);
  }
  const auto& p = std::get<Call>(a.v);
  const auto& q = std::get<Call>(b.v);
  return p.fn == q.fn && equal(*p.arg, *q.arg);
}

}  // namespace detail

/// Parsed expression in the variables x and y.
class Expression {
 public:
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  double operator()(double x, double y) const { return detail::eval<double>(*root_, x, y); }

  /// Evaluation in another floating-point type (e.g. quad precision).
  template <class T>
  T evaluate_as(const T& x, const T& y) const {
    return detail::eval<T>(*root_, x, y);
  }

  const Node& root() const { return *root_; }

  /// Fully parenthesized form; parses back to the same tree.
  std::string to_string() const {
    std::string out;
    detail::print(*root_, out);
    return out;
  }

  friend bool structurally_equal(const Expression& a, const Expression& b) {
    return detail::equal(*a.root_, *b.root_);
  }

 private:
  NodePtr root_;
};

inline Expression parse_expression(std::string_view text) {
  return Expression(detail::Parser(text).parse());
}

/// Evaluates the expression at every grid point.
inline ScalarField evaluate(const Expression& e, const IsothermalChart& chart) {
  return ScalarField::sample(chart, [&](double x, double y) { return e(x, y); });
}

}  // namespace blaschke::expr
