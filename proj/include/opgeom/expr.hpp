// Scalar field expressions over a 4-chart: parsing, printing, evaluation,
// exact symbolic differentiation and a finite-difference oracle.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' integer)?
//   base   := number | 'i' | 'x1'|'x2'|'x3'|'x4'
//           | func '(' expr ')' | '(' expr ')' | '-' base
//   func   := sin|cos|exp|ln|sqrt
// Whitespace is insignificant. Numbers are decimal with optional exponent.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace opgeom {

using Complex = std::complex<double>;
using Point4 = std::array<double, 4>;     // chart coordinates x^1..x^4
using Covector4 = std::array<double, 4>;  // momentum p_1..p_4

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " at byte " + std::to_string(off)), offset(off) {}
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

enum class NodeKind : unsigned char {
  Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Ln, Sqrt
};

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  NodeKind kind;
  Complex value{};       // Constant
  int var = 0;           // Variable index 0..3
  int expo = 0;          // Pow exponent
  NodePtr a, b;
};

inline bool is_finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// Treat a complex scalar as "numerically real" for branch-cut checks.
inline bool is_real(Complex z) {
  return std::abs(z.imag()) <= 1e-14 * (1.0 + std::abs(z.real()));
}

}  // namespace detail

// Keyed by owning pointers: cached subtrees stay alive for the cache's
// lifetime, so heap-address reuse can never resurrect a stale entry.
using EvalCache = std::unordered_map<detail::NodePtr, Complex>;

// Immutable scalar-field expression. Smart constructors fold constants and
// normalize trivial identities (0+e, 1*e, neg(neg e), mul-of-neg) so that
// derivative output stays readable and structural comparisons are stable.
class Expr {
 public:
  Expr() : n_(make_const(0.0)) {}

  static Expr constant(Complex c) { return Expr(make_const(c)); }
  static Expr constant(double c) { return Expr(make_const(Complex(c, 0.0))); }
  static Expr imaginary_unit() { return Expr(make_const(Complex(0.0, 1.0))); }
  static Expr variable(int idx) {
    if (idx < 0 || idx > 3) throw std::invalid_argument("variable index must be 0..3");
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = detail::NodeKind::Variable;
    n->var = idx;
    return Expr(std::move(n));
  }

  static Expr parse(std::string_view text);

  friend Expr operator+(const Expr& x, const Expr& y) { return Expr(fold_add(x.n_, y.n_)); }
  friend Expr operator-(const Expr& x, const Expr& y) { return Expr(fold_sub(x.n_, y.n_)); }
  friend Expr operator*(const Expr& x, const Expr& y) { return Expr(fold_mul(x.n_, y.n_)); }
  friend Expr operator/(const Expr& x, const Expr& y) { return Expr(fold_div(x.n_, y.n_)); }
  friend Expr operator-(const Expr& x) { return Expr(fold_neg(x.n_)); }
  Expr pow(int k) const { return Expr(fold_pow(n_, k)); }

  friend Expr sin(const Expr& x) { return Expr(fold_fn(detail::NodeKind::Sin, x.n_)); }
  friend Expr cos(const Expr& x) { return Expr(fold_fn(detail::NodeKind::Cos, x.n_)); }
  friend Expr exp(const Expr& x) { return Expr(fold_fn(detail::NodeKind::Exp, x.n_)); }
  friend Expr ln(const Expr& x) { return Expr(fold_fn(detail::NodeKind::Ln, x.n_)); }
  friend Expr sqrt(const Expr& x) { return Expr(fold_fn(detail::NodeKind::Sqrt, x.n_)); }

  Complex eval(const Point4& x) const {
    EvalCache cache;
    return eval(x, cache);
  }
  Complex eval(const Point4& x, EvalCache& cache) const { return eval_node(n_, x, cache); }

  // Exact partial derivative d/dx^alpha (alpha in 0..3).
  Expr derivative(int alpha) const {
    std::unordered_map<const detail::ExprNode*, detail::NodePtr> memo;
    return Expr(deriv_node(n_, alpha, memo));
  }

  // Complex conjugate as a field over real coordinates: conjugates constants,
  // maps through every other node.
  Expr conjugate() const {
    std::unordered_map<const detail::ExprNode*, detail::NodePtr> memo;
    return Expr(conj_node(n_, memo));
  }

  bool is_constant() const { return n_->kind == detail::NodeKind::Constant; }
  Complex constant_value() const { return n_->value; }

  std::string str() const {
    std::string out;
    print_node(n_.get(), out, Ctx::Term);
    return out;
  }

  bool same_structure(const Expr& other) const { return same_node(n_.get(), other.n_.get()); }

  const detail::ExprNode* raw() const { return n_.get(); }

 private:
  explicit Expr(detail::NodePtr n) : n_(std::move(n)) {}
  detail::NodePtr n_;

  using NodeKind = detail::NodeKind;
  using NodePtr = detail::NodePtr;
  using Node = detail::ExprNode;

  static NodePtr make_const(Complex c) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = c;
    return n;
  }
  static NodePtr make_bin(NodeKind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
  static NodePtr make_un(NodeKind k, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    return n;
  }

  static bool is_const(const NodePtr& n, Complex c) {
    return n->kind == NodeKind::Constant && n->value == c;
  }

  static NodePtr fold_add(const NodePtr& x, const NodePtr& y) {
    if (x->kind == NodeKind::Constant && y->kind == NodeKind::Constant) {
      Complex v = x->value + y->value;
      if (detail::is_finite(v)) return make_const(v);
    }
    if (is_const(x, 0.0)) return y;
    if (is_const(y, 0.0)) return x;
    return make_bin(NodeKind::Add, x, y);
  }
  static NodePtr fold_sub(const NodePtr& x, const NodePtr& y) {
    if (x->kind == NodeKind::Constant && y->kind == NodeKind::Constant) {
      Complex v = x->value - y->value;
      if (detail::is_finite(v)) return make_const(v);
    }
    if (is_const(y, 0.0)) return x;
    if (is_const(x, 0.0)) return fold_neg(y);
    return make_bin(NodeKind::Sub, x, y);
  }
  static NodePtr fold_mul(const NodePtr& x, const NodePtr& y) {
    if (x->kind == NodeKind::Constant && y->kind == NodeKind::Constant) {
      Complex v = x->value * y->value;
      if (detail::is_finite(v)) return make_const(v);
    }
    if (is_const(x, 0.0) || is_const(y, 0.0)) return make_const(0.0);
    if (is_const(x, 1.0)) return y;
    if (is_const(y, 1.0)) return x;
    if (x->kind == NodeKind::Neg) return fold_neg(fold_mul(x->a, y));
    if (y->kind == NodeKind::Neg) return fold_neg(fold_mul(x, y->a));
    return make_bin(NodeKind::Mul, x, y);
  }
  static NodePtr fold_div(const NodePtr& x, const NodePtr& y) {
    if (x->kind == NodeKind::Constant && y->kind == NodeKind::Constant &&
        std::abs(y->value) > 0.0) {
      Complex v = x->value / y->value;
      if (detail::is_finite(v)) return make_const(v);
    }
    if (is_const(y, 1.0)) return x;
    if (x->kind == NodeKind::Neg) return fold_neg(fold_div(x->a, y));
    if (y->kind == NodeKind::Neg) return fold_neg(fold_div(x, y->a));
    return make_bin(NodeKind::Div, x, y);
  }
  static NodePtr fold_neg(const NodePtr& x) {
    if (x->kind == NodeKind::Constant) return make_const(-x->value);
    if (x->kind == NodeKind::Neg) return x->a;
    return make_un(NodeKind::Neg, x);
  }
  static NodePtr fold_pow(const NodePtr& x, int k) {
    if (k == 0) return make_const(1.0);
    if (k == 1) return x;
    if (x->kind == NodeKind::Constant) {
      Complex v = int_pow(x->value, k);
      if (detail::is_finite(v)) return make_const(v);
    }
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Pow;
    n->a = x;
    n->expo = k;
    return n;
  }
  static NodePtr fold_fn(NodeKind k, const NodePtr& x) {
    if (x->kind == NodeKind::Constant) {
      Complex v;
      bool ok = true;
      switch (k) {
        case NodeKind::Sin: v = std::sin(x->value); break;
        case NodeKind::Cos: v = std::cos(x->value); break;
        case NodeKind::Exp: v = std::exp(x->value); break;
        case NodeKind::Ln:
          ok = !(detail::is_real(x->value) && x->value.real() <= 0.0);
          if (ok) v = std::log(x->value);
          break;
        case NodeKind::Sqrt:
          ok = !(detail::is_real(x->value) && x->value.real() < 0.0);
          if (ok) v = std::sqrt(x->value);
          break;
        default: ok = false; break;
      }
      if (ok && detail::is_finite(v)) return make_const(v);
    }
    return make_un(k, x);
  }

  static Complex int_pow(Complex z, int k) {
    if (k < 0) {
      if (std::abs(z) == 0.0) return Complex(NAN, NAN);
      return 1.0 / int_pow(z, -k);
    }
    Complex r = 1.0;
    Complex base = z;
    unsigned e = static_cast<unsigned>(k);
    while (e) {
      if (e & 1u) r *= base;
      base *= base;
      e >>= 1u;
    }
    return r;
  }

  static Complex eval_node(const NodePtr& n, const Point4& x, EvalCache& cache);
  static NodePtr deriv_node(const NodePtr& n, int alpha,
                            std::unordered_map<const Node*, NodePtr>& memo);
  static NodePtr conj_node(const NodePtr& n, std::unordered_map<const Node*, NodePtr>& memo);
  static bool same_node(const Node* x, const Node* y);

  // Printing context: Term = anywhere an expr may stand; MulLeft needs a
  // term-level operand; MulRight/factor-level; Base = grammar 'base' slot.
  enum class Ctx { Term, AddRight, MulLeft, MulRight, Base };
  static void print_node(const Node* n, std::string& out, Ctx ctx);
  static void print_number(double v, std::string& out);
  static int node_level(const Node* n);  // 1 add/sub, 2 mul/div, 3 pow, 4 base

  friend bool linearly_equivalent(const Expr& a, const Expr& b);
};

// --------------------------------------------------------------------------
// evaluation

inline Complex Expr::eval_node(const NodePtr& n, const Point4& x, EvalCache& cache) {
  using detail::NodeKind;
  switch (n->kind) {
    case NodeKind::Constant: return n->value;
    case NodeKind::Variable: return Complex(x[static_cast<std::size_t>(n->var)], 0.0);
    default: break;
  }
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Complex r;
  switch (n->kind) {
    case NodeKind::Add: r = eval_node(n->a, x, cache) + eval_node(n->b, x, cache); break;
    case NodeKind::Sub: r = eval_node(n->a, x, cache) - eval_node(n->b, x, cache); break;
    case NodeKind::Mul: r = eval_node(n->a, x, cache) * eval_node(n->b, x, cache); break;
    case NodeKind::Div: {
      Complex num = eval_node(n->a, x, cache);
      Complex den = eval_node(n->b, x, cache);
      if (std::abs(den) < 1e-300) throw EvalError("division by zero");
      r = num / den;
      break;
    }
    case NodeKind::Pow: {
      Complex base = eval_node(n->a, x, cache);
      if (n->expo < 0 && std::abs(base) < 1e-300) throw EvalError("zero raised to negative power");
      r = int_pow(base, n->expo);
      break;
    }
    case NodeKind::Neg: r = -eval_node(n->a, x, cache); break;
    case NodeKind::Sin: r = std::sin(eval_node(n->a, x, cache)); break;
    case NodeKind::Cos: r = std::cos(eval_node(n->a, x, cache)); break;
    case NodeKind::Exp: r = std::exp(eval_node(n->a, x, cache)); break;
    case NodeKind::Ln: {
      Complex z = eval_node(n->a, x, cache);
      if (detail::is_real(z) && z.real() <= 0.0) throw EvalError("ln of non-positive real");
      r = std::log(z);
      break;
    }
    case NodeKind::Sqrt: {
      Complex z = eval_node(n->a, x, cache);
      if (detail::is_real(z) && z.real() < 0.0) throw EvalError("sqrt of negative real");
      r = std::sqrt(z);
      break;
    }
    default: throw EvalError("corrupt expression node");
  }
  if (!detail::is_finite(r)) throw EvalError("non-finite value in evaluation");
  cache.emplace(n, r);
  return r;
}

// --------------------------------------------------------------------------
// differentiation

inline Expr::NodePtr Expr::deriv_node(const NodePtr& n, int alpha,
                                      std::unordered_map<const Node*, NodePtr>& memo) {
  using detail::NodeKind;
  auto it = memo.find(n.get());
  if (it != memo.end()) return it->second;
  NodePtr r;
  switch (n->kind) {
    case NodeKind::Constant: r = make_const(0.0); break;
    case NodeKind::Variable: r = make_const(n->var == alpha ? 1.0 : 0.0); break;
    case NodeKind::Add: r = fold_add(deriv_node(n->a, alpha, memo), deriv_node(n->b, alpha, memo)); break;
    case NodeKind::Sub: r = fold_sub(deriv_node(n->a, alpha, memo), deriv_node(n->b, alpha, memo)); break;
    case NodeKind::Mul:
      r = fold_add(fold_mul(deriv_node(n->a, alpha, memo), n->b),
                   fold_mul(n->a, deriv_node(n->b, alpha, memo)));
      break;
    case NodeKind::Div:
      r = fold_div(fold_sub(fold_mul(deriv_node(n->a, alpha, memo), n->b),
                            fold_mul(n->a, deriv_node(n->b, alpha, memo))),
                   fold_pow(n->b, 2));
      break;
    case NodeKind::Pow:
      r = fold_mul(fold_mul(make_const(static_cast<double>(n->expo)), fold_pow(n->a, n->expo - 1)),
                   deriv_node(n->a, alpha, memo));
      break;
    case NodeKind::Neg: r = fold_neg(deriv_node(n->a, alpha, memo)); break;
    case NodeKind::Sin: r = fold_mul(fold_fn(NodeKind::Cos, n->a), deriv_node(n->a, alpha, memo)); break;
    case NodeKind::Cos:
      r = fold_neg(fold_mul(fold_fn(NodeKind::Sin, n->a), deriv_node(n->a, alpha, memo)));
      break;
    case NodeKind::Exp: r = fold_mul(fold_fn(NodeKind::Exp, n->a), deriv_node(n->a, alpha, memo)); break;
    case NodeKind::Ln: r = fold_div(deriv_node(n->a, alpha, memo), n->a); break;
    case NodeKind::Sqrt:
      r = fold_div(deriv_node(n->a, alpha, memo),
                   fold_mul(make_const(2.0), fold_fn(NodeKind::Sqrt, n->a)));
      break;
  }
  memo.emplace(n.get(), r);
  return r;
}

inline Expr::NodePtr Expr::conj_node(const NodePtr& n,
                                     std::unordered_map<const Node*, NodePtr>& memo) {
  using detail::NodeKind;
  auto it = memo.find(n.get());
  if (it != memo.end()) return it->second;
  NodePtr r;
  switch (n->kind) {
    case NodeKind::Constant: r = make_const(std::conj(n->value)); break;
    case NodeKind::Variable: r = n; break;
    case NodeKind::Add: r = fold_add(conj_node(n->a, memo), conj_node(n->b, memo)); break;
    case NodeKind::Sub: r = fold_sub(conj_node(n->a, memo), conj_node(n->b, memo)); break;
    case NodeKind::Mul: r = fold_mul(conj_node(n->a, memo), conj_node(n->b, memo)); break;
    case NodeKind::Div: r = fold_div(conj_node(n->a, memo), conj_node(n->b, memo)); break;
    case NodeKind::Pow: r = fold_pow(conj_node(n->a, memo), n->expo); break;
    case NodeKind::Neg: r = fold_neg(conj_node(n->a, memo)); break;
    default: r = fold_fn(n->kind, conj_node(n->a, memo)); break;
  }
  memo.emplace(n.get(), r);
  return r;
}

inline bool Expr::same_node(const Node* x, const Node* y) {
  if (x == y) return true;
  if (x->kind != y->kind) return false;
  using detail::NodeKind;
  switch (x->kind) {
    case NodeKind::Constant: return x->value == y->value;
    case NodeKind::Variable: return x->var == y->var;
    case NodeKind::Pow: return x->expo == y->expo && same_node(x->a.get(), y->a.get());
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      return same_node(x->a.get(), y->a.get()) && same_node(x->b.get(), y->b.get());
    default: return same_node(x->a.get(), y->a.get());
  }
}

// --------------------------------------------------------------------------
// printing

inline int Expr::node_level(const Node* n) {
  using detail::NodeKind;
  switch (n->kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Pow: return 3;
    case NodeKind::Constant: {
      Complex c = n->value;
      if (c.imag() == 0.0) return 4;
      if (c.real() == 0.0 && (c.imag() == 1.0 || c.imag() == -1.0)) return 4;
      if (c.real() == 0.0) return 2;  // printed as b*i
      return 4;                       // printed parenthesized
    }
    default: return 4;
  }
}

inline void Expr::print_number(double v, std::string& out) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline void Expr::print_node(const Node* n, std::string& out, Ctx ctx) {
  using detail::NodeKind;
  const int lvl = node_level(n);
  bool need_paren = false;
  switch (ctx) {
    case Ctx::Term: need_paren = false; break;
    case Ctx::AddRight: need_paren = lvl <= 1; break;
    case Ctx::MulLeft: need_paren = lvl < 2; break;
    case Ctx::MulRight: need_paren = lvl < 3; break;
    case Ctx::Base: need_paren = lvl < 4 && n->kind != NodeKind::Neg; break;
  }
  if (need_paren) out.push_back('(');
  switch (n->kind) {
    case NodeKind::Constant: {
      const Complex c = n->value;
      if (c.imag() == 0.0) {
        if (c.real() < 0.0 || std::signbit(c.real())) {
          out.push_back('-');
          print_number(-c.real(), out);
        } else {
          print_number(c.real(), out);
        }
      } else if (c.real() == 0.0) {
        if (c.imag() == 1.0) {
          out.push_back('i');
        } else if (c.imag() == -1.0) {
          out += "-i";
        } else if (c.imag() < 0.0) {
          out.push_back('-');
          print_number(-c.imag(), out);
          out += "*i";
        } else {
          print_number(c.imag(), out);
          out += "*i";
        }
      } else {
        out.push_back('(');
        if (c.real() < 0.0) {
          out.push_back('-');
          print_number(-c.real(), out);
        } else {
          print_number(c.real(), out);
        }
        if (c.imag() < 0.0) {
          out.push_back('-');
          print_number(-c.imag(), out);
        } else {
          out.push_back('+');
          print_number(c.imag(), out);
        }
        out += "*i";
        out.push_back(')');
      }
      break;
    }
    case NodeKind::Variable:
      out.push_back('x');
      out.push_back(static_cast<char>('1' + n->var));
      break;
    case NodeKind::Add:
      print_node(n->a.get(), out, Ctx::Term);
      out.push_back('+');
      print_node(n->b.get(), out, Ctx::AddRight);
      break;
    case NodeKind::Sub:
      print_node(n->a.get(), out, Ctx::Term);
      out.push_back('-');
      print_node(n->b.get(), out, Ctx::AddRight);
      break;
    case NodeKind::Mul:
      print_node(n->a.get(), out, Ctx::MulLeft);
      out.push_back('*');
      print_node(n->b.get(), out, Ctx::MulRight);
      break;
    case NodeKind::Div:
      print_node(n->a.get(), out, Ctx::MulLeft);
      out.push_back('/');
      print_node(n->b.get(), out, Ctx::MulRight);
      break;
    case NodeKind::Pow:
      print_node(n->a.get(), out, Ctx::Base);
      out.push_back('^');
      out += std::to_string(n->expo);
      break;
    case NodeKind::Neg:
      out.push_back('-');
      print_node(n->a.get(), out, Ctx::Base);
      break;
    case NodeKind::Sin: out += "sin("; print_node(n->a.get(), out, Ctx::Term); out.push_back(')'); break;
    case NodeKind::Cos: out += "cos("; print_node(n->a.get(), out, Ctx::Term); out.push_back(')'); break;
    case NodeKind::Exp: out += "exp("; print_node(n->a.get(), out, Ctx::Term); out.push_back(')'); break;
    case NodeKind::Ln: out += "ln("; print_node(n->a.get(), out, Ctx::Term); out.push_back(')'); break;
    case NodeKind::Sqrt: out += "sqrt("; print_node(n->a.get(), out, Ctx::Term); out.push_back(')'); break;
  }
  if (need_paren) out.push_back(')');
}

// --------------------------------------------------------------------------
// parsing

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr run() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }
  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "' " + what, pos_);
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (accept('+')) e = e + parse_term();
      else if (accept('-')) e = e - parse_term();
      else return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    for (;;) {
      if (accept('*')) e = e * parse_factor();
      else if (accept('/')) e = e / parse_factor();
      else return e;
    }
  }

  Expr parse_factor() {
    Expr e = parse_base();
    if (accept('^')) return e.pow(parse_int_exponent());
    return e;
  }

  int parse_int_exponent() {
    skip_ws();
    bool negative = false;
    if (pos_ < text_.size() && text_[pos_] == '-') {
      negative = true;
      ++pos_;
    }
    std::size_t start = pos_;
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      throw ParseError("expected integer exponent", pos_);
    long v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + (text_[pos_] - '0');
      if (v > 1000000) throw ParseError("exponent too large", start);
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
      throw ParseError("expected integer exponent", start);
    return static_cast<int>(negative ? -v : v);
  }

  Expr parse_base() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return -parse_base();
    }
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      expect(')', "to close parenthesis");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) pos_ = mark;
      else
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
      throw ParseError("malformed number", start);
    return Expr::constant(v);
  }

  Expr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_'))
      ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);
    if (name == "i") return Expr::imaginary_unit();
    if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '4')
      return Expr::variable(name[1] - '1');
    if (name == "sin" || name == "cos" || name == "exp" || name == "ln" || name == "sqrt") {
      expect('(', "after function name");
      Expr arg = parse_expr();
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ',')
        throw ParseError("arity mismatch: '" + std::string(name) + "' takes exactly one argument",
                         pos_);
      expect(')', "to close function argument");
      if (name == "sin") return sin(arg);
      if (name == "cos") return cos(arg);
      if (name == "exp") return exp(arg);
      if (name == "ln") return ln(arg);
      return sqrt(arg);
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }
};

}  // namespace detail

inline Expr Expr::parse(std::string_view text) { return detail::Parser(text).run(); }

// --------------------------------------------------------------------------
// linear flatten/cancel comparison: splits both expressions into signed
// top-level sum terms (pulling constant factors out of products), cancels,
// and compares what is left. Used for identities such as (L*)* = L where the
// adjoint formula introduces pairs of terms that cancel linearly.

inline bool linearly_equivalent(const Expr& a, const Expr& b) {
  using detail::NodeKind;
  using Node = detail::ExprNode;
  std::map<std::string, Complex> acc;
  auto collect = [&acc](const Node* n, Complex coeff, auto&& self) -> void {
    switch (n->kind) {
      case NodeKind::Add:
        self(n->a.get(), coeff, self);
        self(n->b.get(), coeff, self);
        return;
      case NodeKind::Sub:
        self(n->a.get(), coeff, self);
        self(n->b.get(), -coeff, self);
        return;
      case NodeKind::Neg: self(n->a.get(), -coeff, self); return;
      case NodeKind::Constant: acc["1"] += coeff * n->value; return;
      case NodeKind::Mul:
        if (n->a->kind == NodeKind::Constant) {
          self(n->b.get(), coeff * n->a->value, self);
          return;
        }
        if (n->b->kind == NodeKind::Constant) {
          self(n->a.get(), coeff * n->b->value, self);
          return;
        }
        break;
      default: break;
    }
    std::string key;
    Expr::print_node(n, key, Expr::Ctx::Term);
    acc[key] += coeff;
  };
  collect(a.raw(), Complex(1.0), collect);
  collect(b.raw(), Complex(-1.0), collect);
  for (const auto& [key, coeff] : acc)
    if (std::abs(coeff) != 0.0) return false;
  return true;
}

// --------------------------------------------------------------------------
// finite-difference oracle

inline double default_fd_step(const Point4& x, int alpha) {
  return 1e-4 * (1.0 + std::abs(x[static_cast<std::size_t>(alpha)]));
}

// Central difference with one Richardson extrapolation step (h, h/2).
inline Complex numeric_partial(const Expr& f, const Point4& x, int alpha, double h) {
  auto central = [&](double step) {
    Point4 xp = x, xm = x;
    xp[static_cast<std::size_t>(alpha)] += step;
    xm[static_cast<std::size_t>(alpha)] -= step;
    return (f.eval(xp) - f.eval(xm)) / (2.0 * step);
  };
  Complex d1 = central(h);
  Complex d2 = central(h / 2.0);
  return (4.0 * d2 - d1) / 3.0;
}

inline Complex numeric_partial(const Expr& f, const Point4& x, int alpha) {
  return numeric_partial(f, x, alpha, default_fd_step(x, alpha));
}

// --------------------------------------------------------------------------
// chart box and deterministic sampling

struct ChartBox {
  Point4 lo{-1.0, -1.0, -1.0, -1.0};
  Point4 hi{1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 1234;
  int sample_count = 200;

  void validate() const {
    for (int a = 0; a < 4; ++a) {
      if (!(lo[a] < hi[a])) throw ValidationError("chart box needs lo < hi componentwise");
      if (!std::isfinite(lo[a]) || !std::isfinite(hi[a]))
        throw ValidationError("chart box bounds must be finite");
    }
    if (sample_count < 1) throw ValidationError("chart box sample_count must be >= 1");
  }

  bool contains(const Point4& x) const {
    for (int a = 0; a < 4; ++a)
      if (x[a] < lo[a] || x[a] > hi[a]) return false;
    return true;
  }
};

// mt19937_64 with an explicit uint64 -> [0,1) map so streams are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  Point4 point_in(const ChartBox& box) {
    Point4 x;
    for (int a = 0; a < 4; ++a) x[a] = uniform(box.lo[a], box.hi[a]);
    return x;
  }

  // Interior point: stays clear of the boundary so finite-difference stencils
  // remain inside the box.
  Point4 interior_point_in(const ChartBox& box, double margin = 0.05) {
    Point4 x;
    for (int a = 0; a < 4; ++a) {
      double pad = margin * (box.hi[a] - box.lo[a]);
      x[a] = uniform(box.lo[a] + pad, box.hi[a] - pad);
    }
    return x;
  }

  Covector4 covector(double scale = 1.0) {
    Covector4 p;
    for (int a = 0; a < 4; ++a) p[a] = uniform(-scale, scale);
    return p;
  }

 private:
  std::mt19937_64 gen_;
};

// Rejects expressions whose evaluation fails or is non-finite somewhere in
// the box (division/ln/sqrt domain violations surface here).
inline void validate_field(const Expr& f, const ChartBox& box) {
  Rng rng(box.seed);
  const int n = std::max(box.sample_count, 16);
  for (int i = 0; i < n; ++i) {
    Point4 x = rng.point_in(box);
    try {
      (void)f.eval(x);
    } catch (const EvalError& err) {
      throw ValidationError(std::string("field invalid in chart box: ") + err.what() +
                            " (expression: " + f.str() + ")");
    }
  }
}

}  // namespace opgeom
