// 2x2 matrix-valued fields with expression entries, plus symbolic matrix
// algebra (products, conjugate transpose, adjugate, entrywise derivatives).

#pragma once

#include <array>

#include "opgeom/expr.hpp"
#include "opgeom/smallmat.hpp"

namespace opgeom {

struct MatrixField2 {
  // row-major expression entries
  std::array<Expr, 4> e{};

  Expr& operator()(int r, int c) { return e[static_cast<std::size_t>(2 * r + c)]; }
  const Expr& operator()(int r, int c) const { return e[static_cast<std::size_t>(2 * r + c)]; }

  static MatrixField2 zero() { return MatrixField2{}; }
  static MatrixField2 identity() {
    MatrixField2 f;
    f(0, 0) = Expr::constant(1.0);
    f(1, 1) = Expr::constant(1.0);
    return f;
  }
  static MatrixField2 constant(const Mat2& m) {
    MatrixField2 f;
    for (int k = 0; k < 4; ++k) f.e[k] = Expr::constant(m.m[k]);
    return f;
  }
  static MatrixField2 scalar(const Expr& s) {
    MatrixField2 f;
    f(0, 0) = s;
    f(1, 1) = s;
    return f;
  }

  Mat2 eval(const Point4& x) const {
    EvalCache cache;
    return eval(x, cache);
  }
  Mat2 eval(const Point4& x, EvalCache& cache) const {
    Mat2 m;
    for (int k = 0; k < 4; ++k) m.m[k] = e[k].eval(x, cache);
    return m;
  }

  MatrixField2 partial(int alpha) const {
    MatrixField2 f;
    for (int k = 0; k < 4; ++k) f.e[k] = e[k].derivative(alpha);
    return f;
  }

  MatrixField2 dagger() const {
    MatrixField2 f;
    f(0, 0) = (*this)(0, 0).conjugate();
    f(0, 1) = (*this)(1, 0).conjugate();
    f(1, 0) = (*this)(0, 1).conjugate();
    f(1, 1) = (*this)(1, 1).conjugate();
    return f;
  }

  MatrixField2 adjugate() const {
    MatrixField2 f;
    f(0, 0) = (*this)(1, 1);
    f(0, 1) = -(*this)(0, 1);
    f(1, 0) = -(*this)(1, 0);
    f(1, 1) = (*this)(0, 0);
    return f;
  }

  Expr det() const { return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0); }
  Expr trace() const { return (*this)(0, 0) + (*this)(1, 1); }

  friend MatrixField2 operator+(const MatrixField2& a, const MatrixField2& b) {
    MatrixField2 f;
    for (int k = 0; k < 4; ++k) f.e[k] = a.e[k] + b.e[k];
    return f;
  }
  friend MatrixField2 operator-(const MatrixField2& a, const MatrixField2& b) {
    MatrixField2 f;
    for (int k = 0; k < 4; ++k) f.e[k] = a.e[k] - b.e[k];
    return f;
  }
  friend MatrixField2 operator-(const MatrixField2& a) {
    MatrixField2 f;
    for (int k = 0; k < 4; ++k) f.e[k] = -a.e[k];
    return f;
  }
  friend MatrixField2 operator*(const MatrixField2& a, const MatrixField2& b) {
    MatrixField2 f;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) f(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
    return f;
  }
  friend MatrixField2 operator*(const Expr& s, const MatrixField2& a) {
    MatrixField2 f;
    for (int k = 0; k < 4; ++k) f.e[k] = s * a.e[k];
    return f;
  }
  friend MatrixField2 operator*(Complex s, const MatrixField2& a) {
    return Expr::constant(s) * a;
  }
};

// Quartet of matrix fields sigma^alpha(x); the coefficient of p_alpha in a
// p-linear symbol.
using SigmaField = std::array<MatrixField2, 4>;

inline SigmaField adjugate_fields(const SigmaField& sigma) {
  SigmaField t;
  for (int a = 0; a < 4; ++a) t[a] = sigma[a].adjugate();
  return t;
}

inline std::array<Mat2, 4> eval_fields(const SigmaField& sigma, const Point4& x,
                                       EvalCache& cache) {
  std::array<Mat2, 4> m;
  for (int a = 0; a < 4; ++a) m[a] = sigma[a].eval(x, cache);
  return m;
}

inline std::array<Mat2, 4> eval_fields(const SigmaField& sigma, const Point4& x) {
  EvalCache cache;
  return eval_fields(sigma, x, cache);
}

// Evaluate a p-linear symbol at (x, p).
inline Mat2 eval_linear_symbol(const SigmaField& sigma, const Point4& x, const Covector4& p,
                               EvalCache& cache) {
  Mat2 r;
  for (int a = 0; a < 4; ++a) r = r + p[a] * sigma[a].eval(x, cache);
  return r;
}

inline Mat2 eval_linear_symbol(const SigmaField& sigma, const Point4& x, const Covector4& p) {
  EvalCache cache;
  return eval_linear_symbol(sigma, x, p, cache);
}

// Minkowski sigma fields: the standard basis as constant fields.
inline SigmaField standard_sigma_fields() {
  SigmaField s;
  for (int a = 0; a < 4; ++a) s[a] = MatrixField2::constant(pauli_basis()[a]);
  return s;
}

inline double max_hermiticity_residual(const SigmaField& sigma, const Point4& x) {
  EvalCache cache;
  double r = 0.0;
  for (int a = 0; a < 4; ++a) r = std::max(r, sigma[a].eval(x, cache).hermiticity_residual());
  return r;
}

}  // namespace opgeom
