// First-order 2x2 operators L = P^a(x) d/dx^a + Q(x) over a chart with
// density rho: full / principal / subprincipal symbols, formal adjoint,
// application to test fields and sampled self-adjointness / non-degeneracy
// checks.

#pragma once

#include <array>
#include <string>

#include "opgeom/geometry.hpp"

namespace opgeom {

struct RawOperator {
  std::array<MatrixField2, 4> P;
  MatrixField2 Q;
  Expr rho = Expr::constant(1.0);
};

// sigma^alpha = i P^alpha as symbolic fields.
inline SigmaField sigma_fields(const RawOperator& op) {
  SigmaField s;
  const Expr iu = Expr::imaginary_unit();
  for (int a = 0; a < 4; ++a) s[a] = iu * op.P[a];
  return s;
}

inline std::array<Mat2, 4> sigma_at(const RawOperator& op, const Point4& x) {
  EvalCache cache;
  std::array<Mat2, 4> s;
  for (int a = 0; a < 4; ++a) s[a] = Complex(0.0, 1.0) * op.P[a].eval(x, cache);
  return s;
}

// L(x,p) = i P^a(x) p_a + Q(x)
inline Mat2 full_symbol(const RawOperator& op, const Point4& x, const Covector4& p) {
  EvalCache cache;
  Mat2 r = op.Q.eval(x, cache);
  for (int a = 0; a < 4; ++a) r = r + (Complex(0.0, 1.0) * p[a]) * op.P[a].eval(x, cache);
  return r;
}

inline Mat2 principal_symbol(const RawOperator& op, const Point4& x, const Covector4& p) {
  EvalCache cache;
  Mat2 r;
  for (int a = 0; a < 4; ++a) r = r + (Complex(0.0, 1.0) * p[a]) * op.P[a].eval(x, cache);
  return r;
}

// L_sub = Q - 1/2 (P^a)_{x^a} - 1/2 P^a (ln rho)_{x^a}
inline Mat2 subprincipal_symbol(const RawOperator& op, const Point4& x) {
  EvalCache cache;
  Mat2 r = op.Q.eval(x, cache);
  Expr lnrho = ln(op.rho);
  for (int a = 0; a < 4; ++a) {
    r = r - 0.5 * op.P[a].partial(a).eval(x, cache);
    Complex dlr = lnrho.derivative(a).eval(x, cache);
    r = r - (0.5 * dlr) * op.P[a].eval(x, cache);
  }
  return r;
}

// L* = -(P^a)* d/dx^a + Q* - [(P^a)*]_{x^a} - (P^a)*(ln rho)_{x^a}
inline RawOperator formal_adjoint(const RawOperator& op) {
  RawOperator adj;
  adj.rho = op.rho;
  MatrixField2 q = op.Q.dagger();
  Expr lnrho = ln(op.rho);
  for (int a = 0; a < 4; ++a) {
    MatrixField2 pdag = op.P[a].dagger();
    adj.P[a] = -pdag;
    q = q - pdag.partial(a) - lnrho.derivative(a) * pdag;
  }
  adj.Q = q;
  return adj;
}

// Lv = P^a (dv/dx^a) + Q v, derivatives symbolic.
inline std::array<Complex, 2> apply(const RawOperator& op, const std::array<Expr, 2>& v,
                                    const Point4& x) {
  EvalCache cache;
  std::array<Complex, 2> r{};
  std::array<Complex, 2> vx{v[0].eval(x, cache), v[1].eval(x, cache)};
  auto qv = op.Q.eval(x, cache).apply(vx);
  r[0] += qv[0];
  r[1] += qv[1];
  for (int a = 0; a < 4; ++a) {
    std::array<Complex, 2> dv{v[0].derivative(a).eval(x, cache),
                              v[1].derivative(a).eval(x, cache)};
    auto pv = op.P[a].eval(x, cache).apply(dv);
    r[0] += pv[0];
    r[1] += pv[1];
  }
  return r;
}

// Similarity transform c L c^{-1} by a scalar field c, at coefficient level:
// P unchanged, Q -> Q - P^a c_{x^a}/c.
inline RawOperator conjugate_by_scalar(const RawOperator& op, const Expr& c) {
  RawOperator r = op;
  MatrixField2 q = op.Q;
  for (int a = 0; a < 4; ++a) q = q - (c.derivative(a) / c) * op.P[a];
  r.Q = q;
  return r;
}

// ---------------------------------------------------------------------------
// sampled residual checks

struct CheckReport {
  bool pass = false;
  double max_residual = 0.0;   // Hermiticity defect (self-adjointness check)
  double min_abs_det_e = 0.0;  // frame determinant (non-degeneracy check)
  Point4 worst_x{};
  std::string detail;
};

inline CheckReport check_selfadjoint(const RawOperator& op, const ChartBox& box) {
  CheckReport rep;
  Rng rng(box.seed);
  for (int k = 0; k < box.sample_count; ++k) {
    Point4 x = rng.point_in(box);
    Covector4 p = rng.covector();
    double r = principal_symbol(op, x, p).hermiticity_residual();
    r = std::max(r, subprincipal_symbol(op, x).hermiticity_residual());
    if (r > rep.max_residual) {
      rep.max_residual = r;
      rep.worst_x = x;
    }
  }
  rep.pass = rep.max_residual <= kTolHerm;
  rep.detail = "sampled Hermiticity of principal and subprincipal symbols";
  return rep;
}

inline CheckReport check_nondegenerate(const RawOperator& op, const ChartBox& box) {
  CheckReport rep;
  rep.min_abs_det_e = std::numeric_limits<double>::infinity();
  Rng rng(box.seed);
  SigmaField sig = sigma_fields(op);
  for (int k = 0; k < box.sample_count; ++k) {
    Point4 x = rng.point_in(box);
    std::array<Mat2, 4> s = eval_fields(sig, x);
    Mat4r e{};
    for (int a = 0; a < 4; ++a) {
      e[0][a] = s[a](1, 0).real();
      e[1][a] = s[a](1, 0).imag();
      e[2][a] = 0.5 * (s[a](0, 0) - s[a](1, 1)).real();
      e[3][a] = 0.5 * s[a].trace().real();
    }
    double d = std::abs(mat4_det(e));
    if (d < rep.min_abs_det_e) {
      rep.min_abs_det_e = d;
      rep.worst_x = x;
    }
  }
  rep.pass = rep.min_abs_det_e >= kTolDegenerate;
  rep.detail = "sampled |det e_j^a| of the frame encoded in the principal symbol";
  return rep;
}

}  // namespace opgeom
