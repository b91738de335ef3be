// Gauge transformations of 2x2 first-order operators, the map f built from
// the generalised Poisson bracket, the covariant subprincipal symbol, the
// electromagnetic covector potential and the associated covariance residuals.

#pragma once

#include <optional>
#include <utility>

#include "opgeom/operator_core.hpp"

namespace opgeom {

inline constexpr double kTolSl2c = 1e-10;

// ---------------------------------------------------------------------------
// gauge fields

struct GaugeField {
  enum class Kind { ScalarPsi, PhasePhi, Sl2cR, Gl2cQ };
  Kind kind = Kind::ScalarPsi;
  Expr scalar;       // psi or phi (real-valued)
  MatrixField2 mat;  // R or Q

  static GaugeField psi(Expr e) { return {Kind::ScalarPsi, std::move(e), {}}; }
  static GaugeField phi(Expr e) { return {Kind::PhasePhi, std::move(e), {}}; }
  static GaugeField sl2c(MatrixField2 r) { return {Kind::Sl2cR, {}, std::move(r)}; }
  static GaugeField gl2c(MatrixField2 q) { return {Kind::Gl2cQ, {}, std::move(q)}; }
};

// Conjugator G(x) with L |-> G* L G for each gauge kind.
inline MatrixField2 gauge_conjugator(const GaugeField& g) {
  switch (g.kind) {
    case GaugeField::Kind::ScalarPsi: return MatrixField2::scalar(exp(g.scalar));
    case GaugeField::Kind::PhasePhi:
      return MatrixField2::scalar(exp(Expr::imaginary_unit() * g.scalar));
    default: return g.mat;
  }
}

inline void validate_gauge(const GaugeField& g, const ChartBox& box) {
  Rng rng(box.seed);
  const int n = std::max(16, box.sample_count);
  for (int k = 0; k < n; ++k) {
    Point4 x = rng.point_in(box);
    switch (g.kind) {
      case GaugeField::Kind::ScalarPsi:
      case GaugeField::Kind::PhasePhi: {
        Complex v = g.scalar.eval(x);
        if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v.real())))
          throw ValidationError("gauge scalar field must be real-valued");
        break;
      }
      case GaugeField::Kind::Sl2cR: {
        Complex d = g.mat.eval(x).det();
        if (std::abs(d - Complex(1.0, 0.0)) > kTolSl2c)
          throw ValidationError("SL(2,C) gauge field must have det R = 1");
        break;
      }
      case GaugeField::Kind::Gl2cQ: {
        Complex d = g.mat.eval(x).det();
        if (std::abs(d) < kTolDegenerate)
          throw ValidationError("GL(2,C) gauge field must have det Q != 0");
        break;
      }
    }
  }
}

// L |-> G* L G at coefficient level via the product rule:
//   P'^a = G* P^a G,  Q' = G* (P^a G_{x^a}) + G* Q G
inline RawOperator gl_transform(const RawOperator& op, const GaugeField& g) {
  MatrixField2 G = gauge_conjugator(g);
  MatrixField2 Gd = G.dagger();
  RawOperator out;
  out.rho = op.rho;
  MatrixField2 q = Gd * (op.Q * G);
  for (int a = 0; a < 4; ++a) {
    out.P[a] = Gd * (op.P[a] * G);
    q = q + Gd * (op.P[a] * G.partial(a));
  }
  out.Q = q;
  return out;
}

// ---------------------------------------------------------------------------
// generalised Poisson bracket on first-order matrix symbols:
//   {F,G,H} = F_{x^a} G H_{p_a} - F_{p_a} G H_{x^a}

inline Mat2 poisson3(const SigmaField& F, const SigmaField& G, const SigmaField& H,
                     const Point4& x, const Covector4& p) {
  EvalCache cache;
  Mat2 Gxp = eval_linear_symbol(G, x, p, cache);
  Mat2 r;
  for (int a = 0; a < 4; ++a) {
    Mat2 dF, dH;
    for (int c = 0; c < 4; ++c) {
      dF = dF + p[c] * F[c].partial(a).eval(x, cache);
      dH = dH + p[c] * H[c].partial(a).eval(x, cache);
    }
    Mat2 Hp = H[a].eval(x, cache);
    Mat2 Fp = F[a].eval(x, cache);
    r = r + dF * Gxp * Hp - Fp * Gxp * dH;
  }
  return r;
}

// Finite-difference evaluation of the bracket (x-derivatives by central
// differences); oracle for the symbolic path.
inline Mat2 poisson3_fd(const SigmaField& F, const SigmaField& G, const SigmaField& H,
                        const Point4& x, const Covector4& p, double h) {
  auto sym_at = [&](const SigmaField& S, const Point4& xx) {
    return eval_linear_symbol(S, xx, p);
  };
  auto fd_x = [&](const SigmaField& S, int a) {
    Point4 xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    Mat2 d1 = (1.0 / (2.0 * h)) * (sym_at(S, xp) - sym_at(S, xm));
    Point4 xp2 = x, xm2 = x;
    xp2[a] += h / 2.0;
    xm2[a] -= h / 2.0;
    Mat2 d2 = (1.0 / h) * (sym_at(S, xp2) - sym_at(S, xm2));
    return (1.0 / 3.0) * (4.0 * d2 - d1);
  };
  Mat2 Gxp = sym_at(G, x);
  Mat2 r;
  for (int a = 0; a < 4; ++a) {
    r = r + fd_x(F, a) * Gxp * H[a].eval(x) - F[a].eval(x) * Gxp * fd_x(H, a);
  }
  return r;
}

// ---------------------------------------------------------------------------
// the map f
//
// f(L_prin) = -(i/16) g_{ab} {L_prin, adj L_prin, L_prin}_{p_a p_b}
//           = -(i/8) [ (sigma^a)_{x^c} tilde sigma_a sigma^c
//                      - sigma^c tilde sigma_a (sigma^a)_{x^c} ]
// (the reduced Pauli-matrix form; the raw bracket form is kept as the
// finite-difference oracle).

inline Mat2 f_at(const SigmaField& sigma, const Point4& x) {
  EvalCache cache;
  auto s = eval_fields(sigma, x, cache);
  Mat4r g_cov = metric_from_matrices(s).g_cov;
  std::array<Mat2, 4> tilde;
  for (int a = 0; a < 4; ++a) tilde[a] = s[a].adjugate();
  auto tilde_low = lower_index(tilde, g_cov);

  Mat2 acc;
  for (int a = 0; a < 4; ++a)
    for (int c = 0; c < 4; ++c) {
      Mat2 ds = sigma[a].partial(c).eval(x, cache);
      acc = acc + ds * tilde_low[a] * s[c] - s[c] * tilde_low[a] * ds;
    }
  return Complex(0.0, -0.125) * acc;
}

// Raw-bracket oracle: x-derivatives by central differences, the double
// p-derivative by second differences (exact, the bracket is quadratic in p).
inline Mat2 f_fd_oracle(const SigmaField& sigma, const Point4& x, double hx) {
  SigmaField tilde = adjugate_fields(sigma);
  Mat4r g_cov = metric_at(sigma, x).g_cov;
  const double hp = 0.5;
  const Covector4 p0{0.3, -0.2, 0.4, 0.7};
  auto bracket = [&](const Covector4& p) { return poisson3_fd(sigma, tilde, sigma, x, p, hx); };
  Mat2 acc;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      Covector4 pp = p0, pm = p0, pa = p0, pb = p0;
      pp[a] += hp;
      pp[b] += hp;
      pm[a] -= hp;
      pm[b] -= hp;
      pa[a] += hp;
      pa[b] -= hp;
      pb[a] -= hp;
      pb[b] += hp;
      Mat2 second = (1.0 / (4.0 * hp * hp)) * (bracket(pp) - bracket(pa) - bracket(pb) + bracket(pm));
      acc = acc + g_cov[a][b] * second;
    }
  return Complex(0.0, -1.0 / 16.0) * acc;
}

// Symbolic f as a matrix field; exactly zero for constant sigma fields.
inline MatrixField2 symbolic_f(const SymbolicGeometry& sg) {
  MatrixField2 acc;
  std::array<std::array<MatrixField2, 4>, 4> ds;
  for (int a = 0; a < 4; ++a)
    for (int c = 0; c < 4; ++c) ds[a][c] = sg.sigma[a].partial(c);
  for (int a = 0; a < 4; ++a)
    for (int c = 0; c < 4; ++c) {
      acc = acc + ds[a][c] * sg.sigma_tilde_lower[a] * sg.sigma[c] -
            sg.sigma[c] * sg.sigma_tilde_lower[a] * ds[a][c];
    }
  return Expr::constant(Complex(0.0, -0.125)) * acc;
}

// ---------------------------------------------------------------------------
// covariant representation Op(prin, csub): rebuild the coefficient form from
// sigma fields, covariant subprincipal symbol and density.
//   P^a = -i sigma^a
//   Q   = csub + f(sigma) - (i/2)(sigma^a)_{x^a} - (i/2) sigma^a (ln rho)_{x^a}

inline RawOperator reconstruct(const SigmaField& sigma, const MatrixField2& csub,
                               const Expr& rho) {
  SymbolicGeometry sg = build_symbolic_geometry(sigma);
  RawOperator op;
  op.rho = rho;
  const Expr minus_i = Expr::constant(Complex(0.0, -1.0));
  const Expr minus_half_i = Expr::constant(Complex(0.0, -0.5));
  MatrixField2 q = csub + symbolic_f(sg);
  Expr lnrho = ln(rho);
  for (int a = 0; a < 4; ++a) {
    op.P[a] = minus_i * sigma[a];
    q = q + minus_half_i * sigma[a].partial(a);
    q = q + (minus_half_i * lnrho.derivative(a)) * sigma[a];
  }
  op.Q = q;
  return op;
}

inline RawOperator reconstruct(const SigmaField& sigma, const MatrixField2& csub,
                               const Expr& rho, const ChartBox& box) {
  Rng rng(box.seed);
  const int n = std::max(16, box.sample_count);
  for (int k = 0; k < n; ++k) {
    Point4 x = rng.point_in(box);
    double h = max_hermiticity_residual(sigma, x);
    if (h > kTolHerm)
      throw ValidationError("sigma fields are not Hermitian at a sampled point");
    (void)frame_at(sigma, x);  // throws DegeneracyError when degenerate
  }
  return reconstruct(sigma, csub, rho);
}

// Covariant subprincipal symbol of an operator at a point.
inline Mat2 csub_at(const RawOperator& op, const Point4& x) {
  return subprincipal_symbol(op, x) - f_at(sigma_fields(op), x);
}

// csub as a symbolic matrix field.
inline MatrixField2 csub_field(const RawOperator& op) {
  SigmaField sigma = sigma_fields(op);
  SymbolicGeometry sg = build_symbolic_geometry(sigma);
  const Expr half_i = Expr::constant(Complex(0.0, 0.5));
  MatrixField2 c = op.Q - symbolic_f(sg);
  Expr lnrho = ln(op.rho);
  for (int a = 0; a < 4; ++a) {
    c = c + half_i * sigma[a].partial(a);
    c = c + (half_i * lnrho.derivative(a)) * sigma[a];
  }
  return c;
}

// ---------------------------------------------------------------------------
// electromagnetic covector potential: solve csub = sigma^a A_a in the
// standard-basis coordinates (a real 4x4 linear system).

struct PotentialA {
  Vec4r A{};
  double residual = 0.0;  // basis-decomposition defect
};

inline PotentialA decompose_over_sigma(const std::array<Mat2, 4>& sigma, const Mat2& csub) {
  Frame f = frame_from_matrices(sigma);
  // coordinates of csub in the standard Hermitian basis
  Vec4r c{};
  c[0] = csub(1, 0).real();
  c[1] = csub(1, 0).imag();
  c[2] = 0.5 * (csub(0, 0) - csub(1, 1)).real();
  c[3] = 0.5 * csub.trace().real();
  double imag_defect = std::max(std::abs(csub.trace().imag()),
                                std::abs((csub(0, 0) - csub(1, 1)).imag()));
  imag_defect = std::max(imag_defect, csub.hermiticity_residual());

  // c_j = e_j^a A_a
  Mat4r E{};
  for (int j = 0; j < 4; ++j)
    for (int a = 0; a < 4; ++a) E[j][a] = f.e[j][a];
  PotentialA out;
  out.A = mat4_solve(E, c);
  Mat2 rebuilt;
  for (int a = 0; a < 4; ++a) rebuilt = rebuilt + out.A[a] * sigma[a];
  out.residual = std::max((rebuilt - csub).max_abs(), imag_defect);
  return out;
}

inline PotentialA extract_A_at(const RawOperator& op, const Point4& x) {
  return decompose_over_sigma(sigma_at(op, x), csub_at(op, x));
}

// ---------------------------------------------------------------------------
// evaluated symbols at a point

struct SymbolView {
  Mat2 full, prin, sub, csub;
  std::array<Mat2, 4> sigma;
};

inline SymbolView symbols_at(const RawOperator& op, const Point4& x, const Covector4& p) {
  SymbolView v;
  v.full = full_symbol(op, x, p);
  v.prin = principal_symbol(op, x, p);
  v.sub = subprincipal_symbol(op, x);
  v.csub = csub_at(op, x);
  v.sigma = sigma_at(op, x);
  return v;
}

struct GeometrySnapshot {
  Frame frame;
  MetricPair metric;
  Christoffel christoffel;
  Vec4r A{};
  double A_residual = 0.0;
};

inline GeometrySnapshot geometry_snapshot(const RawOperator& op, const Point4& x) {
  GeometrySnapshot g;
  SigmaField sigma = sigma_fields(op);
  g.frame = frame_at(sigma, x);
  g.metric = metric_at(sigma, x);
  g.christoffel = christoffel_at(sigma, x);
  PotentialA pa = extract_A_at(op, x);
  g.A = pa.A;
  g.A_residual = pa.residual;
  return g;
}

// ---------------------------------------------------------------------------
// covariance residuals

// Induced law of the plain subprincipal symbol under L -> G*LG:
//   L_sub -> G* L_sub G + (i/2)(G*_{x^a} sigma^a G - G* sigma^a G_{x^a})
inline double subprincipal_law_residual(const RawOperator& op, const GaugeField& g,
                                        const Point4& x) {
  RawOperator t = gl_transform(op, g);
  Mat2 lhs = subprincipal_symbol(t, x);

  EvalCache cache;
  MatrixField2 Gf = gauge_conjugator(g);
  MatrixField2 Gd = Gf.dagger();
  Mat2 G = Gf.eval(x, cache);
  Mat2 Gdag = Gd.eval(x, cache);
  Mat2 rhs = Gdag * subprincipal_symbol(op, x) * G;
  auto sigma = sigma_at(op, x);
  for (int a = 0; a < 4; ++a) {
    Mat2 dGd = Gd.partial(a).eval(x, cache);
    Mat2 dG = Gf.partial(a).eval(x, cache);
    rhs = rhs + Complex(0.0, 0.5) * (dGd * sigma[a] * G - Gdag * sigma[a] * dG);
  }
  return (lhs - rhs).max_abs();
}

// Induced law of the covariant subprincipal symbol per gauge kind.
inline double csub_law_residual(const RawOperator& op, const GaugeField& g, const Point4& x) {
  RawOperator t = gl_transform(op, g);
  Mat2 lhs = csub_at(t, x);
  Mat2 base = csub_at(op, x);
  Mat2 rhs;
  switch (g.kind) {
    case GaugeField::Kind::ScalarPsi: {
      Complex s = std::exp(2.0 * g.scalar.eval(x));
      rhs = s * base;
      break;
    }
    case GaugeField::Kind::PhasePhi: {
      Covector4 grad{};
      for (int a = 0; a < 4; ++a) grad[a] = g.scalar.derivative(a).eval(x).real();
      rhs = base + principal_symbol(op, x, grad);
      break;
    }
    case GaugeField::Kind::Sl2cR: {
      Mat2 R = g.mat.eval(x);
      rhs = R.dagger() * base * R;
      break;
    }
    case GaugeField::Kind::Gl2cQ:
      throw std::invalid_argument("csub has no covariance law under general GL(2,C)");
  }
  return (lhs - rhs).max_abs();
}

// Condition on f under SL(2,C):
//   f(R* prin R) = R* f(prin) R + (i/2)(R*_{x^a} sigma^a R - R* sigma^a R_{x^a})
inline double f_covariance_residual(const SigmaField& sigma, const MatrixField2& R,
                                    const Point4& x) {
  MatrixField2 Rd = R.dagger();
  SigmaField transformed;
  for (int a = 0; a < 4; ++a) transformed[a] = Rd * (sigma[a] * R);
  Mat2 lhs = f_at(transformed, x);

  EvalCache cache;
  Mat2 Rx = R.eval(x, cache);
  Mat2 Rdx = Rd.eval(x, cache);
  Mat2 rhs = Rdx * f_at(sigma, x) * Rx;
  for (int a = 0; a < 4; ++a) {
    Mat2 s = sigma[a].eval(x, cache);
    Mat2 dR = R.partial(a).eval(x, cache);
    Mat2 dRd = Rd.partial(a).eval(x, cache);
    rhs = rhs + Complex(0.0, 0.5) * (dRd * s * Rx - Rdx * s * dR);
  }
  return (lhs - rhs).max_abs();
}

// Homogeneity f(e^{2 psi} prin) = e^{2 psi} f(prin).
inline double f_homogeneity_residual(const SigmaField& sigma, const Expr& psi, const Point4& x) {
  Expr scale = exp(Expr::constant(2.0) * psi);
  SigmaField scaled;
  for (int a = 0; a < 4; ++a) scaled[a] = scale * sigma[a];
  Mat2 lhs = f_at(scaled, x);
  Mat2 rhs = scale.eval(x) * f_at(sigma, x);
  return (lhs - rhs).max_abs();
}

// Appendix D residual: with sigma the Pauli matrices of the operator and R
// an SL(2,C) field,
//   Q = -(i/8)[ R* sigma^a R_{x^c} R^{-1} tilde sigma_a sigma^c R
//               - R* sigma^c tilde sigma_a sigma^a R_{x^c} ]
//       + (i/2) R* sigma^a R_{x^a}
// must vanish; returns (|Q|, |Q + Q*|).
inline std::pair<double, double> appendixD_Q_residual(const SigmaField& sigma,
                                                      const MatrixField2& R, const Point4& x) {
  EvalCache cache;
  auto s = eval_fields(sigma, x, cache);
  Mat4r g_cov = metric_from_matrices(s).g_cov;
  std::array<Mat2, 4> tilde;
  for (int a = 0; a < 4; ++a) tilde[a] = s[a].adjugate();
  auto tilde_low = lower_index(tilde, g_cov);

  Mat2 Rx = R.eval(x, cache);
  Mat2 Rdag = Rx.dagger();
  Mat2 Rinv = Rx.inverse();
  std::array<Mat2, 4> dR;
  for (int c = 0; c < 4; ++c) dR[c] = R.partial(c).eval(x, cache);

  Mat2 q;
  for (int a = 0; a < 4; ++a)
    for (int c = 0; c < 4; ++c) {
      q = q + Complex(0.0, -0.125) *
              (Rdag * s[a] * dR[c] * Rinv * tilde_low[a] * s[c] * Rx -
               Rdag * s[c] * tilde_low[a] * s[a] * dR[c]);
    }
  for (int a = 0; a < 4; ++a) q = q + Complex(0.0, 0.5) * (Rdag * s[a] * dR[a]);
  return {q.max_abs(), (q + q.dagger()).max_abs()};
}

// Potential law: A -> A + grad phi under the phase transformation; invariant
// under psi- and SL(2,C)-conjugation.
inline double potential_law_residual(const RawOperator& op, const GaugeField& g,
                                     const Point4& x) {
  RawOperator t = gl_transform(op, g);
  PotentialA lhs = extract_A_at(t, x);
  PotentialA base = extract_A_at(op, x);
  Vec4r expect = base.A;
  if (g.kind == GaugeField::Kind::PhasePhi)
    for (int a = 0; a < 4; ++a) expect[a] += g.scalar.derivative(a).eval(x).real();
  double r = 0.0;
  for (int a = 0; a < 4; ++a) r = std::max(r, std::abs(lhs.A[a] - expect[a]));
  return std::max({r, lhs.residual, base.residual});
}

// ---------------------------------------------------------------------------
// Lorentz transformation of the frame induced by SL(2,C) conjugation

struct LorentzMatrix {
  Mat4r lambda{};  // e'_j = Lambda_j^k e_k
  double det = 0.0;
  double eta_residual = 0.0;  // defect of Lambda eta Lambda^T = eta
};

inline LorentzMatrix lorentz_matrix_from_frames(const Frame& before, const Frame& after) {
  // after.e = Lambda * before.e  (rows are frame vectors)
  Mat4r inv = mat4_inverse(before.e);
  LorentzMatrix lm;
  lm.lambda = mat4_mul(after.e, inv);
  lm.det = mat4_det(lm.lambda);
  Mat4r eta{};
  eta[0][0] = eta[1][1] = eta[2][2] = 1.0;
  eta[3][3] = -1.0;
  Mat4r lt{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) lt[i][j] = lm.lambda[j][i];
  Mat4r test = mat4_mul(lm.lambda, mat4_mul(eta, lt));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      lm.eta_residual = std::max(lm.eta_residual, std::abs(test[i][j] - eta[i][j]));
  return lm;
}

inline LorentzMatrix lorentz_matrix(const MatrixField2& R, const SigmaField& sigma,
                                    const Point4& x) {
  EvalCache cache;
  Mat2 Rx = R.eval(x, cache);
  auto s = eval_fields(sigma, x, cache);
  std::array<Mat2, 4> transformed;
  for (int a = 0; a < 4; ++a) transformed[a] = Rx.dagger() * s[a] * Rx;
  return lorentz_matrix_from_frames(frame_from_matrices(s), frame_from_matrices(transformed));
}

}  // namespace opgeom
