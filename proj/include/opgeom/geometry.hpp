// Geometry implied by a non-degenerate Hermitian p-linear symbol: frame,
// Lorentzian metric (two independent extraction paths), Christoffel symbols,
// Clifford / Pauli-sandwich identities and the adjugate-frame relation.

#pragma once

#include <array>
#include <cmath>

#include "opgeom/fields.hpp"

namespace opgeom {

inline constexpr double kTolHerm = 1e-10;
inline constexpr double kTolDegenerate = 1e-8;
inline constexpr double kTolMetric = 1e-10;

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Frame e_j^alpha: row j = frame vector, column alpha = component.
struct Frame {
  Mat4r e{};
  double imag_residual = 0.0;  // size of discarded imaginary parts

  double det() const { return mat4_det(e); }
};

struct MetricPair {
  Mat4r g_up{};   // g^{alpha beta}, from det of the principal symbol
  Mat4r g_cov{};  // inverse
  Vec4r eigenvalues{};
  bool lorentzian = false;       // three positive, one negative eigenvalue
  double twopath_residual = 0.0;  // det path vs frame contraction
  double orthonormality_residual = 0.0;
  double inverse_residual = 0.0;
  double imag_residual = 0.0;
};

// gamma[beta][alpha][gamma_idx] = Gamma^beta_{alpha gamma}
struct Christoffel {
  std::array<Mat4r, 4> gamma{};
};

// ---------------------------------------------------------------------------
// frame extraction

inline Frame frame_from_matrices(const std::array<Mat2, 4>& sigma) {
  Frame f;
  for (int a = 0; a < 4; ++a) {
    const Mat2& s = sigma[a];
    Complex tr = s.trace();
    Complex diag = s(0, 0) - s(1, 1);
    Complex lower = s(1, 0);
    f.e[0][a] = lower.real();
    f.e[1][a] = lower.imag();
    f.e[2][a] = 0.5 * diag.real();
    f.e[3][a] = 0.5 * tr.real();
    f.imag_residual = std::max(f.imag_residual, std::abs(tr.imag()));
    f.imag_residual = std::max(f.imag_residual, std::abs(diag.imag()));
    f.imag_residual = std::max(f.imag_residual, s.hermiticity_residual());
  }
  if (std::abs(f.det()) < kTolDegenerate)
    throw DegeneracyError("frame determinant below degeneracy threshold");
  return f;
}

inline Frame frame_at(const SigmaField& sigma, const Point4& x) {
  return frame_from_matrices(eval_fields(sigma, x));
}

// Rebuild sigma^alpha = s^j e_j^alpha from a frame.
inline std::array<Mat2, 4> sigma_from_frame(const Mat4r& e) {
  std::array<Mat2, 4> sigma;
  for (int a = 0; a < 4; ++a) {
    Mat2 m;
    for (int j = 0; j < 4; ++j) m = m + e[j][a] * pauli_basis()[j];
    sigma[a] = m;
  }
  return sigma;
}

// ---------------------------------------------------------------------------
// metric extraction

inline MetricPair metric_from_matrices(const std::array<Mat2, 4>& sigma) {
  MetricPair mp;

  // det path: det(sigma^a p_a) = -g^{ab} p_a p_b, probed at the ten basis
  // covectors {e^a, e^a + e^b}; exact for a quadratic form.
  Vec4r diag{};
  for (int a = 0; a < 4; ++a) {
    Complex d = sigma[a].det();
    mp.imag_residual = std::max(mp.imag_residual, std::abs(d.imag()));
    diag[a] = -d.real();
    mp.g_up[a][a] = diag[a];
  }
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      Complex d = (sigma[a] + sigma[b]).det();
      mp.imag_residual = std::max(mp.imag_residual, std::abs(d.imag()));
      double gab = 0.5 * (-d.real() - diag[a] - diag[b]);
      mp.g_up[a][b] = mp.g_up[b][a] = gab;
    }

  // frame path: g^{ab} = sum_{j<=3} e_j^a e_j^b - e_4^a e_4^b
  Frame f = frame_from_matrices(sigma);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double gf = 0.0;
      for (int j = 0; j < 3; ++j) gf += f.e[j][a] * f.e[j][b];
      gf -= f.e[3][a] * f.e[3][b];
      mp.twopath_residual = std::max(mp.twopath_residual, std::abs(gf - mp.g_up[a][b]));
    }

  mp.g_cov = mat4_inverse(mp.g_up);
  Mat4r prod = mat4_mul(mp.g_up, mp.g_cov);
  for (int a = 0; a < 4; ++a) prod[a][a] -= 1.0;
  mp.inverse_residual = mat4_max_abs(prod);

  // orthonormality of the frame: g_{ab} e_j^a e_k^b = diag(1,1,1,-1)
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k) {
      double v = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) v += mp.g_cov[a][b] * f.e[j][a] * f.e[k][b];
      double expect = (j == k) ? (j == 3 ? -1.0 : 1.0) : 0.0;
      mp.orthonormality_residual = std::max(mp.orthonormality_residual, std::abs(v - expect));
    }

  mp.eigenvalues = mat4_sym_eigenvalues(mp.g_up);
  double scale = std::max(std::abs(mp.eigenvalues[0]), std::abs(mp.eigenvalues[3]));
  mp.lorentzian = mp.eigenvalues[0] < -kTolMetric * scale &&
                  mp.eigenvalues[1] > kTolMetric * scale;
  return mp;
}

inline MetricPair metric_at(const SigmaField& sigma, const Point4& x) {
  return metric_from_matrices(eval_fields(sigma, x));
}

// numeric index lowering sigma_alpha = g_{alpha beta} sigma^beta
inline std::array<Mat2, 4> lower_index(const std::array<Mat2, 4>& sigma, const Mat4r& g_cov) {
  std::array<Mat2, 4> lowered;
  for (int a = 0; a < 4; ++a) {
    Mat2 m;
    for (int b = 0; b < 4; ++b) m = m + g_cov[a][b] * sigma[b];
    lowered[a] = m;
  }
  return lowered;
}

// ---------------------------------------------------------------------------
// symbolic geometry: frame, co-frame, contravariant metric and lowered Pauli
// fields as expressions. The co-frame comes from the cofactor inverse of the
// frame matrix, so everything downstream differentiates exactly.

struct SymbolicGeometry {
  SigmaField sigma;
  SigmaField sigma_tilde;                    // adjugate fields
  std::array<std::array<Expr, 4>, 4> e;      // e[j][alpha]
  Expr det_e;
  std::array<std::array<Expr, 4>, 4> einv;   // einv[alpha][j] = (E^{-1})_{alpha j}
  std::array<std::array<Expr, 4>, 4> g_up;   // g^{alpha beta}
  std::array<MatrixField2, 4> sigma_lower;        // sigma_alpha
  std::array<MatrixField2, 4> sigma_tilde_lower;  // tilde sigma_alpha
};

namespace detail {

inline Expr det3_expr(const std::array<std::array<Expr, 4>, 4>& m, const std::array<int, 3>& rows,
                      const std::array<int, 3>& cols) {
  auto at = [&](int r, int c) { return m[rows[r]][cols[c]]; };
  return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
         at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
         at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
}

inline std::array<int, 3> others(int skip) {
  std::array<int, 3> r{};
  int k = 0;
  for (int v = 0; v < 4; ++v)
    if (v != skip) r[k++] = v;
  return r;
}

}  // namespace detail

inline SymbolicGeometry build_symbolic_geometry(const SigmaField& sigma) {
  SymbolicGeometry sg;
  sg.sigma = sigma;
  sg.sigma_tilde = adjugate_fields(sigma);

  const Expr half = Expr::constant(0.5);
  const Expr half_i = Expr::constant(Complex(0.0, 0.5));
  for (int a = 0; a < 4; ++a) {
    const MatrixField2& s = sigma[a];
    // Hermitian decomposition over the standard basis
    sg.e[0][a] = half * (s(0, 1) + s(1, 0));
    sg.e[1][a] = half_i * (s(0, 1) - s(1, 0));
    sg.e[2][a] = half * (s(0, 0) - s(1, 1));
    sg.e[3][a] = half * (s(0, 0) + s(1, 1));
  }

  // det and cofactor inverse of the frame matrix
  Expr det;
  for (int c = 0; c < 4; ++c) {
    Expr minor = detail::det3_expr(sg.e, detail::others(0), detail::others(c));
    Expr term = sg.e[0][c] * minor;
    det = (c % 2 == 0) ? det + term : det - term;
  }
  sg.det_e = det;
  for (int a = 0; a < 4; ++a)
    for (int j = 0; j < 4; ++j) {
      Expr cof = detail::det3_expr(sg.e, detail::others(j), detail::others(a));
      if ((a + j) % 2 == 1) cof = -cof;
      sg.einv[a][j] = cof / sg.det_e;
    }

  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      Expr g;
      for (int j = 0; j < 3; ++j) g = g + sg.e[j][a] * sg.e[j][b];
      sg.g_up[a][b] = g - sg.e[3][a] * sg.e[3][b];
    }

  // index lowering through the co-frame:
  //   sigma_alpha       =  sum_j eta_jj s^j (E^{-1})_{alpha j}
  //   tilde sigma_alpha = -sum_j        s^j (E^{-1})_{alpha j}
  for (int a = 0; a < 4; ++a) {
    MatrixField2 low, tlow;
    for (int j = 0; j < 4; ++j) {
      double eta = (j == 3) ? -1.0 : 1.0;
      MatrixField2 sj = MatrixField2::constant(pauli_basis()[j]);
      low = low + (Expr::constant(eta) * sg.einv[a][j]) * sj;
      tlow = tlow - sg.einv[a][j] * sj;
    }
    sg.sigma_lower[a] = low;
    sg.sigma_tilde_lower[a] = tlow;
  }
  return sg;
}

// d/dx^alpha of ln|det g_cov| through the frame: det g_cov = -(det E)^{-2},
// hence the derivative is -2 (det E)_{x^alpha} / det E.
inline Expr ln_abs_det_gcov_partial(const SymbolicGeometry& sg, int alpha) {
  return Expr::constant(-2.0) * sg.det_e.derivative(alpha) / sg.det_e;
}

// ---------------------------------------------------------------------------
// Christoffel symbols, exact derivatives through the frame expressions

inline Christoffel christoffel_from(const SymbolicGeometry& sg, const MetricPair& mp,
                                    const Point4& x, EvalCache& cache) {
  // dg_cov = -g_cov dg_up g_cov, with dg_up evaluated symbolically
  std::array<Mat4r, 4> dg_cov{};
  for (int mu = 0; mu < 4; ++mu) {
    Mat4r dg_up{};
    for (int a = 0; a < 4; ++a)
      for (int b = a; b < 4; ++b) {
        Complex v = sg.g_up[a][b].derivative(mu).eval(x, cache);
        dg_up[a][b] = dg_up[b][a] = v.real();
      }
    Mat4r t = mat4_mul(mp.g_cov, mat4_mul(dg_up, mp.g_cov));
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) dg_cov[mu][a][b] = -t[a][b];
  }
  Christoffel ch;
  for (int beta = 0; beta < 4; ++beta)
    for (int alpha = 0; alpha < 4; ++alpha)
      for (int gam = 0; gam < 4; ++gam) {
        double v = 0.0;
        for (int delta = 0; delta < 4; ++delta)
          v += 0.5 * mp.g_up[beta][delta] *
               (dg_cov[alpha][gam][delta] + dg_cov[gam][alpha][delta] -
                dg_cov[delta][alpha][gam]);
        ch.gamma[beta][alpha][gam] = v;
      }
  return ch;
}

inline Christoffel christoffel_at(const SigmaField& sigma, const Point4& x) {
  SymbolicGeometry sg = build_symbolic_geometry(sigma);
  MetricPair mp = metric_at(sigma, x);
  EvalCache cache;
  return christoffel_from(sg, mp, x, cache);
}

// Finite-difference oracle: Christoffel from central differences of the
// covariant metric, independent of the symbolic path.
inline Christoffel christoffel_fd_oracle(const SigmaField& sigma, const Point4& x, double h) {
  std::array<Mat4r, 4> dg_cov{};
  for (int mu = 0; mu < 4; ++mu) {
    Point4 xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    Mat4r gp = metric_at(sigma, xp).g_cov;
    Mat4r gm = metric_at(sigma, xm).g_cov;
    Point4 xp2 = x, xm2 = x;
    xp2[mu] += h / 2.0;
    xm2[mu] -= h / 2.0;
    Mat4r gp2 = metric_at(sigma, xp2).g_cov;
    Mat4r gm2 = metric_at(sigma, xm2).g_cov;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        double d1 = (gp[a][b] - gm[a][b]) / (2.0 * h);
        double d2 = (gp2[a][b] - gm2[a][b]) / h;
        dg_cov[mu][a][b] = (4.0 * d2 - d1) / 3.0;
      }
  }
  MetricPair mp = metric_at(sigma, x);
  Christoffel ch;
  for (int beta = 0; beta < 4; ++beta)
    for (int alpha = 0; alpha < 4; ++alpha)
      for (int gam = 0; gam < 4; ++gam) {
        double v = 0.0;
        for (int delta = 0; delta < 4; ++delta)
          v += 0.5 * mp.g_up[beta][delta] *
               (dg_cov[alpha][gam][delta] + dg_cov[gam][alpha][delta] -
                dg_cov[delta][alpha][gam]);
        ch.gamma[beta][alpha][gam] = v;
      }
  return ch;
}

// ---------------------------------------------------------------------------
// Clifford identity residual:
//   prin(p) adj prin(q) + prin(q) adj prin(p) = -2 I g^{ab} p_a q_b
// and the adjugate-first variant; returns the larger max-norm defect.

inline double clifford_residual_matrices(const std::array<Mat2, 4>& sigma, const Mat4r& g_up,
                                         const Covector4& p, const Covector4& q) {
  Mat2 sp, sq;
  for (int a = 0; a < 4; ++a) {
    sp = sp + p[a] * sigma[a];
    sq = sq + q[a] * sigma[a];
  }
  double gpq = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) gpq += g_up[a][b] * p[a] * q[b];
  Mat2 target = (-2.0 * gpq) * Mat2::identity();
  Mat2 r1 = sp * sq.adjugate() + sq * sp.adjugate() - target;
  Mat2 r2 = sp.adjugate() * sq + sq.adjugate() * sp - target;
  return std::max(r1.max_abs(), r2.max_abs());
}

inline double clifford_residual(const SigmaField& sigma, const Point4& x, const Covector4& p,
                                const Covector4& q) {
  auto s = eval_fields(sigma, x);
  return clifford_residual_matrices(s, metric_from_matrices(s).g_up, p, q);
}

// ---------------------------------------------------------------------------
// Pauli sandwich lemma:
//   sigma_a P tilde sigma^a = -2 (tr P) I,   sigma_a P sigma^a = 2 adj P

inline std::pair<double, double> pauli_sandwich_residuals_matrices(
    const std::array<Mat2, 4>& sigma, const Mat4r& g_cov, const Mat2& P) {
  auto lowered = lower_index(sigma, g_cov);
  Mat2 t1, t2;
  for (int a = 0; a < 4; ++a) {
    t1 = t1 + lowered[a] * P * sigma[a].adjugate();
    t2 = t2 + lowered[a] * P * sigma[a];
  }
  double r1 = (t1 + 2.0 * P.trace() * Mat2::identity()).max_abs();
  double r2 = (t2 - 2.0 * P.adjugate()).max_abs();
  return {r1, r2};
}

inline std::pair<double, double> pauli_sandwich_residuals(const SigmaField& sigma,
                                                          const Point4& x, const Mat2& P) {
  auto s = eval_fields(sigma, x);
  return pauli_sandwich_residuals_matrices(s, metric_from_matrices(s).g_cov, P);
}

// ---------------------------------------------------------------------------
// adjugate / spatial inversion relation: the frame of adj sigma is
// (-e1,-e2,-e3,e4), and adj sigma equals the metric-spinor construction
// eps sigma^T eps^{-1}.

inline double adjugate_frame_relation(const SigmaField& sigma, const Point4& x) {
  auto s = eval_fields(sigma, x);
  std::array<Mat2, 4> adj;
  for (int a = 0; a < 4; ++a) adj[a] = s[a].adjugate();

  Frame f = frame_from_matrices(s);
  Frame ft = frame_from_matrices(adj);
  double r = 0.0;
  for (int j = 0; j < 4; ++j)
    for (int a = 0; a < 4; ++a) {
      double expect = (j == 3) ? f.e[j][a] : -f.e[j][a];
      r = std::max(r, std::abs(ft.e[j][a] - expect));
    }

  const Mat2& eps = metric_spinor();
  Mat2 eps_inv = eps.inverse();
  for (int a = 0; a < 4; ++a) {
    Mat2 via_eps = eps * s[a].transpose() * eps_inv;
    r = std::max(r, (via_eps - adj[a]).max_abs());
  }
  return r;
}

}  // namespace opgeom
