// Small dense matrices: complex 2x2 / 4x4 values and real 4x4 helpers
// (inverse, linear solve, determinant, symmetric eigenvalues).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "opgeom/expr.hpp"

namespace opgeom {

struct Mat2 {
  // row-major entries
  std::array<Complex, 4> m{};

  Complex& operator()(int r, int c) { return m[static_cast<std::size_t>(2 * r + c)]; }
  const Complex& operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }

  static Mat2 zero() { return Mat2{}; }
  static Mat2 identity() { return Mat2{{1.0, 0.0, 0.0, 1.0}}; }

  friend Mat2 operator+(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int k = 0; k < 4; ++k) r.m[k] = a.m[k] + b.m[k];
    return r;
  }
  friend Mat2 operator-(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int k = 0; k < 4; ++k) r.m[k] = a.m[k] - b.m[k];
    return r;
  }
  friend Mat2 operator-(const Mat2& a) {
    Mat2 r;
    for (int k = 0; k < 4; ++k) r.m[k] = -a.m[k];
    return r;
  }
  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
    return r;
  }
  friend Mat2 operator*(Complex s, const Mat2& a) {
    Mat2 r;
    for (int k = 0; k < 4; ++k) r.m[k] = s * a.m[k];
    return r;
  }
  friend Mat2 operator*(double s, const Mat2& a) { return Complex(s, 0.0) * a; }

  Complex trace() const { return m[0] + m[3]; }
  Complex det() const { return m[0] * m[3] - m[1] * m[2]; }

  // (a b; c d) -> (d -b; -c a)
  Mat2 adjugate() const { return Mat2{{m[3], -m[1], -m[2], m[0]}}; }

  Mat2 dagger() const {
    return Mat2{{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}};
  }

  Mat2 transpose() const { return Mat2{{m[0], m[2], m[1], m[3]}}; }

  Mat2 conj() const {
    return Mat2{{std::conj(m[0]), std::conj(m[1]), std::conj(m[2]), std::conj(m[3])}};
  }

  Mat2 inverse() const {
    Complex d = det();
    if (std::abs(d) < 1e-300) throw std::runtime_error("singular 2x2 matrix");
    return (1.0 / d) * adjugate();
  }

  double max_abs() const {
    double r = 0.0;
    for (const auto& z : m) r = std::max(r, std::abs(z));
    return r;
  }

  double hermiticity_residual() const { return (*this - dagger()).max_abs(); }

  std::array<Complex, 2> apply(const std::array<Complex, 2>& v) const {
    return {m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]};
  }
};

// Standard basis of the real vector space of 2x2 Hermitian matrices.
inline const std::array<Mat2, 4>& pauli_basis() {
  static const std::array<Mat2, 4> s = {
      Mat2{{0.0, 1.0, 1.0, 0.0}},
      Mat2{{0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0}},
      Mat2{{1.0, 0.0, 0.0, -1.0}},
      Mat2{{1.0, 0.0, 0.0, 1.0}}};
  return s;
}

// Metric spinor eps = (0 -1; 1 0); adj M = eps M^T eps^{-1}.
inline const Mat2& metric_spinor() {
  static const Mat2 eps{{0.0, -1.0, 1.0, 0.0}};
  return eps;
}

struct Mat4c {
  std::array<Complex, 16> m{};

  Complex& operator()(int r, int c) { return m[static_cast<std::size_t>(4 * r + c)]; }
  const Complex& operator()(int r, int c) const {
    return m[static_cast<std::size_t>(4 * r + c)];
  }

  static Mat4c zero() { return Mat4c{}; }

  static Mat4c from_blocks(const Mat2& tl, const Mat2& tr, const Mat2& bl, const Mat2& br) {
    Mat4c r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        r(i, j) = tl(i, j);
        r(i, j + 2) = tr(i, j);
        r(i + 2, j) = bl(i, j);
        r(i + 2, j + 2) = br(i, j);
      }
    return r;
  }

  friend Mat4c operator-(const Mat4c& a, const Mat4c& b) {
    Mat4c r;
    for (int k = 0; k < 16; ++k) r.m[k] = a.m[k] - b.m[k];
    return r;
  }

  double max_abs() const {
    double r = 0.0;
    for (const auto& z : m) r = std::max(r, std::abs(z));
    return r;
  }

  std::array<Complex, 4> apply(const std::array<Complex, 4>& v) const {
    std::array<Complex, 4> r{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
  }
};

// ---------------------------------------------------------------------------
// real 4x4 helpers

using Mat4r = std::array<std::array<double, 4>, 4>;
using Vec4r = std::array<double, 4>;

inline Mat4r mat4_identity() {
  Mat4r r{};
  for (int i = 0; i < 4; ++i) r[i][i] = 1.0;
  return r;
}

inline Mat4r mat4_mul(const Mat4r& a, const Mat4r& b) {
  Mat4r r{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 4; ++j) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline double mat4_max_abs(const Mat4r& a) {
  double r = 0.0;
  for (const auto& row : a)
    for (double v : row) r = std::max(r, std::abs(v));
  return r;
}

inline double mat4_det(const Mat4r& a) {
  // Gaussian elimination with partial pivoting.
  Mat4r u = a;
  double det = 1.0;
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(u[r][col]) > std::abs(u[piv][col])) piv = r;
    if (u[piv][col] == 0.0) return 0.0;
    if (piv != col) {
      std::swap(u[piv], u[col]);
      det = -det;
    }
    det *= u[col][col];
    for (int r = col + 1; r < 4; ++r) {
      double f = u[r][col] / u[col][col];
      for (int c = col; c < 4; ++c) u[r][c] -= f * u[col][c];
    }
  }
  return det;
}

inline Vec4r mat4_solve(const Mat4r& a, const Vec4r& rhs) {
  Mat4r u = a;
  Vec4r b = rhs;
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(u[r][col]) > std::abs(u[piv][col])) piv = r;
    if (std::abs(u[piv][col]) < 1e-300) throw std::runtime_error("singular 4x4 system");
    if (piv != col) {
      std::swap(u[piv], u[col]);
      std::swap(b[piv], b[col]);
    }
    for (int r = col + 1; r < 4; ++r) {
      double f = u[r][col] / u[col][col];
      for (int c = col; c < 4; ++c) u[r][c] -= f * u[col][c];
      b[r] -= f * b[col];
    }
  }
  Vec4r x{};
  for (int r = 3; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 4; ++c) s -= u[r][c] * x[c];
    x[r] = s / u[r][r];
  }
  return x;
}

inline Mat4r mat4_inverse(const Mat4r& a) {
  Mat4r inv{};
  for (int col = 0; col < 4; ++col) {
    Vec4r e{};
    e[col] = 1.0;
    Vec4r x = mat4_solve(a, e);
    for (int r = 0; r < 4; ++r) inv[r][col] = x[r];
  }
  return inv;
}

// Eigenvalues of a symmetric real 4x4 via cyclic Jacobi, ascending order.
inline Vec4r mat4_sym_eigenvalues(const Mat4r& a0) {
  Mat4r a = a0;
  // symmetrize against rounding noise
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      double v = 0.5 * (a[i][j] + a[j][i]);
      a[i][j] = a[j][i] = v;
    }
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-30) break;
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < 4; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 4; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  Vec4r ev{a[0][0], a[1][1], a[2][2], a[3][3]};
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace opgeom
