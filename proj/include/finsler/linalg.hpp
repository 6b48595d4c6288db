#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "finsler/errors.hpp"

namespace finsler {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
struct Mat {
  std::array<double, N * N> a{};

  double& operator()(int i, int j) { return a[i * N + j]; }
  double operator()(int i, int j) const { return a[i * N + j]; }

  static Mat identity() {
    Mat m;
    for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
    return m;
  }
};

template <std::size_t N>
inline double dot(const Vec<N>& u, const Vec<N>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += u[i] * v[i];
  return s;
}

template <std::size_t N>
inline double norm(const Vec<N>& u) {
  return std::sqrt(dot(u, u));
}

template <std::size_t N>
inline Vec<N> operator+(const Vec<N>& u, const Vec<N>& v) {
  Vec<N> w;
  for (std::size_t i = 0; i < N; ++i) w[i] = u[i] + v[i];
  return w;
}

template <std::size_t N>
inline Vec<N> operator-(const Vec<N>& u, const Vec<N>& v) {
  Vec<N> w;
  for (std::size_t i = 0; i < N; ++i) w[i] = u[i] - v[i];
  return w;
}

template <std::size_t N>
inline Vec<N> operator*(double c, const Vec<N>& u) {
  Vec<N> w;
  for (std::size_t i = 0; i < N; ++i) w[i] = c * u[i];
  return w;
}

inline Vec<3> cross(const Vec<3>& u, const Vec<3>& v) {
  return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}

template <std::size_t N>
inline Vec<N> operator-(const Vec<N>& u) {
  return -1.0 * u;
}

template <std::size_t N>
inline Vec<N> matvec(const Mat<N>& m, const Vec<N>& v) {
  Vec<N> w{};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) w[i] += m(i, j) * v[j];
  return w;
}

// u^T m v
template <std::size_t N>
inline double quad_form(const Mat<N>& m, const Vec<N>& u, const Vec<N>& v) {
  return dot(u, matvec(m, v));
}

template <std::size_t N>
inline Mat<N> mat_add(const Mat<N>& a, const Mat<N>& b) {
  Mat<N> c;
  for (std::size_t i = 0; i < N * N; ++i) c.a[i] = a.a[i] + b.a[i];
  return c;
}

template <std::size_t N>
inline Mat<N> mat_scale(double c, const Mat<N>& a) {
  Mat<N> b;
  for (std::size_t i = 0; i < N * N; ++i) b.a[i] = c * a.a[i];
  return b;
}

// rank-one u v^T
template <std::size_t N>
inline Mat<N> outer(const Vec<N>& u, const Vec<N>& v) {
  Mat<N> m;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) m(i, j) = u[i] * v[j];
  return m;
}

template <std::size_t N>
inline double det(const Mat<N>& m) {
  if constexpr (N == 1) {
    return m(0, 0);
  } else if constexpr (N == 2) {
    return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  } else if constexpr (N == 3) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  } else {
    static_assert(N <= 3, "det: dimensions above 3 not supported");
    return 0.0;
  }
}

// Gaussian elimination with partial pivoting.  Throws ill_conditioned when a
// pivot collapses relative to the matrix scale.
template <std::size_t N>
inline Vec<N> solve(Mat<N> m, Vec<N> b) {
  double scale = 0.0;
  for (double v : m.a) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) throw ill_conditioned("solve: zero matrix", std::numeric_limits<double>::infinity());
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::fabs(m(r, col)) > std::fabs(m(piv, col))) piv = r;
    if (piv != col) {
      for (std::size_t j = 0; j < N; ++j) std::swap(m(col, j), m(piv, j));
      std::swap(b[col], b[piv]);
    }
    double p = m(col, col);
    if (std::fabs(p) < 1e-14 * scale)
      throw ill_conditioned("solve: vanishing pivot", scale / std::max(std::fabs(p), 1e-300));
    for (std::size_t r = col + 1; r < N; ++r) {
      double f = m(r, col) / p;
      for (std::size_t j = col; j < N; ++j) m(r, j) -= f * m(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec<N> x{};
  for (int i = static_cast<int>(N) - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < static_cast<int>(N); ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

template <std::size_t N>
inline Mat<N> inverse(const Mat<N>& m) {
  Mat<N> inv;
  for (std::size_t j = 0; j < N; ++j) {
    Vec<N> e{};
    e[j] = 1.0;
    Vec<N> col = solve(m, e);
    for (std::size_t i = 0; i < N; ++i) inv(i, j) = col[i];
  }
  return inv;
}

// Cholesky positivity probe for symmetric matrices; also produces a cheap
// condition estimate (max/min pivot ratio) for diagnostics.
template <std::size_t N>
inline bool positive_definite(const Mat<N>& m, double* condition = nullptr) {
  Mat<N> l{};
  double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) {
          if (condition) *condition = std::numeric_limits<double>::infinity();
          return false;
        }
        l(i, i) = std::sqrt(s);
        pmin = std::min(pmin, s);
        pmax = std::max(pmax, s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  if (condition) *condition = pmax / pmin;
  return true;
}

// volume of the Euclidean unit ball B^k
inline double ball_volume(int k) {
  constexpr double pi = 3.14159265358979323846;
  return std::pow(std::sqrt(pi), k) / std::tgamma(k / 2.0 + 1.0);
}

// c_k = vol(S^k), the k-sphere area: c_0=2, c_1=2*pi, c_2=4*pi, c_3=2*pi^2
inline double sphere_area(int k) {
  constexpr double pi = 3.14159265358979323846;
  return 2.0 * std::pow(pi, (k + 1) / 2.0) / std::tgamma((k + 1) / 2.0);
}

}  // namespace finsler
