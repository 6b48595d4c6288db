#pragma once

#include <cmath>

#include "finsler/linalg.hpp"
#include "finsler/metric.hpp"

namespace finsler {

// Ricci scalar Ric(x,y) = sum_i R^i_i of the Riemann endomorphism
//   R^i_k = 2 dG^i/dx^k - y^j d^2G^i/dx^j dy^k
//         + 2 G^j d^2G^i/dy^j dy^k - dG^i/dy^j dG^j/dy^k,
// assembled from nested central differences of the spray.  The spray itself
// already differentiates the fundamental tensor once, so outer steps are kept
// an order of magnitude larger than the inner ones.
template <std::size_t N>
double ricci(const Metric<N>& m, const Vec<N>& x, const Vec<N>& y,
             double hx = 1e-3, double hy_scale = 1e-3) {
  const double hy = hy_scale * std::max(1.0, norm(y));
  auto G = [&](const Vec<N>& xx, const Vec<N>& yy) { return m.spray(xx, yy); };

  Vec<N> G0 = G(x, y);

  std::array<Vec<N>, N> dGdx;   // dGdx[k][i] = dG^i/dx^k
  for (std::size_t k = 0; k < N; ++k) {
    Vec<N> xp = x, xm = x;
    xp[k] += hx;
    xm[k] -= hx;
    dGdx[k] = (1.0 / (2.0 * hx)) * (G(xp, y) - G(xm, y));
  }

  std::array<Vec<N>, N> dGdy;   // dGdy[j][i] = dG^i/dy^j
  std::array<Vec<N>, N> Gyp, Gym;
  for (std::size_t j = 0; j < N; ++j) {
    Vec<N> yp = y, ym = y;
    yp[j] += hy;
    ym[j] -= hy;
    Gyp[j] = G(x, yp);
    Gym[j] = G(x, ym);
    dGdy[j] = (1.0 / (2.0 * hy)) * (Gyp[j] - Gym[j]);
  }

  // d2G[j][k][i] = d^2 G^i / dy^j dy^k
  std::array<std::array<Vec<N>, N>, N> d2Gyy;
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = j; k < N; ++k) {
      Vec<N> v;
      if (j == k) {
        v = (1.0 / (hy * hy)) * (Gyp[j] - 2.0 * G0 + Gym[j]);
      } else {
        Vec<N> a = y, b = y, c = y, d = y;
        a[j] += hy; a[k] += hy;
        b[j] += hy; b[k] -= hy;
        c[j] -= hy; c[k] += hy;
        d[j] -= hy; d[k] -= hy;
        v = (1.0 / (4.0 * hy * hy)) * ((G(x, a) - G(x, b)) - (G(x, c) - G(x, d)));
      }
      d2Gyy[j][k] = v;
      d2Gyy[k][j] = v;
    }
  }

  // d2Gxy[j][k][i] = d^2 G^i / dx^j dy^k
  std::array<std::array<Vec<N>, N>, N> d2Gxy;
  for (std::size_t j = 0; j < N; ++j) {
    Vec<N> xp = x, xm = x;
    xp[j] += hx;
    xm[j] -= hx;
    for (std::size_t k = 0; k < N; ++k) {
      Vec<N> yp = y, ym = y;
      yp[k] += hy;
      ym[k] -= hy;
      d2Gxy[j][k] = (1.0 / (4.0 * hx * hy)) *
                    ((G(xp, yp) - G(xp, ym)) - (G(xm, yp) - G(xm, ym)));
    }
  }

  double ric = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double r = 2.0 * dGdx[i][i];
    for (std::size_t j = 0; j < N; ++j) {
      r -= y[j] * d2Gxy[j][i][i];
      r += 2.0 * G0[j] * d2Gyy[j][i][i];
      r -= dGdy[j][i] * dGdy[i][j];
    }
    ric += r;
  }
  return ric;
}

}  // namespace finsler
