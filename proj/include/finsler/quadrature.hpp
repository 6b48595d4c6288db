#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

struct Quadrature1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1]; Newton iteration on the Legendre
// polynomial with the Chebyshev-like initial guess.
inline Quadrature1D gauss_legendre(int n) {
  if (n < 1) throw invalid_input("gauss_legendre: order must be positive");
  Quadrature1D q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = -x;
    q.weights[i] = w;
    q.nodes[n - 1 - i] = x;
    q.weights[n - 1 - i] = w;
  }
  return q;
}

inline Quadrature1D gauss_legendre(int n, double a, double b) {
  Quadrature1D q = gauss_legendre(n);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    q.nodes[i] = mid + half * q.nodes[i];
    q.weights[i] *= half;
  }
  return q;
}

template <typename F>
double simpson(F&& f, double a, double b, int intervals) {
  if (intervals < 2) intervals = 2;
  if (intervals % 2 != 0) ++intervals;
  double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace finsler
