#pragma once

#include <cmath>
#include <cstddef>
#include <tuple>
#include <utility>
#include <vector>

#include "finsler/domain.hpp"
#include "finsler/errors.hpp"
#include "finsler/linalg.hpp"
#include "finsler/measures.hpp"
#include "finsler/metric.hpp"

namespace finsler {

// Rayleigh-quotient machinery for the first Dirichlet eigenvalue of the
// nonlinear Laplacian induced by a metric and a base measure: the quotient
// of the dual-norm gradient energy over the L2 norm, minimized over grid
// functions vanishing outside the domain.

struct SpectralGrid {
  Vec<2> origin{};  // coordinates of node (0, 0); nodes sit at cell centers
  double hx = 0.0, hy = 0.0;
  int nx = 0, ny = 0;
  std::vector<unsigned char> active;  // node lies in {h < 0}
  std::vector<double> weight;         // sigma * cell area; zero where never needed
  std::vector<Vec<2>> node;

  std::size_t size() const { return active.size(); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
};

inline SpectralGrid make_spectral_grid(const Metric<2>& m, MeasureKind kind, const Domain<2>& dom,
                                       int resolution, int indicatrix_order = 64) {
  if (resolution < 32) throw invalid_input("make_spectral_grid: resolution below 32");
  Vec<2> a = dom.anchor();
  double xmin = a[0], xmax = a[0], ymin = a[1], ymax = a[1];
  for (int k = 0; k < 512; ++k) {
    Vec<2> w = detail::direction(2.0 * detail::pi * k / 512);
    Vec<2> p = a + dom.ray_exit(a, w) * w;
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  SpectralGrid g;
  // one padding ring outside the bounding box so that every active node has
  // its Dirichlet wall cells in the array (left and bottom walls included)
  g.nx = g.ny = resolution + 2;
  g.hx = (xmax - xmin) / resolution;
  g.hy = (ymax - ymin) / resolution;
  g.origin = {xmin - 0.5 * g.hx, ymin - 0.5 * g.hy};
  g.active.assign(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny), 0);
  g.weight.assign(g.active.size(), 0.0);
  g.node.resize(g.active.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::size_t c = g.index(i, j);
      g.node[c] = {g.origin[0] + i * g.hx, g.origin[1] + j * g.hy};
      // a node is active only when its whole cell sits inside the domain;
      // pinning the partially covered cells keeps the estimate biased above
      // the continuum value, so refinement approaches it from above
      bool in = dom.contains(g.node[c]);
      for (int sy = -1; sy <= 1 && in; sy += 2)
        for (int sx = -1; sx <= 1 && in; sx += 2)
          in = dom.contains({g.node[c][0] + 0.5 * sx * g.hx, g.node[c][1] + 0.5 * sy * g.hy});
      g.active[c] = in ? 1 : 0;
    }
  // the energy reads sigma at a node when the node itself or a forward
  // neighbor is active; leave the weight at zero elsewhere
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::size_t c = g.index(i, j);
      bool needed = g.active[c] || (i + 1 < g.nx && g.active[g.index(i + 1, j)]) ||
                    (j + 1 < g.ny && g.active[g.index(i, j + 1)]);
      if (needed) g.weight[c] = sigma(m, kind, g.node[c], indicatrix_order) * g.hx * g.hy;
    }
  return g;
}

namespace detail {

// forward-difference covector at (i, j); u reads as zero outside the active set
inline Vec<2> grid_covector(const SpectralGrid& g, const std::vector<double>& u, int i, int j) {
  auto val = [&](int ii, int jj) {
    if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny) return 0.0;
    std::size_t c = g.index(ii, jj);
    return g.active[c] ? u[c] : 0.0;
  };
  double uc = val(i, j);
  return {(val(i + 1, j) - uc) / g.hx, (val(i, j + 1) - uc) / g.hy};
}

}  // namespace detail

// energy quotient and its gradient with respect to the active node values;
// the gradient of the squared dual norm uses its maximizing direction
inline std::pair<double, std::vector<double>> energy_with_gradient(const Metric<2>& m,
                                                                   const SpectralGrid& g,
                                                                   const std::vector<double>& u) {
  if (u.size() != g.size()) throw invalid_input("energy: grid and function sizes differ");
  double den = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c)
    if (g.active[c]) den += g.weight[c] * u[c] * u[c];
  if (den <= 0.0) throw invalid_input("energy: function vanishes on the domain");

  double num = 0.0;
  std::vector<double> dnum(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::size_t c = g.index(i, j);
      if (g.weight[c] == 0.0) continue;
      Vec<2> xi = detail::grid_covector(g, u, i, j);
      if (xi[0] == 0.0 && xi[1] == 0.0) continue;
      double fs = m.dual_norm(g.node[c], xi);
      num += g.weight[c] * fs * fs;
      Vec<2> ystar = m.dual_argmax(g.node[c], xi);
      double cx = g.weight[c] * 2.0 * fs * ystar[0] / g.hx;
      double cy = g.weight[c] * 2.0 * fs * ystar[1] / g.hy;
      if (g.active[c]) dnum[c] -= cx + cy;
      if (i + 1 < g.nx && g.active[g.index(i + 1, j)]) dnum[g.index(i + 1, j)] += cx;
      if (j + 1 < g.ny && g.active[g.index(i, j + 1)]) dnum[g.index(i, j + 1)] += cy;
    }

  double e = num / den;
  std::vector<double> grad(g.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    if (g.active[c]) grad[c] = (dnum[c] - e * 2.0 * g.weight[c] * u[c]) / den;
  return {e, std::move(grad)};
}

inline double energy(const Metric<2>& m, const SpectralGrid& g, const std::vector<double>& u) {
  return energy_with_gradient(m, g, u).first;
}

struct MinimizeResult {
  double lambda = 0.0;
  std::vector<double> u;
  SpectralGrid grid;
  int iterations = 0;
  bool stalled = false;  // energy decrease fell below the stall threshold
};

// projected descent on the quotient: gradient trial steps sized by the
// previous secant pair, backtracked until the energy decreases
inline MinimizeResult minimize(const Metric<2>& m, MeasureKind kind, const Domain<2>& dom,
                               int resolution, int max_iterations = 2000,
                               int indicatrix_order = 64) {
  MinimizeResult out;
  out.grid = make_spectral_grid(m, kind, dom, resolution, indicatrix_order);
  const SpectralGrid& g = out.grid;

  auto normalize = [&](std::vector<double>& u) {
    double den = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c)
      if (g.active[c]) den += g.weight[c] * u[c] * u[c];
    double s = 1.0 / std::sqrt(den);
    for (std::size_t c = 0; c < g.size(); ++c) u[c] = g.active[c] ? s * u[c] : 0.0;
  };

  std::vector<double> u(g.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    if (g.active[c]) u[c] = std::max(0.0, -dom.level(g.node[c]));
  normalize(u);

  auto [e, grad] = energy_with_gradient(m, g, u);
  double step = 1.0 / std::max(1.0, e);
  std::vector<double> prev_u, prev_grad;
  int small_gains = 0;  // secant steps take tiny gains in bursts; only a run of them is a stall
  for (int it = 0; it < max_iterations; ++it) {
    if (!prev_u.empty()) {
      // secant step of the previous move, clamped around the working size
      double sy = 0.0, yy = 0.0;
      for (std::size_t c = 0; c < g.size(); ++c) {
        double du = u[c] - prev_u[c], dg = grad[c] - prev_grad[c];
        sy += du * dg;
        yy += dg * dg;
      }
      if (sy > 0.0 && yy > 0.0) step = std::min(std::max(sy / yy, 1e-12), 1e3);
    }
    prev_u = u;
    prev_grad = grad;

    bool accepted = false;
    std::vector<double> trial(g.size(), 0.0);
    for (int bt = 0; bt < 70 && !accepted; ++bt) {
      for (std::size_t c = 0; c < g.size(); ++c)
        trial[c] = g.active[c] ? u[c] - step * grad[c] : 0.0;
      normalize(trial);
      double et;
      std::vector<double> gt;
      try {
        std::tie(et, gt) = energy_with_gradient(m, g, trial);
      } catch (const invalid_input&) {
        step *= 0.5;  // overshot into the zero function
        continue;
      }
      if (std::isfinite(et) && et < e) {
        double gain = e - et;
        u.swap(trial);
        e = et;
        grad.swap(gt);
        accepted = true;
        out.iterations = it + 1;
        small_gains = gain < 1e-10 * std::max(1.0, e) ? small_gains + 1 : 0;
        if (small_gains >= 8) {
          out.stalled = true;
          it = max_iterations;  // converged for our purposes
        }
      } else if (!std::isfinite(et) && step < 1e-15) {
        throw convergence_failure("minimize: step search failed on non-finite energy", step);
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) {
      out.stalled = true;  // no descent direction left at the smallest step
      break;
    }
  }
  out.lambda = e;
  out.u = std::move(u);
  return out;
}

// ---- flat torus branch (translation-invariant metrics, mean-zero class) --------

struct TorusGrid {
  double length = 0.0;  // side of the square torus
  int n = 0;
  double h = 0.0;
  double sigma = 0.0;  // constant volume density of the invariant metric
};

inline TorusGrid make_torus_grid(const Metric<2>& m, MeasureKind kind, double length, int n,
                                 int indicatrix_order = 64) {
  if (length <= 0.0 || n < 16) throw invalid_input("make_torus_grid: bad size");
  TorusGrid g;
  g.length = length;
  g.n = n;
  g.h = length / n;
  g.sigma = sigma(m, kind, Vec<2>{0.0, 0.0}, indicatrix_order);
  return g;
}

inline std::pair<double, std::vector<double>> torus_energy_with_gradient(
    const Metric<2>& m, const TorusGrid& g, const std::vector<double>& u) {
  std::size_t nn = static_cast<std::size_t>(g.n) * g.n;
  if (u.size() != nn) throw invalid_input("torus_energy: grid and function sizes differ");
  auto idx = [&](int i, int j) {
    return static_cast<std::size_t>((j + g.n) % g.n) * g.n + static_cast<std::size_t>((i + g.n) % g.n);
  };
  double w = g.sigma * g.h * g.h;
  double den = 0.0;
  for (std::size_t c = 0; c < nn; ++c) den += w * u[c] * u[c];
  if (den <= 0.0) throw invalid_input("torus_energy: zero function");

  double num = 0.0;
  std::vector<double> dnum(nn, 0.0);
  const Vec<2> x0{0.0, 0.0};  // translation invariance: evaluate the norm anywhere
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      std::size_t c = idx(i, j);
      Vec<2> xi{(u[idx(i + 1, j)] - u[c]) / g.h, (u[idx(i, j + 1)] - u[c]) / g.h};
      if (xi[0] == 0.0 && xi[1] == 0.0) continue;
      double fs = m.dual_norm(x0, xi);
      num += w * fs * fs;
      Vec<2> ystar = m.dual_argmax(x0, xi);
      double cx = w * 2.0 * fs * ystar[0] / g.h;
      double cy = w * 2.0 * fs * ystar[1] / g.h;
      dnum[c] -= cx + cy;
      dnum[idx(i + 1, j)] += cx;
      dnum[idx(i, j + 1)] += cy;
    }
  double e = num / den;
  std::vector<double> grad(nn);
  for (std::size_t c = 0; c < nn; ++c) grad[c] = (dnum[c] - e * 2.0 * w * u[c]) / den;
  return {e, std::move(grad)};
}

// first nonzero eigenvalue estimate on the square torus: descent in the
// mean-zero class, the mean subtracted after every step.  The quotient of a
// non-quadratic dual norm has several critical basins, so the descent runs
// from a handful of deterministic seeds and keeps the lowest value.
inline double torus_minimize(const Metric<2>& m, MeasureKind kind, double length, int n,
                             int max_iterations = 1500) {
  TorusGrid g = make_torus_grid(m, kind, length, n);
  std::size_t nn = static_cast<std::size_t>(n) * n;

  auto project = [&](std::vector<double>& u) {
    double mean = 0.0;
    for (double v : u) mean += v;
    mean /= static_cast<double>(nn);
    double norm2 = 0.0;
    for (double& v : u) {
      v -= mean;
      norm2 += v * v;
    }
    double s = 1.0 / std::sqrt(norm2 * g.sigma * g.h * g.h);
    for (double& v : u) v *= s;
  };

  auto descend = [&](std::vector<double> u) {
    project(u);
    auto [e, grad] = torus_energy_with_gradient(m, g, u);
    double step = 1.0 / std::max(1.0, e);
    std::vector<double> prev_u, prev_grad, trial(nn);
    int small_gains = 0;
    for (int it = 0; it < max_iterations; ++it) {
      if (!prev_u.empty()) {
        double sy = 0.0, yy = 0.0;
        for (std::size_t c = 0; c < nn; ++c) {
          double du = u[c] - prev_u[c], dg = grad[c] - prev_grad[c];
          sy += du * dg;
          yy += dg * dg;
        }
        if (sy > 0.0 && yy > 0.0) step = std::min(std::max(sy / yy, 1e-12), 1e3);
      }
      prev_u = u;
      prev_grad = grad;
      bool accepted = false;
      for (int bt = 0; bt < 70 && !accepted; ++bt) {
        for (std::size_t c = 0; c < nn; ++c) trial[c] = u[c] - step * grad[c];
        project(trial);
        double et;
        std::vector<double> gt;
        try {
          std::tie(et, gt) = torus_energy_with_gradient(m, g, trial);
        } catch (const invalid_input&) {
          step *= 0.5;
          continue;
        }
        if (std::isfinite(et) && et < e) {
          double gain = e - et;
          u.swap(trial);
          e = et;
          grad.swap(gt);
          accepted = true;
          small_gains = gain < 1e-10 * std::max(1.0, e) ? small_gains + 1 : 0;
          if (small_gains >= 8) it = max_iterations;
        } else {
          step *= 0.5;
          if (step < 1e-18) break;
        }
      }
      if (!accepted) break;
    }
    return e;
  };

  double best = 0.0;
  for (int seed = 0; seed < 4; ++seed) {
    std::vector<double> u(nn);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double cx = std::cos(2.0 * detail::pi * i / n);
        double cy = std::cos(2.0 * detail::pi * j / n);
        double v = 0.0;
        if (seed == 0) v = cx;
        if (seed == 1) v = cy;
        if (seed == 2) v = cx + 0.3 * cy;
        if (seed == 3) v = std::cos(2.0 * detail::pi * (i + 2.0 * j) / n);
        u[static_cast<std::size_t>(j) * n + i] = v;
      }
    double e = descend(std::move(u));
    if (seed == 0 || e < best) best = e;
  }
  return best;
}

// ---- hemisphere reference eigenvalue --------------------------------------------

// First Dirichlet eigenvalue of the n-dimensional round hemisphere whose
// sphere has diameter D (radius D/pi): radial Sturm-Liouville shooting with
// a series start, bisected until the solution vanishes at the equator.  The
// closed-form candidate n (pi/D)^2 must agree to 1e-6; shooting wins.
inline double hemisphere_eigenvalue(int n, double D) {
  if (n < 2) throw invalid_input("hemisphere_eigenvalue: dimension below 2");
  if (!(D > 0.0)) throw invalid_input("hemisphere_eigenvalue: diameter must be positive");
  const double R = D / detail::pi;
  const double end = 0.5 * D;  // geodesic radius of the hemisphere

  auto endpoint = [&](double lam) {
    double eps = 1e-6 * R;
    double c2 = -lam / (2.0 * n);
    double c4 = c2 * (2.0 * (n - 1) / (3.0 * R * R) - lam) / (4.0 * n + 8.0);
    double u = 1.0 + c2 * eps * eps + c4 * eps * eps * eps * eps;
    double up = 2.0 * c2 * eps + 4.0 * c4 * eps * eps * eps;
    auto rhs = [&](double r, double uu, double uup, double* du, double* dup) {
      double cot = std::cos(r / R) / std::sin(r / R);
      *du = uup;
      *dup = -((n - 1) / R) * cot * uup - lam * uu;
    };
    const int steps = 6000;
    double h = (end - eps) / steps, r = eps;
    for (int i = 0; i < steps; ++i) {
      double k1u, k1p, k2u, k2p, k3u, k3p, k4u, k4p;
      rhs(r, u, up, &k1u, &k1p);
      rhs(r + h / 2, u + h / 2 * k1u, up + h / 2 * k1p, &k2u, &k2p);
      rhs(r + h / 2, u + h / 2 * k2u, up + h / 2 * k2p, &k3u, &k3p);
      rhs(r + h, u + h * k3u, up + h * k3p, &k4u, &k4p);
      u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
      up += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
      r += h;
    }
    return u;
  };

  double cand = n * (detail::pi / D) * (detail::pi / D);
  double lo = 0.3 * cand, hi = 2.5 * cand;
  double flo = endpoint(lo), fhi = endpoint(hi);
  if (!(flo > 0.0) || !(fhi < 0.0))
    throw convergence_failure("hemisphere_eigenvalue: bisection bracket failed", flo);
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    (endpoint(mid) > 0.0 ? lo : hi) = mid;
  }
  double lam = 0.5 * (lo + hi);
  if (std::fabs(lam - cand) > 1e-6 * cand)
    throw convergence_failure("hemisphere_eigenvalue: closed-form candidate rejected",
                              std::fabs(lam - cand) / cand);
  return lam;
}

}  // namespace finsler
