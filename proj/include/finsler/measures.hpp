#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "finsler/domain.hpp"
#include "finsler/errors.hpp"
#include "finsler/linalg.hpp"
#include "finsler/metric.hpp"
#include "finsler/quadrature.hpp"

namespace finsler {

enum class MeasureKind { busemann_hausdorff, holmes_thompson };

// Quadrature over the indicatrix {F(x,.) = 1}, parameterized radially over
// the Euclidean sphere.  cone holds the pullback of the Euclidean cone form
// y^i dy^1 ^ ... ^ (dy^i omitted) ^ ... ^ dy^n, so the fiber measure element
// is sqrt(det_g) * cone and the Euclidean enclosed volume is sum(cone)/n.
template <std::size_t N>
struct IndicatrixQuadrature {
  Vec<N> base{};
  std::vector<Vec<N>> nodes;
  std::vector<double> cone;
  std::vector<double> det_g;

  double enclosed_volume() const {
    double s = 0.0;
    for (double c : cone) s += c;
    return s / static_cast<double>(N);
  }

  // total fiber measure, i.e. the integral of 1 against the indicatrix measure
  double total() const {
    double s = 0.0;
    for (std::size_t k = 0; k < cone.size(); ++k) s += std::sqrt(det_g[k]) * cone[k];
    return s;
  }
};

template <std::size_t N>
IndicatrixQuadrature<N> indicatrix_quadrature(const Metric<N>& m, const Vec<N>& x, int order) {
  static_assert(N == 2 || N == 3, "indicatrix_quadrature: dimension 2 or 3");
  if (order < 16) throw invalid_input("indicatrix_quadrature: order below 16");
  IndicatrixQuadrature<N> q;
  q.base = x;
  auto push = [&](const Vec<N>& w, double angular_weight) {
    double r = 1.0 / m.value(x, w);
    Vec<N> node = r * w;
    Mat<N> g = m.fundamental_tensor(x, node);
    double d = det(g);
    if (d <= 0.0) throw ill_conditioned("indicatrix_quadrature: tensor not positive definite", d);
    q.nodes.push_back(node);
    q.cone.push_back(std::pow(r, static_cast<double>(N)) * angular_weight);
    q.det_g.push_back(d);
  };
  if constexpr (N == 2) {
    for (int k = 0; k < order; ++k) {
      double theta = 2.0 * detail::pi * k / order;
      push(detail::direction(theta), 2.0 * detail::pi / order);
    }
  } else {
    Quadrature1D th = gauss_legendre(order / 2, 0.0, detail::pi);
    for (int i = 0; i < order / 2; ++i) {
      double st = std::sin(th.nodes[i]);
      for (int k = 0; k < order; ++k) {
        double phi = 2.0 * detail::pi * k / order;
        push(detail::direction(th.nodes[i], phi), st * th.weights[i] * 2.0 * detail::pi / order);
      }
    }
  }
  return q;
}

inline const char* measure_name(MeasureKind kind) {
  return kind == MeasureKind::busemann_hausdorff ? "busemann-hausdorff" : "holmes-thompson";
}

template <std::size_t N>
double sigma(MeasureKind kind, const IndicatrixQuadrature<N>& q) {
  if (kind == MeasureKind::busemann_hausdorff) return ball_volume(N) / q.enclosed_volume();
  double s = 0.0;
  for (std::size_t k = 0; k < q.cone.size(); ++k) s += q.det_g[k] * q.cone[k];
  return s / sphere_area(N - 1);
}

template <std::size_t N>
double sigma(const Metric<N>& m, MeasureKind kind, const Vec<N>& x, int order = 128) {
  return sigma(kind, indicatrix_quadrature(m, x, order));
}

template <std::size_t N>
double distortion(const Metric<N>& m, const Vec<N>& x, const Vec<N>& y, double sigma_x) {
  double d = det(m.fundamental_tensor(x, y));
  if (d <= 0.0) throw ill_conditioned("distortion: tensor not positive definite", d);
  return std::log(std::sqrt(d) / sigma_x);
}

template <std::size_t N>
double distortion(const Metric<N>& m, MeasureKind kind, const Vec<N>& x, const Vec<N>& y,
                  int order = 128) {
  return distortion(m, x, y, sigma(m, kind, x, order));
}

// The fiber averages of e^tau.  Both components agree because we restrict to
// domains whose geodesics minimize up to the boundary, where the averaged
// sets are the whole indicatrix.
template <std::size_t N>
std::pair<double, double> omega_pm(const Metric<N>& m, MeasureKind kind, const Domain<N>& dom,
                                   const Vec<N>& x, int order = 128) {
  if (!dom.convex_minimizing())
    throw unsupported_domain("omega_pm: domain must have minimizing geodesics up to the boundary");
  IndicatrixQuadrature<N> q = indicatrix_quadrature(m, x, order);
  double s = sigma(kind, q);
  double val = 0.0;
  for (std::size_t k = 0; k < q.cone.size(); ++k) {
    double root = std::sqrt(q.det_g[k]);
    val += (root / s) * root * q.cone[k];
  }
  val /= sphere_area(N - 1);
  return {val, val};
}

// unit normals at a boundary point: first inward, then outward
template <std::size_t N>
std::pair<Vec<N>, Vec<N>> boundary_normals(const Metric<N>& m, const Domain<N>& dom,
                                           const Vec<N>& x) {
  Vec<N> dh = dom.level_gradient(x);
  if (norm(dh) < 1e-12) throw invalid_input("boundary_normals: degenerate level gradient");
  auto unit = [&](const Vec<N>& xi) {
    return (1.0 / m.dual_norm(x, xi)) * m.legendre_inverse(x, xi);
  };
  return {unit(-dh), unit(dh)};
}

template <std::size_t N>
struct BoundaryPoint {
  Vec<N> x{};
  Vec<N> outward_euclid{};  // Euclidean unit outward normal
  double weight = 0.0;      // Euclidean area element
};

// Star-shaped boundary sampling around dom.anchor().
template <std::size_t N>
std::vector<BoundaryPoint<N>> boundary_points(const Domain<N>& dom, int order) {
  static_assert(N == 2 || N == 3, "boundary_points: dimension 2 or 3");
  std::vector<BoundaryPoint<N>> pts;
  Vec<N> a = dom.anchor();
  auto at = [&](const Vec<N>& w) {
    double rho = dom.ray_exit(a, w);
    BoundaryPoint<N> p;
    p.x = a + rho * w;
    Vec<N> dh = dom.level_gradient(p.x);
    p.outward_euclid = (1.0 / norm(dh)) * dh;
    return std::make_pair(p, rho);
  };
  if constexpr (N == 2) {
    pts.reserve(order);
    for (int k = 0; k < order; ++k) {
      double theta = 2.0 * detail::pi * k / order;
      Vec<2> w = detail::direction(theta);
      Vec<2> wt{-w[1], w[0]};
      auto [p, rho] = at(w);
      Vec<2> dh = dom.level_gradient(p.x);
      double denom = dot(dh, w);
      if (std::fabs(denom) < 1e-12 * norm(dh))
        throw ill_conditioned("boundary_points: ray grazes the boundary", denom);
      double drho = -rho * dot(dh, wt) / denom;
      p.weight = std::sqrt(drho * drho + rho * rho) * 2.0 * detail::pi / order;
      pts.push_back(p);
    }
  } else {
    Quadrature1D th = gauss_legendre(order / 2, 0.0, detail::pi);
    pts.reserve(static_cast<std::size_t>(order / 2) * order);
    for (int i = 0; i < order / 2; ++i) {
      double ct = std::cos(th.nodes[i]), st = std::sin(th.nodes[i]);
      for (int k = 0; k < order; ++k) {
        double phi = 2.0 * detail::pi * k / order;
        double cp = std::cos(phi), sp = std::sin(phi);
        Vec<3> w{st * cp, st * sp, ct};
        Vec<3> wth{ct * cp, ct * sp, -st};
        Vec<3> wph{-st * sp, st * cp, 0.0};
        auto [p, rho] = at(w);
        Vec<3> dh = dom.level_gradient(p.x);
        double denom = dot(dh, w);
        if (std::fabs(denom) < 1e-12 * norm(dh))
          throw ill_conditioned("boundary_points: ray grazes the boundary", denom);
        Vec<3> bth = (-rho * dot(dh, wth) / denom) * w + rho * wth;
        Vec<3> bph = (-rho * dot(dh, wph) / denom) * w + rho * wph;
        p.weight = norm(cross(bth, bph)) * th.weights[i] * 2.0 * detail::pi / order;
        pts.push_back(p);
      }
    }
  }
  return pts;
}

template <std::size_t N>
struct DomainPoint {
  Vec<N> x{};
  double weight = 0.0;  // Lebesgue element
};

// Interior quadrature in radial-angular form around dom.anchor().
template <std::size_t N>
std::vector<DomainPoint<N>> domain_points(const Domain<N>& dom, int radial, int angular) {
  static_assert(N == 2 || N == 3, "domain_points: dimension 2 or 3");
  Quadrature1D ru = gauss_legendre(radial, 0.0, 1.0);
  std::vector<DomainPoint<N>> pts;
  Vec<N> a = dom.anchor();
  auto push_ray = [&](const Vec<N>& w, double angular_weight) {
    double rho = dom.ray_exit(a, w);
    for (int j = 0; j < radial; ++j) {
      double u = ru.nodes[j];
      DomainPoint<N> p;
      p.x = a + (u * rho) * w;
      p.weight = std::pow(rho * u, static_cast<double>(N - 1)) * rho * ru.weights[j] * angular_weight;
      pts.push_back(p);
    }
  };
  if constexpr (N == 2) {
    pts.reserve(static_cast<std::size_t>(radial) * angular);
    for (int k = 0; k < angular; ++k)
      push_ray(detail::direction(2.0 * detail::pi * k / angular), 2.0 * detail::pi / angular);
  } else {
    Quadrature1D th = gauss_legendre(angular / 2, 0.0, detail::pi);
    pts.reserve(static_cast<std::size_t>(radial) * (angular / 2) * angular);
    for (int i = 0; i < angular / 2; ++i)
      for (int k = 0; k < angular; ++k)
        push_ray(detail::direction(th.nodes[i], 2.0 * detail::pi * k / angular),
                 std::sin(th.nodes[i]) * th.weights[i] * 2.0 * detail::pi / angular);
  }
  return pts;
}

template <std::size_t N>
double domain_measure(const Metric<N>& m, MeasureKind kind, const Domain<N>& dom,
                      int radial = 48, int angular = 192, int indicatrix_order = 128) {
  double total = 0.0;
  for (const DomainPoint<N>& p : domain_points(dom, radial, angular))
    total += sigma(m, kind, p.x, indicatrix_order) * p.weight;
  return total;
}

// Boundary measure induced by the inward (sign +1) or outward (sign -1)
// normal field: the interior product of the volume form, which in
// coordinates is sigma(x) |<n, nu_e>| against the Euclidean element.
template <std::size_t N>
double boundary_area(const Metric<N>& m, MeasureKind kind, const Domain<N>& dom, int sign,
                     int order = 256, int indicatrix_order = 128) {
  if (sign != 1 && sign != -1) throw invalid_input("boundary_area: sign must be +1 or -1");
  double total = 0.0;
  for (const BoundaryPoint<N>& p : boundary_points(dom, order)) {
    auto [inward, outward] = boundary_normals(m, dom, p.x);
    const Vec<N>& n = sign > 0 ? inward : outward;
    total += sigma(m, kind, p.x, indicatrix_order) *
             std::fabs(dot(n, p.outward_euclid)) * p.weight;
  }
  return total;
}

}  // namespace finsler
