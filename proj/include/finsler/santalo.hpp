#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "finsler/domain.hpp"
#include "finsler/errors.hpp"
#include "finsler/geodesics.hpp"
#include "finsler/measures.hpp"
#include "finsler/metric.hpp"
#include "finsler/parallel.hpp"

namespace finsler {

// Both sides of the boundary flow identity: the phase-space integral of a
// function f(x, y) over the unit sphere bundle equals a boundary integral of
// its line integrals along geodesics, taken either over inward launches (the
// forward flow) or outward ones (the backward flow).

template <std::size_t N>
using FiberFunction = std::function<double(const Vec<N>&, const Vec<N>&)>;

enum class SantaloFormula { inward, outward };

inline const char* formula_name(SantaloFormula f) {
  return f == SantaloFormula::inward ? "inward" : "outward";
}

struct SantaloNodes {
  int boundary = 256;    // boundary points for the right side
  int fiber = 128;       // indicatrix order (full, before hemisphere filtering)
  int radial = 64;       // domain quadrature for the left side
  int angular = 256;
  double dt = 1e-3;      // line integral step
};

inline SantaloNodes halved(SantaloNodes n) {
  n.boundary /= 2;
  n.fiber /= 2;
  n.radial /= 2;
  n.angular /= 2;
  return n;
}

struct SantaloOptions {
  SantaloNodes nodes{};
  int workers = 1;
  bool include_distortion = true;  // drop e^tau from both densities when false
  double tangency_cut = 1e-3;      // hemisphere nodes this close to tangency are dropped
  double t_max = 50.0;
};

struct SantaloReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  SantaloFormula formula = SantaloFormula::inward;
  SantaloNodes nodes{};
  long fiber_kept = 0;     // hemisphere nodes integrated, over all boundary points
  long fiber_dropped = 0;  // near-tangent nodes skipped
  double runtime_seconds = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// phase-space side: the domain integral of the distorted fiber average of f
template <std::size_t N, typename Fn>
double lhs_integral(const MetricPtr<N>& m, MeasureKind kind, const Domain<N>& dom, const Fn& f,
                    const SantaloOptions& opts = {}) {
  if (!dom.convex_minimizing())
    throw unsupported_domain("lhs_integral: domain must have minimizing geodesics");
  std::vector<DomainPoint<N>> pts = domain_points(dom, opts.nodes.radial, opts.nodes.angular);
  const Metric<N>& mm = *m;
  auto cell = [&](std::size_t i) {
    const DomainPoint<N>& p = pts[i];
    IndicatrixQuadrature<N> q = indicatrix_quadrature(mm, p.x, opts.nodes.fiber);
    double sig = sigma(kind, q);
    double inner = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      double fv = f(p.x, q.nodes[k]);
      if (!std::isfinite(fv)) throw invalid_input("lhs_integral: non-finite sample of f");
      double root = std::sqrt(q.det_g[k]);
      double etau = opts.include_distortion ? root / sig : 1.0;
      inner += etau * fv * root * q.cone[k];
    }
    return sig * p.weight * inner;  // d(mu) = sigma dx
  };
  return parallel_sum(pts.size(), opts.workers, cell);
}

namespace detail {

template <std::size_t N>
struct SantaloSide {
  double value = 0.0;
  long kept = 0;
  long dropped = 0;
};

// boundary side: for each boundary point, filter the indicatrix to the
// hemisphere seen by the chosen normal and integrate f along each chord
template <std::size_t N, typename Fn>
SantaloSide<N> rhs_side(const MetricPtr<N>& m, MeasureKind kind, const Domain<N>& dom, const Fn& f,
                        SantaloFormula formula, const SantaloOptions& opts) {
  if (!dom.convex_minimizing())
    throw unsupported_domain("rhs_side: domain must have minimizing geodesics");
  std::vector<BoundaryPoint<N>> pts = boundary_points(dom, opts.nodes.boundary);
  MetricPtr<N> rev = reverse_metric(m);
  const Metric<N>& mm = *m;
  const bool inward_formula = formula == SantaloFormula::inward;

  std::vector<long> kept(pts.size(), 0), dropped(pts.size(), 0);
  auto point_term = [&](std::size_t i) {
    const BoundaryPoint<N>& bp = pts[i];
    auto [n_in, n_out] = boundary_normals(mm, dom, bp.x);
    const Vec<N>& n = inward_formula ? n_in : n_out;
    IndicatrixQuadrature<N> q = indicatrix_quadrature(mm, bp.x, opts.nodes.fiber);
    double sig = sigma(kind, q);
    Mat<N> gn = mm.fundamental_tensor(bp.x, n);
    double acc = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      const Vec<N>& y = q.nodes[k];
      double gv = quad_form(gn, n, y);
      if (gv <= opts.tangency_cut) {
        if (std::fabs(gv) <= opts.tangency_cut) ++dropped[i];
        continue;
      }
      ++kept[i];
      double line;
      if (inward_formula) {
        line = integrate_to_exit(mm, dom, FlowState<N>{bp.x, y}, [&](const FlowState<N>& s) {
                  return f(s.x, s.y);
                }, opts.nodes.dt, opts.t_max).first;
      } else {
        // the backward orbit of y is the forward orbit of -y under the
        // reversed metric, with the velocity flipped back
        line = integrate_to_exit(*rev, dom, FlowState<N>{bp.x, -1.0 * y},
                                 [&](const FlowState<N>& s) { return f(s.x, -1.0 * s.y); },
                                 opts.nodes.dt, opts.t_max).first;
      }
      if (!std::isfinite(line)) throw invalid_input("rhs_side: non-finite line integral");
      double root = std::sqrt(q.det_g[k]);
      double etau = opts.include_distortion ? root / sig : 1.0;
      acc += etau * gv * line * root * q.cone[k];
    }
    // boundary area element of the normal field against the Euclidean one
    return sig * std::fabs(dot(n, bp.outward_euclid)) * bp.weight * acc;
  };

  SantaloSide<N> side;
  side.value = parallel_sum(pts.size(), opts.workers, point_term);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    side.kept += kept[i];
    side.dropped += dropped[i];
  }
  return side;
}

}  // namespace detail

template <std::size_t N, typename Fn>
double rhs_inward(const MetricPtr<N>& m, MeasureKind kind, const Domain<N>& dom, const Fn& f,
                  const SantaloOptions& opts = {}) {
  return detail::rhs_side(m, kind, dom, f, SantaloFormula::inward, opts).value;
}

template <std::size_t N, typename Fn>
double rhs_outward(const MetricPtr<N>& m, MeasureKind kind, const Domain<N>& dom, const Fn& f,
                   const SantaloOptions& opts = {}) {
  return detail::rhs_side(m, kind, dom, f, SantaloFormula::outward, opts).value;
}

// run the left side once and both boundary sides, and grade each pair
template <std::size_t N, typename Fn>
std::array<SantaloReport, 2> verify(const MetricPtr<N>& m, MeasureKind kind, const Domain<N>& dom,
                                    const Fn& f, double tol, const SantaloOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  double lhs = lhs_integral(m, kind, dom, f, opts);
  double lhs_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  std::array<SantaloReport, 2> out;
  const SantaloFormula formulas[2] = {SantaloFormula::inward, SantaloFormula::outward};
  for (int i = 0; i < 2; ++i) {
    auto t1 = clock::now();
    detail::SantaloSide<N> side = detail::rhs_side(m, kind, dom, f, formulas[i], opts);
    SantaloReport& r = out[i];
    r.lhs = lhs;
    r.rhs = side.value;
    r.abs_err = std::fabs(lhs - side.value);
    r.rel_err = r.abs_err / std::max({std::fabs(lhs), std::fabs(side.value), 1e-12});
    r.formula = formulas[i];
    r.nodes = opts.nodes;
    r.fiber_kept = side.kept;
    r.fiber_dropped = side.dropped;
    r.runtime_seconds = lhs_seconds + std::chrono::duration<double>(clock::now() - t1).count();
    r.tol = tol;
    r.pass = r.rel_err <= tol;
  }
  return out;
}

// ---- built-in fiber functions (used by the tests and the driver) ---------------

template <std::size_t N>
struct FiberOne {
  double operator()(const Vec<N>&, const Vec<N>&) const { return 1.0; }
};

template <std::size_t N>
struct FiberCoordinate {
  std::size_t axis = 0;
  double operator()(const Vec<N>&, const Vec<N>& y) const { return y[axis]; }
};

// smooth nonnegative bump in x, tilted in y to exercise the fiber dependence
template <std::size_t N>
struct FiberBump {
  Vec<N> center{};
  double radius = 1.0;
  double operator()(const Vec<N>& x, const Vec<N>& y) const {
    double s = dot(x - center, x - center) / (radius * radius);
    if (s >= 1.0) return 0.0;
    double w = 1.0 - s;
    return w * w * (1.0 + 0.5 * y[0]);
  }
};

}  // namespace finsler
