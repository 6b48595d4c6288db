#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "finsler/domain.hpp"
#include "finsler/errors.hpp"
#include "finsler/linalg.hpp"
#include "finsler/measures.hpp"
#include "finsler/metric.hpp"
#include "finsler/quadrature.hpp"

namespace finsler {

template <std::size_t N>
struct FlowState {
  Vec<N> x{};
  Vec<N> y{};
};

namespace detail {

// one classical 4th-order step of x'' = -2 G(x, x'); h may be negative
template <std::size_t N>
FlowState<N> rk4_step(const Metric<N>& m, const FlowState<N>& s, double h) {
  auto acc = [&](const Vec<N>& x, const Vec<N>& y) { return -2.0 * m.spray(x, y); };
  Vec<N> k1x = s.y, k1y = acc(s.x, s.y);
  Vec<N> k2x = s.y + (0.5 * h) * k1y, k2y = acc(s.x + (0.5 * h) * k1x, k2x);
  Vec<N> k3x = s.y + (0.5 * h) * k2y, k3y = acc(s.x + (0.5 * h) * k2x, k3x);
  Vec<N> k4x = s.y + h * k3y, k4y = acc(s.x + h * k3x, k4x);
  FlowState<N> out;
  out.x = s.x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  out.y = s.y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
  return out;
}

template <std::size_t N>
void renormalize(const Metric<N>& m, FlowState<N>& s) {
  s.y = (1.0 / m.value(s.x, s.y)) * s.y;
}

}  // namespace detail

// unit-speed geodesic flow for time t (either sign), fixed steps of size dt
// with per-step speed renormalization
template <std::size_t N>
FlowState<N> flow(const Metric<N>& m, FlowState<N> s, double t, double dt = 1e-3) {
  if (dt <= 0.0) throw invalid_input("flow: step size must be positive");
  detail::renormalize(m, s);
  double remaining = std::fabs(t), sign = t < 0.0 ? -1.0 : 1.0;
  while (remaining > 1e-15) {
    double h = std::min(dt, remaining);
    s = detail::rk4_step(m, s, sign * h);
    detail::renormalize(m, s);
    remaining -= h;
  }
  return s;
}

template <std::size_t N>
struct ExitRecord {
  double t = 0.0;
  FlowState<N> state{};  // state.x lies on the boundary
};

// integrate f along the forward flow until the domain boundary; returns the
// trapezoid line integral and the exit record.  f takes a FlowState.
template <std::size_t N, typename Fn>
std::pair<double, ExitRecord<N>> integrate_to_exit(const Metric<N>& m, const Domain<N>& dom,
                                                   FlowState<N> s, Fn&& f, double dt = 1e-3,
                                                   double t_max = 50.0) {
  if (dt <= 0.0) throw invalid_input("integrate_to_exit: step size must be positive");
  if (dom.level(s.x) > 1e-9) throw domain_exit("integrate_to_exit: start outside the domain");
  detail::renormalize(m, s);

  // locate the level crossing inside one step from `from`
  auto crossing = [&](const FlowState<N>& from, double h, double lo, double hi) {
    for (int it = 0; it < 90 && (hi - lo) > 1e-16; ++it) {
      double mid = 0.5 * (lo + hi);
      (dom.level(detail::rk4_step(m, from, mid * h).x) < 0.0 ? lo : hi) = mid;
    }
    double alpha = 0.5 * (lo + hi);
    FlowState<N> end = detail::rk4_step(m, from, alpha * h);
    detail::renormalize(m, end);
    return std::make_pair(alpha, end);
  };

  double integral = 0.0, t = 0.0, f_prev = f(s);
  bool inside = dom.level(s.x) < -1e-12;
  while (t < t_max) {
    double h = std::min(dt, t_max - t);
    FlowState<N> next = detail::rk4_step(m, s, h);
    detail::renormalize(m, next);
    double hn = dom.level(next.x);
    if (hn >= 0.0) {
      if (inside) {
        auto [alpha, end] = crossing(s, h, 0.0, 1.0);
        integral += 0.5 * alpha * h * (f_prev + f(end));
        return {integral, ExitRecord<N>{t + alpha * h, end}};
      }
      // started on the boundary and never entered: find the interior dip, if
      // any, then the crossing beyond it (near-tangent launches)
      double a = 0.0, b = 1.0;
      const double gr = 0.6180339887498949;
      double c = b - gr * (b - a), d = a + gr * (b - a);
      auto lv = [&](double u) { return dom.level(detail::rk4_step(m, s, u * h).x); };
      double fc = lv(c), fd = lv(d);
      for (int it = 0; it < 60; ++it) {
        if (fc < fd) {
          b = d; d = c; fd = fc; c = b - gr * (b - a); fc = lv(c);
        } else {
          a = c; c = d; fc = fd; d = a + gr * (b - a); fd = lv(d);
        }
      }
      double dip = 0.5 * (a + b);
      if (lv(dip) >= -1e-12) {
        // grazing launch: zero-length chord
        FlowState<N> end = s;
        return {0.0, ExitRecord<N>{t, end}};
      }
      auto [alpha, end] = crossing(s, h, dip, 1.0);
      integral += 0.5 * alpha * h * (f_prev + f(end));
      return {integral, ExitRecord<N>{t + alpha * h, end}};
    }
    if (hn < -1e-12) inside = true;
    double f_next = f(next);
    integral += 0.5 * h * (f_prev + f_next);
    f_prev = f_next;
    s = next;
    t += h;
  }
  throw runaway_flow("integrate_to_exit: no boundary crossing", t_max);
}

template <std::size_t N>
ExitRecord<N> exit_time(const Metric<N>& m, const Domain<N>& dom, const FlowState<N>& s,
                        double dt = 1e-3, double t_max = 50.0) {
  return integrate_to_exit(m, dom, s, [](const FlowState<N>&) { return 0.0; }, dt, t_max).second;
}

// ---- variational flow and the polar volume density ----------------------------

namespace detail {

// directional derivative of the spray along the tangent-bundle direction (dx, dy)
template <std::size_t N>
Vec<N> spray_derivative(const Metric<N>& m, const Vec<N>& x, const Vec<N>& y, const Vec<N>& dx,
                        const Vec<N>& dy) {
  double scale = std::max({1e-12, norm(dx), norm(dy)});
  double eps = 1e-5 / scale;
  Vec<N> gp = m.spray(x + eps * dx, y + eps * dy);
  Vec<N> gm = m.spray(x - eps * dx, y - eps * dy);
  return (0.5 / eps) * (gp - gm);
}

template <std::size_t N>
struct VariationalState {
  FlowState<N> base{};
  std::array<Vec<N>, N - 1> J{};
  std::array<Vec<N>, N - 1> Jd{};
};

// one step of the flow coupled with its linearization J'' = -2 dG[(J, J')]
template <std::size_t N>
VariationalState<N> variational_step(const Metric<N>& m, const VariationalState<N>& s, double h) {
  auto deriv = [&](const VariationalState<N>& q) {
    VariationalState<N> d;
    d.base.x = q.base.y;
    d.base.y = -2.0 * m.spray(q.base.x, q.base.y);
    for (std::size_t a = 0; a + 1 < N; ++a) {
      d.J[a] = q.Jd[a];
      d.Jd[a] = -2.0 * spray_derivative(m, q.base.x, q.base.y, q.J[a], q.Jd[a]);
    }
    return d;
  };
  auto advance = [&](const VariationalState<N>& q, const VariationalState<N>& d, double c) {
    VariationalState<N> out;
    out.base.x = q.base.x + c * d.base.x;
    out.base.y = q.base.y + c * d.base.y;
    for (std::size_t a = 0; a + 1 < N; ++a) {
      out.J[a] = q.J[a] + c * d.J[a];
      out.Jd[a] = q.Jd[a] + c * d.Jd[a];
    }
    return out;
  };
  VariationalState<N> k1 = deriv(s);
  VariationalState<N> k2 = deriv(advance(s, k1, 0.5 * h));
  VariationalState<N> k3 = deriv(advance(s, k2, 0.5 * h));
  VariationalState<N> k4 = deriv(advance(s, k3, h));
  VariationalState<N> out = s;
  out = advance(out, k1, h / 6.0);
  out = advance(out, k2, h / 3.0);
  out = advance(out, k3, h / 3.0);
  out = advance(out, k4, h / 6.0);
  return out;
}

}  // namespace detail

// basis of the tangent space of the indicatrix at y, orthonormal in g_y
template <std::size_t N>
std::array<Vec<N>, N - 1> indicatrix_frame(const Metric<N>& m, const Vec<N>& x, const Vec<N>& y) {
  Mat<N> g = m.fundamental_tensor(x, y);
  double gyy = quad_form(g, y, y);
  std::array<Vec<N>, N - 1> frame{};
  std::size_t filled = 0;
  for (std::size_t i = 0; i < N && filled + 1 < N; ++i) {
    Vec<N> v{};
    v[i] = 1.0;
    v = v - (quad_form(g, y, v) / gyy) * y;
    for (std::size_t a = 0; a < filled; ++a)
      v = v - quad_form(g, frame[a], v) * frame[a];
    double len = std::sqrt(std::max(0.0, quad_form(g, v, v)));
    if (len < 1e-8) continue;  // axis too close to y, take the next one
    frame[filled++] = (1.0 / len) * v;
  }
  if (filled + 1 != N) throw ill_conditioned("indicatrix_frame: degenerate tensor", 0.0);
  return frame;
}

namespace detail {

template <std::size_t N>
double frame_determinant(const Vec<N>& lead, const std::array<Vec<N>, N - 1>& cols) {
  Mat<N> m{};
  for (std::size_t i = 0; i < N; ++i) {
    m(i, 0) = lead[i];
    for (std::size_t a = 0; a + 1 < N; ++a) m(i, a + 1) = cols[a][i];
  }
  return det(m);
}

}  // namespace detail

// density of the volume form in polar coordinates about x, written against
// dr and the indicatrix measure of the launch direction; the volume density
// of the base measure cancels, which keeps this measure independent.
// Returns samples (t, value) every dt up to `length`, starting at (0, 0).
template <std::size_t N>
std::vector<std::pair<double, double>> polar_density_profile(const Metric<N>& m, const Vec<N>& x,
                                                             const Vec<N>& y, double length,
                                                             double dt = 1e-3) {
  if (length <= 0.0) throw invalid_input("polar_density_profile: length must be positive");
  detail::VariationalState<N> s;
  s.base.x = x;
  s.base.y = (1.0 / m.value(x, y)) * y;
  s.J = {};
  s.Jd = indicatrix_frame(m, x, s.base.y);

  const double det0 = detail::frame_determinant(s.base.y, s.Jd);
  const double root0 = std::sqrt(det(m.fundamental_tensor(x, s.base.y)));

  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(length / dt) + 2);
  out.emplace_back(0.0, 0.0);
  double t = 0.0;
  while (t < length - 1e-15) {
    double h = std::min(dt, length - t);
    s = detail::variational_step(m, s, h);
    detail::renormalize(m, s.base);
    t += h;
    double dj = detail::frame_determinant(s.base.y, s.J) / det0;
    if (dj < -1e-9) throw conjugate_point(t);
    double rootg = std::sqrt(det(m.fundamental_tensor(s.base.x, s.base.y)));
    out.emplace_back(t, rootg * dj / root0);
  }
  return out;
}

// single-value polar density evaluated with an explicit base measure: the
// literal product of e^tau at the endpoint and the measure's polar Jacobian
template <std::size_t N>
double polar_density(const Metric<N>& m, MeasureKind kind, const Vec<N>& x, const Vec<N>& y,
                     double r, double dt = 1e-3, int indicatrix_order = 128) {
  std::vector<std::pair<double, double>> prof = polar_density_profile(m, x, y, r, dt);
  double cancelled = prof.back().second;
  // re-introduce the measure density at both ends: sigma at the endpoint
  // enters the Jacobian, e^tau divides it back out
  FlowState<N> end = flow(m, FlowState<N>{x, y}, r, dt);
  double s_end = sigma(m, kind, end.x, indicatrix_order);
  double tau_end = distortion(m, end.x, end.y, s_end);
  double root_end = std::sqrt(det(m.fundamental_tensor(end.x, end.y)));
  double jac = cancelled * s_end / root_end;  // the measure's polar Jacobian
  return std::exp(tau_end) * jac;
}

// inner double integral of the polar density along a unit-speed geodesic:
// integral over r in (0, l) of integral over t in (0, l - r) of the density
// launched at the flow point at r
template <std::size_t N>
double polar_density_double_integral(const Metric<N>& m, const Vec<N>& x, const Vec<N>& y,
                                     double length, int outer_order = 32, double dt = 1e-3) {
  Quadrature1D outer = gauss_legendre(outer_order, 0.0, length);
  double total = 0.0;
  for (int i = 0; i < outer_order; ++i) {
    FlowState<N> s = flow(m, FlowState<N>{x, y}, outer.nodes[i], dt);
    double inner_len = length - outer.nodes[i];
    if (inner_len <= dt) continue;
    auto prof = polar_density_profile(m, s.x, s.y, inner_len, dt);
    double inner = 0.0;
    for (std::size_t k = 1; k < prof.size(); ++k)
      inner += 0.5 * (prof[k].first - prof[k - 1].first) * (prof[k].second + prof[k - 1].second);
    total += outer.weights[i] * inner;
  }
  return total;
}

// ---- distances -----------------------------------------------------------------

// length of the straight segment from a to b; this is the distance exactly
// when straight chart lines are geodesics
template <std::size_t N>
double chord_length(const Metric<N>& m, const Vec<N>& a, const Vec<N>& b, int order = 64) {
  Vec<N> d = b - a;
  if (norm(d) == 0.0) return 0.0;
  Quadrature1D q = gauss_legendre(order, 0.0, 1.0);
  double len = 0.0;
  for (int i = 0; i < order; ++i) len += q.weights[i] * m.value(a + q.nodes[i] * d, d);
  return len;
}

// flow time from a to b found by shooting over the launch angle; the miss
// distance at the closest approach must fall below arrive_tol
inline double flow_distance(const Metric<2>& m, const Vec<2>& a, const Vec<2>& b,
                            double dt = 1e-3, double arrive_tol = 1e-4, double t_max = 10.0,
                            double window = 0.2) {
  if (norm(b - a) == 0.0) return 0.0;

  // closest approach to b along the flow launched at angle theta
  auto closest = [&](double theta) {
    FlowState<2> s{a, detail::direction(theta)};
    detail::renormalize(m, s);
    double best = norm(s.x - b), best_t = 0.0;
    FlowState<2> prev = s, at_best = s;
    double t = 0.0, t_prev_best = 0.0;
    while (t < t_max) {
      FlowState<2> next;
      try {
        next = detail::rk4_step(m, s, dt);
        detail::renormalize(m, next);
      } catch (const error&) {
        break;  // left the metric's chart; treat as a miss
      }
      t += dt;
      double d = norm(next.x - b);
      if (d < best) {
        best = d;
        best_t = t;
        t_prev_best = t - dt;
        at_best = prev;
      }
      prev = s = next;
      if (d > best + 0.5) break;  // moving away for good
    }
    // refine within the bracketing step by golden section on the substep
    double lo = 0.0, hi = std::min(2.0 * dt, t_max - t_prev_best);
    const double gr = 0.6180339887498949;
    double c = hi - gr * hi, d2 = gr * hi;
    auto miss = [&](double u) { return norm(detail::rk4_step(m, at_best, u).x - b); };
    double fc = miss(c), fd = miss(d2);
    for (int it = 0; it < 50; ++it) {
      if (fc < fd) {
        hi = d2; d2 = c; fd = fc; c = hi - gr * (hi - lo); fc = miss(c);
      } else {
        lo = c; c = d2; fc = fd; d2 = lo + gr * (hi - lo); fd = miss(d2);
      }
    }
    double u = 0.5 * (c + d2);
    return std::make_pair(miss(u), t_prev_best + u);
  };

  double aim = std::atan2(b[1] - a[1], b[0] - a[0]);
  double lo = aim - window, hi = aim + window;
  const double gr = 0.6180339887498949;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = closest(c).first, fd = closest(d).first;
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      hi = d; d = c; fd = fc; c = hi - gr * (hi - lo); fc = closest(c).first;
    } else {
      lo = c; c = d; fc = fd; d = lo + gr * (hi - lo); fd = closest(d).first;
    }
  }
  auto [miss, t] = closest(0.5 * (c + d));
  if (miss > arrive_tol)
    throw convergence_failure("flow_distance: shooting failed to reach the target", miss);
  return t;
}

// diameter of a star-shaped planar domain: max flow distance over ordered
// pairs of near-boundary ring points
inline double flow_diameter(const Metric<2>& m, const Domain<2>& dom, int ring = 12,
                            double dt = 1e-3, double arrive_tol = 1e-4) {
  std::vector<Vec<2>> pts;
  Vec<2> anchor = dom.anchor();
  for (int k = 0; k < ring; ++k) {
    Vec<2> w = detail::direction(2.0 * detail::pi * k / ring);
    double rho = dom.ray_exit(anchor, w);
    pts.push_back(anchor + (rho * (1.0 - 1e-6)) * w);
  }
  double best = 0.0, tmax = 10.0;
  for (int i = 0; i < ring; ++i)
    for (int j = 0; j < ring; ++j) {
      if (i == j) continue;
      best = std::max(best, flow_distance(m, pts[i], pts[j], dt, arrive_tol, tmax));
    }
  return best;
}

}  // namespace finsler
