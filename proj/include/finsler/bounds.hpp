#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "finsler/domain.hpp"
#include "finsler/errors.hpp"
#include "finsler/geodesics.hpp"
#include "finsler/linalg.hpp"
#include "finsler/measures.hpp"
#include "finsler/metric.hpp"
#include "finsler/quadrature.hpp"
#include "finsler/spectral.hpp"

namespace finsler {

// ---- closed forms for the Funk ball Omega_r ---------------------------------

struct FunkReference {
  int n = 0;
  double r = 0.0;
  double mu_bh = 0.0;    // Busemann-Hausdorff volume (c_{n-1}/n) r^n
  double a_plus = 0.0;   // boundary measure, inward normals: c_{n-1} (1+r) r^{n-1}
  double a_minus = 0.0;  // boundary measure, outward normals: c_{n-1} (1-r) r^{n-1}
  double lambda = 0.0;   // uniformity sup ((1+r)/(1-r))^2
  double diam = 0.0;     // forward diameter log((1+r)/(1-r))
  double omega = 1.0;    // infimum of the fiber averages of e^tau
};

inline FunkReference funk_reference(int n, double r) {
  if (n < 2) throw invalid_input("funk_reference: dimension below 2");
  if (!(r > 0.0) || !(r < 1.0)) throw invalid_input("funk_reference: radius outside (0,1)");
  FunkReference f;
  f.n = n;
  f.r = r;
  double c = sphere_area(n - 1);
  f.mu_bh = c / n * std::pow(r, n);
  f.a_plus = c * (1.0 + r) * std::pow(r, n - 1);
  f.a_minus = c * (1.0 - r) * std::pow(r, n - 1);
  f.lambda = ((1.0 + r) / (1.0 - r)) * ((1.0 + r) / (1.0 - r));
  f.diam = std::log((1.0 + r) / (1.0 - r));
  f.omega = 1.0;
  return f;
}

// ---- inequality reports ------------------------------------------------------

// satisfied means lhs >= rhs; the relative 1e-12 slack keeps the
// exact-equality cases (Euclidean norms) deterministic under float noise
struct BoundsReport {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  double margin = 0.0;  // lhs - rhs, unslacked
  std::map<std::string, double> inputs;
};

inline BoundsReport make_bounds_report(std::string id, double lhs, double rhs,
                                       std::map<std::string, double> inputs) {
  BoundsReport rep;
  rep.id = std::move(id);
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.margin = lhs - rhs;
  double scale = std::max({std::fabs(lhs), std::fabs(rhs), 1.0});
  rep.satisfied = lhs >= rhs - 1e-12 * scale;
  rep.inputs = std::move(inputs);
  return rep;
}

// ---- eigenvalue comparison ----------------------------------------------------

// first-eigenvalue floor through the hemisphere of matching diameter,
// discounted by a power of the uniformity constant: 4n+1 for
// Busemann-Hausdorff, 2n+1 for Holmes-Thompson
inline double eigenvalue_comparison_bound(int n, double D, double Lambda, MeasureKind kind) {
  if (n < 2) throw invalid_input("eigenvalue_comparison_bound: dimension below 2");
  if (!(D > 0.0)) throw invalid_input("eigenvalue_comparison_bound: diameter must be positive");
  if (!(Lambda >= 1.0)) throw invalid_input("eigenvalue_comparison_bound: uniformity below 1");
  double expo = kind == MeasureKind::busemann_hausdorff ? 4.0 * n + 1.0 : 2.0 * n + 1.0;
  return hemisphere_eigenvalue(n, D) / std::pow(Lambda, expo);
}

// ---- measured domain profile --------------------------------------------------

struct DomainProfile {
  double mu = 0.0;        // volume
  double a_plus = 0.0;    // boundary measure, inward normals
  double a_minus = 0.0;   // boundary measure, outward normals
  double diameter = 0.0;  // sup of flow distances over a boundary ring
  double omega = 0.0;     // sample min of the fiber averages of e^tau
  double lambda = 1.0;    // sample max of the pointwise uniformity
  double sample_spacing = 0.0;
};

// The omega infimum and the Lambda sup run over an interior grid plus a
// boundary ring; the uniformity of ball-like domains peaks on the boundary,
// which an interior sample alone undershoots.  Pass diameter_override > 0 to
// reuse a diameter measured earlier (it does not depend on the measure).
inline DomainProfile domain_profile(const Metric<2>& m, MeasureKind kind, const Domain<2>& dom,
                                    int grid = 32, int boundary_order = 256,
                                    int indicatrix_order = 128, int diameter_ring = 12,
                                    double diameter_override = 0.0) {
  if (grid < 4) throw invalid_input("domain_profile: grid below 4");
  DomainProfile p;
  p.mu = domain_measure(m, kind, dom, 48, 192, indicatrix_order);
  p.a_plus = boundary_area(m, kind, dom, +1, boundary_order, indicatrix_order);
  p.a_minus = boundary_area(m, kind, dom, -1, boundary_order, indicatrix_order);
  p.diameter = diameter_override > 0.0 ? diameter_override : flow_diameter(m, dom, diameter_ring);

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  Vec<2> anchor = dom.anchor();
  for (int k = 0; k < 256; ++k) {
    Vec<2> w = detail::direction(2.0 * detail::pi * k / 256);
    Vec<2> q = anchor + dom.ray_exit(anchor, w) * w;
    xmin = std::min(xmin, q[0]);
    xmax = std::max(xmax, q[0]);
    ymin = std::min(ymin, q[1]);
    ymax = std::max(ymax, q[1]);
  }
  double hx = (xmax - xmin) / grid, hy = (ymax - ymin) / grid;
  p.sample_spacing = std::max(hx, hy);

  double omega_min = 1e300, lambda_max = 1.0;
  auto sample = [&](const Vec<2>& x) {
    auto [op, om] = omega_pm(m, kind, dom, x, indicatrix_order);
    omega_min = std::min({omega_min, op, om});
    lambda_max = std::max(lambda_max, constants_at(m, x, 64).uniformity);
  };
  // the anchor is in every sample: on ball-like domains it carries the
  // distortion infimum, which an even cell-center grid straddles
  sample(anchor);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      Vec<2> x{xmin + (i + 0.5) * hx, ymin + (j + 0.5) * hy};
      if (dom.contains(x)) sample(x);
    }
  for (const BoundaryPoint<2>& b : boundary_points(dom, 64)) sample(b.x);
  p.omega = omega_min;
  p.lambda = lambda_max;
  return p;
}

// ---- boundary-to-volume ratio bounds -------------------------------------------

// two floors for min{A_+, A_-}: one against mu with the constant
// (n-1) c_{n-1} omega / (c_{n-2} D Lambda^{2n+1/2}), one against mu^{1-1/n}
// with c_{n-1} omega^{1+1/n} / ((c_n/2)^{1-1/n} Lambda^{2n+5/2})
inline std::array<BoundsReport, 2> area_ratio_reports(int n, const DomainProfile& p) {
  if (n < 2) throw invalid_input("area_ratio_reports: dimension below 2");
  if (!(p.mu > 0.0) || !(p.diameter > 0.0) || !(p.omega > 0.0) || !(p.lambda >= 1.0))
    throw invalid_input("area_ratio_reports: profile out of range");
  double cn = sphere_area(n), cn1 = sphere_area(n - 1), cn2 = sphere_area(n - 2);
  double amin = std::min(p.a_plus, p.a_minus);
  std::map<std::string, double> in{{"n", double(n)},          {"mu", p.mu},
                                   {"a_plus", p.a_plus},      {"a_minus", p.a_minus},
                                   {"diameter", p.diameter},  {"omega", p.omega},
                                   {"lambda", p.lambda},      {"sample_spacing", p.sample_spacing}};
  double rhs1 =
      (n - 1.0) * cn1 * p.omega / (cn2 * p.diameter * std::pow(p.lambda, 2.0 * n + 0.5));
  double rhs2 = cn1 * std::pow(p.omega, 1.0 + 1.0 / n) /
                (std::pow(0.5 * cn, 1.0 - 1.0 / n) * std::pow(p.lambda, 2.0 * n + 2.5));
  return {make_bounds_report("area-per-volume", amin / p.mu, rhs1, in),
          make_bounds_report("isoperimetric-ratio", amin / std::pow(p.mu, 1.0 - 1.0 / n), rhs2,
                             in)};
}

inline std::array<BoundsReport, 2> area_ratio_reports(const Metric<2>& m, MeasureKind kind,
                                                      const Domain<2>& dom) {
  return area_ratio_reports(2, domain_profile(m, kind, dom));
}

// ---- boundary hemisphere flux ---------------------------------------------------

// the flux of e^tau through either normal hemisphere of the indicatrix at a
// boundary point stays below (c_{n-2}/(n-1)) Lambda(x)^{2n+1/2}; equality
// picks out Euclidean norms
inline BoundsReport hemisphere_flux_check(const Metric<2>& m, MeasureKind kind,
                                          const Domain<2>& dom, const Vec<2>& x,
                                          int order = 512) {
  if (std::fabs(dom.level(x)) > 1e-6)
    throw invalid_input("hemisphere_flux_check: point not on the boundary");
  const int n = 2;
  IndicatrixQuadrature<2> q = indicatrix_quadrature(m, x, order);
  double sig = sigma(kind, q);
  auto [inward, outward] = boundary_normals(m, dom, x);
  auto flux = [&](const Vec<2>& nrm) {
    Mat<2> g = m.fundamental_tensor(x, nrm);
    double acc = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      double gv = quad_form(g, nrm, q.nodes[k]);
      if (gv <= 0.0) continue;
      acc += gv * (q.det_g[k] / sig) * q.cone[k];
    }
    return acc;
  };
  double fp = flux(inward), fm = flux(outward);
  double lam = constants_at(m, x, 64).uniformity;
  double lhs = sphere_area(n - 2) / (n - 1.0) * std::pow(lam, 2.0 * n + 0.5);
  std::map<std::string, double> in{{"n", double(n)},
                                   {"flux_plus", fp},
                                   {"flux_minus", fm},
                                   {"lambda_x", lam},
                                   {"order", double(order)}};
  return make_bounds_report("hemisphere-flux", lhs, std::max(fp, fm), in);
}

// ---- dual norm second moment -----------------------------------------------------

// F*(xi)^2 dominates the fiber second moment of <y, xi> scaled by
// n / (c_{n-1} Lambda(x)^{n+1}); equality again picks out Euclidean norms
inline BoundsReport dual_moment_check(const Metric<2>& m, const Vec<2>& x, const Vec<2>& xi,
                                      int order = 512) {
  if (norm(xi) == 0.0) throw invalid_input("dual_moment_check: zero covector");
  const int n = 2;
  IndicatrixQuadrature<2> q = indicatrix_quadrature(m, x, order);
  double moment = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    double pair = dot(q.nodes[k], xi);
    moment += pair * pair * std::sqrt(q.det_g[k]) * q.cone[k];
  }
  double lam = constants_at(m, x, 64).uniformity;
  double fs = m.dual_norm(x, xi);
  double rhs = n / (sphere_area(n - 1) * std::pow(lam, n + 1.0)) * moment;
  std::map<std::string, double> in{{"n", double(n)},
                                   {"moment", moment},
                                   {"lambda_x", lam},
                                   {"dual_norm", fs},
                                   {"order", double(order)}};
  return make_bounds_report("dual-second-moment", fs * fs, rhs, in);
}

// ---- diameter/volume comparison bounds --------------------------------------------

// s_k: the solution of s'' + k s = 0 with s(0) = 0, s'(0) = 1
inline double comparison_sine(double k, double t) {
  if (k > 0.0) {
    double s = std::sqrt(k);
    return std::sin(s * t) / s;
  }
  if (k < 0.0) {
    double s = std::sqrt(-k);
    return std::sinh(s * t) / s;
  }
  return t;
}

struct ComparisonVolumeInputs {
  double k = 0.0;       // curvature floor in the (n-1)k convention
  double D = 0.0;       // diameter
  double lambda = 1.0;  // uniformity constant
  int n = 2;
  double V = 0.0;  // total volume
};

struct ComparisonBounds {
  double lambda_bound = 0.0;   // first nonzero eigenvalue
  double sobolev_bound = 0.0;  // Sobolev-type constant
};

// Both formulas are measure independent, so there is no measure parameter.
// For k > 0 the integrand turns negative past the conjugate length pi/sqrt(k),
// where no diameter can reach anyway; reject instead of integrating junk.
inline ComparisonBounds comparison_bounds(const ComparisonVolumeInputs& in) {
  if (in.n < 2) throw invalid_input("comparison_bounds: dimension below 2");
  if (!(in.D > 0.0)) throw invalid_input("comparison_bounds: diameter must be positive");
  if (!(in.lambda >= 1.0)) throw invalid_input("comparison_bounds: uniformity below 1");
  if (!(in.V > 0.0)) throw invalid_input("comparison_bounds: volume must be positive");
  if (in.k > 0.0 && in.D > detail::pi / std::sqrt(in.k) * (1.0 + 1e-12))
    throw invalid_input("comparison_bounds: diameter beyond the conjugate length");
  int n = in.n;
  double I = simpson([&](double t) { return std::pow(comparison_sine(in.k, t), n - 1.0); }, 0.0,
                     in.D, 1024);
  double cn = sphere_area(n), cn1 = sphere_area(n - 1), cn2 = sphere_area(n - 2);
  ComparisonBounds out;
  double h = (n - 1.0) * in.V / (4.0 * cn2 * std::pow(in.lambda, 4.0 * n + 1.0) * in.D * I);
  out.lambda_bound = h * h;
  out.sobolev_bound =
      std::pow(in.V, n + 1.0) / (4.0 * cn1 * std::pow(cn, n - 1.0) *
                                 std::pow(in.lambda, 4.0 * n * n + 4.5 * n) * std::pow(I, n + 1.0));
  return out;
}

// ---- small forward balls ------------------------------------------------------------

struct SmallBallBounds {
  double volume_bound = 0.0;
  double area_bound = 0.0;
};

// valid below the injectivity threshold r < i_M / (1 + sqrt(Lambda)); the
// constant combines the isoperimetric ratio with the omega floor of the
// measure: Lambda^{-2n} for Busemann-Hausdorff, 1 for Holmes-Thompson
inline SmallBallBounds small_ball_bounds(int n, double Lambda, double r, MeasureKind kind) {
  if (n < 2) throw invalid_input("small_ball_bounds: dimension below 2");
  if (!(Lambda >= 1.0)) throw invalid_input("small_ball_bounds: uniformity below 1");
  if (!(r > 0.0)) throw invalid_input("small_ball_bounds: radius must be positive");
  double floor = kind == MeasureKind::busemann_hausdorff ? std::pow(Lambda, -2.0 * n) : 1.0;
  double C = sphere_area(n - 1) * std::pow(floor, 1.0 + 1.0 / n) /
             (std::pow(0.5 * sphere_area(n), 1.0 - 1.0 / n) * std::pow(Lambda, 2.0 * n + 2.5));
  SmallBallBounds out;
  out.volume_bound = C / std::pow(double(n), n) * std::pow(r, n);
  out.area_bound = C / std::pow(double(n), n - 1.0) * std::pow(r, n - 1.0);
  return out;
}

// Berger-Kazdan floor for the chord double integral of the polar density
// along a geodesic of length l
inline double berger_kazdan_floor(int n, double l) {
  if (n < 2) throw invalid_input("berger_kazdan_floor: dimension below 2");
  if (!(l > 0.0)) throw invalid_input("berger_kazdan_floor: length must be positive");
  return detail::pi * sphere_area(n) / (2.0 * sphere_area(n - 1)) *
         std::pow(l / detail::pi, n + 1.0);
}

// ---- splitting candidates on the flat square torus -----------------------------------

// Gamma = {x0 = a} union {x0 = b}, cutting the square torus of side L into
// two strips M1 = {a < x0 < b} and M2
struct TorusSplit {
  double a = 0.0;
  double b = 0.0;
};

struct SplitReport {
  TorusSplit split;
  double a_plus = 0.0;   // boundary measure of Gamma, inward normals
  double a_minus = 0.0;  // outward; equal to a_plus for two-circle splits
  double mu1 = 0.0;
  double mu2 = 0.0;
  double cheeger = 0.0;           // min{A} / min{mu}
  double iso = 0.0;               // min{A}^n / min{mu}^{n-1}
  std::vector<double> energies;   // ramp energy per epsilon, caller order
  double energy_limit = 0.0;      // extrapolated limit of the ramp energies
  double sobolev = 0.0;           // candidate quotient from the finest ramp
  BoundsReport chain;             // 2 min{A}^n >= sobolev * min{mu}^{n-1}
};

// Candidate values of the splitting constants on a translation-invariant
// torus metric.  The ramp functions rise linearly with the distance from
// Gamma inside M1; their energies converge to the inward boundary measure of
// Gamma, and the quotient of the finest ramp feeds the chain report.  On the
// half split the chain is an equality in the limit and the finite ramp lands
// a hair below it, so assert the chain only on uneven splits.
inline std::vector<SplitReport> split_candidates(const Metric<2>& m, MeasureKind kind,
                                                 double length,
                                                 const std::vector<TorusSplit>& splits,
                                                 const std::vector<double>& eps,
                                                 int grid_n = 192) {
  if (!(length > 0.0)) throw invalid_input("split_candidates: length must be positive");
  if (grid_n < 32) throw invalid_input("split_candidates: grid below 32");
  if (eps.empty()) throw invalid_input("split_candidates: no ramp widths");
  for (double e : eps)
    if (!(e > 0.0)) throw invalid_input("split_candidates: ramp width must be positive");

  // the construction reads the metric at the origin only; probe invariance
  {
    Vec<2> probe{0.31 * length, 0.77 * length};
    for (const Vec<2>& y : {Vec<2>{1.0, 0.0}, Vec<2>{0.4, -0.9}}) {
      double v0 = m.value(Vec<2>{0.0, 0.0}, y), v1 = m.value(probe, y);
      if (std::fabs(v1 - v0) > 1e-9 * std::max(1.0, v0))
        throw invalid_input("split_candidates: metric is not translation invariant");
    }
  }

  const Vec<2> x0{0.0, 0.0};
  double sig = sigma(m, kind, x0, 256);
  double fsp = m.dual_norm(x0, Vec<2>{1.0, 0.0});   // speed of the ramp rising rightward
  double fsm = m.dual_norm(x0, Vec<2>{-1.0, 0.0});  // and leftward
  double h = length / grid_n;
  const int n = 2;

  std::vector<SplitReport> out;
  for (const TorusSplit& sp : splits) {
    if (!(sp.a >= 0.0) || !(sp.b > sp.a) || !(sp.b < length))
      throw invalid_input("split_candidates: split circles out of order");
    double width = sp.b - sp.a;
    for (double e : eps)
      if (e * (fsp + fsm) >= 0.9 * width)
        throw invalid_input("split_candidates: ramp wider than the strip");

    SplitReport rep;
    rep.split = sp;
    // each normal orientation crosses one rightward and one leftward circle,
    // so the two boundary measures coincide
    rep.a_plus = sig * length * (fsp + fsm);
    rep.a_minus = rep.a_plus;
    rep.mu1 = sig * length * width;
    rep.mu2 = sig * length * (length - width);
    double mu_min = std::min(rep.mu1, rep.mu2);
    double a_min = std::min(rep.a_plus, rep.a_minus);
    rep.cheeger = a_min / mu_min;
    rep.iso = std::pow(a_min, n) / std::pow(mu_min, n - 1.0);

    // ramp profile along x0; distance from Gamma into M1 is linear with
    // slopes 1/fsp from the left circle and 1/fsm from the right one
    auto ramp = [&](double x, double e) {
      if (x <= sp.a || x >= sp.b) return 0.0;
      double rho = std::min((x - sp.a) / fsp, (sp.b - x) / fsm);
      return std::min(1.0, rho / e);
    };

    double e_finest = *std::min_element(eps.begin(), eps.end());
    double sob = 0.0;
    for (double e : eps) {
      std::vector<double> fcol(grid_n);
      for (int i = 0; i < grid_n; ++i) fcol[i] = ramp(i * h, e);
      // every row repeats the column profile, hence the grid_n multiplier
      double energy = 0.0;
      for (int i = 0; i < grid_n; ++i) {
        double d = fcol[(i + 1) % grid_n] - fcol[i];
        if (d == 0.0) continue;
        energy += sig * h * h * grid_n * m.dual_norm(x0, Vec<2>{d / h, 0.0});
      }
      rep.energies.push_back(energy);
      if (e == e_finest) {
        double w = sig * h * h * grid_n, mass = 0.0, mean = 0.0;
        for (double f : fcol) mean += w * f;
        mass = sig * length * length;
        mean /= mass;
        double var = 0.0;
        for (double f : fcol) var += w * (f - mean) * (f - mean);
        if (!(var > 0.0)) throw invalid_input("split_candidates: ramp has no variance");
        sob = std::pow(energy, n) / std::pow(var, n - 1.0);
      }
    }
    rep.sobolev = sob;

    // Aitken extrapolation of the last three energies; on a translation
    // invariant torus the column sums telescope, so the sequence is often
    // exactly constant and the guard keeps 0/0 out
    std::size_t ne = rep.energies.size();
    if (ne >= 3) {
      double e1 = rep.energies[ne - 3], e2 = rep.energies[ne - 2], e3 = rep.energies[ne - 1];
      double d1 = e2 - e1, d2 = e3 - e2;
      if (std::fabs(d2 - d1) < 1e-13 * std::max(1.0, std::fabs(e3)) ||
          std::fabs(d2) < 1e-13 * std::max(1.0, std::fabs(e3)))
        rep.energy_limit = e3;
      else
        rep.energy_limit = e3 - d2 * d2 / (d2 - d1);
    } else {
      rep.energy_limit = rep.energies.back();
    }

    rep.chain = make_bounds_report(
        "split-chain", 2.0 * std::pow(a_min, n), sob * std::pow(mu_min, n - 1.0),
        {{"a", sp.a},
         {"b", sp.b},
         {"mu1", rep.mu1},
         {"mu2", rep.mu2},
         {"a_plus", rep.a_plus},
         {"a_minus", rep.a_minus},
         {"sobolev", sob},
         {"eps_finest", e_finest}});
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace finsler
