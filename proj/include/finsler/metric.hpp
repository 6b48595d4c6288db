#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/linalg.hpp"

namespace finsler {

template <std::size_t N>
class Metric;

template <std::size_t N>
using MetricPtr = std::shared_ptr<const Metric<N>>;

namespace detail {

constexpr double pi = 3.14159265358979323846;

inline Vec<2> direction(double theta) {
  return {std::cos(theta), std::sin(theta)};
}

inline Vec<3> direction(double theta, double phi) {
  double st = std::sin(theta);
  return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

// golden-section maximizer on [a,b]; f unimodal near the seeded bracket
inline double golden_max(const std::function<double(double)>& f, double a, double b, int iters = 60) {
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a); fd = f(d);
    }
  }
  return fc > fd ? c : d;
}

// unit directions used by the coarse indicatrix scans
template <std::size_t N>
inline std::vector<Vec<N>> scan_directions(int order) {
  std::vector<Vec<N>> dirs;
  if constexpr (N == 2) {
    dirs.reserve(order);
    for (int k = 0; k < order; ++k) dirs.push_back(direction(2.0 * pi * k / order));
  } else {
    static_assert(N == 2 || N == 3, "scan_directions: dimension 2 or 3");
    int nth = std::max(3, order / 2);
    for (int i = 0; i < nth; ++i) {
      double theta = pi * (i + 0.5) / nth;
      for (int k = 0; k < order; ++k) dirs.push_back(direction(theta, 2.0 * pi * k / order));
    }
  }
  return dirs;
}

}  // namespace detail

namespace fd {

// g_ij = 1/2 d^2(F^2)/dy^i dy^j by second-order central differences.
// Reference path: families with closed-form tensors are tested against this.
template <std::size_t N>
Mat<N> fundamental_tensor(const Metric<N>& m, const Vec<N>& x, Vec<N> y,
                          double step_scale = 1e-4);

// Spray from the displayed formula
//   G^i = 1/4 g^{il} (2 dg_jl/dx^k - dg_jk/dx^l) y^j y^k
// with x-derivatives of the fundamental tensor by central differences.
template <std::size_t N>
Vec<N> spray(const Metric<N>& m, const Vec<N>& x, const Vec<N>& y, double h = 1e-4);

}  // namespace fd

// Base class for Finsler metrics F(x, y): positively 1-homogeneous in y and
// strongly convex.  Virtuals default to finite-difference / scan-based
// evaluations; families override what they know in closed form.
template <std::size_t N>
class Metric {
 public:
  static_assert(N == 2 || N == 3, "supported dimensions: 2 and 3");
  virtual ~Metric() = default;

  virtual double value(const Vec<N>& x, const Vec<N>& y) const = 0;

  virtual Mat<N> fundamental_tensor(const Vec<N>& x, const Vec<N>& y) const {
    return fd::fundamental_tensor(*this, x, y);
  }

  virtual Vec<N> spray(const Vec<N>& x, const Vec<N>& y) const {
    return fd::spray(*this, x, y);
  }

  // F*(xi) = sup{ xi(y) : F(x,y) = 1 }
  virtual double dual_norm(const Vec<N>& x, const Vec<N>& xi) const {
    if (norm(xi) == 0.0) return 0.0;
    return dot(xi, dual_argmax(x, xi));
  }

  // the indicatrix point where the sup above is attained
  virtual Vec<N> dual_argmax(const Vec<N>& x, const Vec<N>& xi) const;

  // inverse Legendre transform: the y with g_y(y, .) = xi
  virtual Vec<N> legendre_inverse(const Vec<N>& x, const Vec<N>& xi) const;

  // Legendre transform L(y) = g_y(y, .)
  Vec<N> legendre(const Vec<N>& x, const Vec<N>& y) const {
    return matvec(fundamental_tensor(x, y), y);
  }

  virtual bool admissible(const Vec<N>& x) const { return true; }
};

// ---- finite-difference reference paths -------------------------------------

template <std::size_t N>
Mat<N> fd::fundamental_tensor(const Metric<N>& m, const Vec<N>& x, Vec<N> y,
                              double step_scale) {
  {
    // spot check positive 1-homogeneity before differencing
    double f1 = m.value(x, y), f2 = m.value(x, 2.0 * y);
    if (std::fabs(f2 - 2.0 * f1) > 1e-8 * std::fabs(f2) + 1e-300)
      throw invalid_input("fundamental tensor: value is not positively 1-homogeneous in y");
  }
  const double h = step_scale * std::max(1.0, norm(y));
  auto energy = [&](const Vec<N>& v) {
    double f = m.value(x, v);
    return 0.5 * f * f;
  };
  Mat<N> g;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i; j < N; ++j) {
      double d;
      if (i == j) {
        Vec<N> yp = y, ym = y;
        yp[i] += h;
        ym[i] -= h;
        d = (energy(yp) - 2.0 * energy(y) + energy(ym)) / (h * h);
      } else {
        Vec<N> a = y, b = y, c = y, e = y;
        a[i] += h; a[j] += h;
        b[i] += h; b[j] -= h;
        c[i] -= h; c[j] += h;
        e[i] -= h; e[j] -= h;
        d = (energy(a) - energy(b) - energy(c) + energy(e)) / (4.0 * h * h);
      }
      g(i, j) = d;
      g(j, i) = d;
    }
  }
  double cond;
  if (!positive_definite(g, &cond))
    throw ill_conditioned("fundamental tensor: numerical Hessian not positive definite", cond);
  return g;
}

template <std::size_t N>
Vec<N> fd::spray(const Metric<N>& m, const Vec<N>& x, const Vec<N>& y, double h) {
  Mat<N> g = m.fundamental_tensor(x, y);
  Mat<N> ginv = inverse(g);
  std::array<Mat<N>, N> dg;  // dg[k](i,j) = d g_ij / d x^k
  for (std::size_t k = 0; k < N; ++k) {
    Vec<N> xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    Mat<N> gp = m.fundamental_tensor(xp, y);
    Mat<N> gm = m.fundamental_tensor(xm, y);
    for (std::size_t i = 0; i < N * N; ++i) dg[k].a[i] = (gp.a[i] - gm.a[i]) / (2.0 * h);
  }
  Vec<N> G{};
  for (std::size_t i = 0; i < N; ++i) {
    double acc = 0.0;
    for (std::size_t l = 0; l < N; ++l) {
      double inner = 0.0;
      for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < N; ++k)
          inner += (2.0 * dg[k](j, l) - dg[l](j, k)) * y[j] * y[k];
      acc += ginv(i, l) * inner;
    }
    G[i] = 0.25 * acc;
  }
  return G;
}

// ---- generic duality defaults ----------------------------------------------

template <std::size_t N>
Vec<N> Metric<N>::dual_argmax(const Vec<N>& x, const Vec<N>& xi) const {
  if (norm(xi) == 0.0) throw invalid_input("dual_argmax: zero covector");
  // the ratio xi(w)/F(x,w) is 0-homogeneous; scan unit directions then refine
  if constexpr (N == 2) {
    auto val = [&](double th) {
      Vec<2> w = detail::direction(th);
      return dot(xi, w) / value(x, w);
    };
    const int K = 64;
    double best = -1e300, bth = 0.0;
    for (int k = 0; k < K; ++k) {
      double th = 2.0 * detail::pi * k / K;
      double v = val(th);
      if (v > best) { best = v; bth = th; }
    }
    double span = 2.0 * detail::pi / K;
    double th = detail::golden_max(val, bth - span, bth + span);
    Vec<2> w = detail::direction(th);
    return (1.0 / value(x, w)) * w;
  } else {
    auto val = [&](double th, double ph) {
      Vec<3> w = detail::direction(th, ph);
      return dot(xi, w) / value(x, w);
    };
    const int KT = 32, KP = 64;
    double best = -1e300, bt = 0.0, bp = 0.0;
    for (int i = 0; i < KT; ++i) {
      double th = detail::pi * (i + 0.5) / KT;
      for (int k = 0; k < KP; ++k) {
        double ph = 2.0 * detail::pi * k / KP;
        double v = val(th, ph);
        if (v > best) { best = v; bt = th; bp = ph; }
      }
    }
    double st = detail::pi / KT, sp = 2.0 * detail::pi / KP;
    for (int round = 0; round < 4; ++round) {
      bt = detail::golden_max([&](double t) { return val(t, bp); }, bt - st, bt + st);
      bp = detail::golden_max([&](double p) { return val(bt, p); }, bp - sp, bp + sp);
      st *= 0.25;
      sp *= 0.25;
    }
    Vec<3> w = detail::direction(bt, bp);
    return (1.0 / value(x, w)) * w;
  }
}

template <std::size_t N>
Vec<N> Metric<N>::legendre_inverse(const Vec<N>& x, const Vec<N>& xi) const {
  if (norm(xi) == 0.0) throw invalid_input("legendre_inverse: zero covector");
  // seed from the dual maximizer, then damped Newton on L(y) = xi;
  // the Jacobian of L is exactly the fundamental tensor
  Vec<N> y = dual_norm(x, xi) * dual_argmax(x, xi);
  double res = 0.0;
  for (int it = 0; it < 60; ++it) {
    Vec<N> r = xi - legendre(x, y);
    res = norm(r);
    if (res <= 1e-12 * std::max(1.0, norm(xi))) return y;
    Vec<N> step = solve(fundamental_tensor(x, y), r);
    double t = 1.0;
    bool moved = false;
    for (int half = 0; half < 30; ++half) {
      Vec<N> cand = y + t * step;
      if (value(x, cand) > 0.0 && norm(xi - legendre(x, cand)) < res) {
        y = cand;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    // a finite-difference Jacobian bottoms out near 1e-8; once the line
    // search cannot improve we are at that floor
    if (!moved) break;
  }
  Vec<N> r = xi - legendre(x, y);
  if (norm(r) <= 1e-7 * std::max(1.0, norm(xi))) return y;
  throw convergence_failure("legendre_inverse: Newton stalled", norm(r));
}

// ---- families ----------------------------------------------------------------

template <std::size_t N>
class EuclideanMetric final : public Metric<N> {
 public:
  double value(const Vec<N>&, const Vec<N>& y) const override { return norm(y); }
  Mat<N> fundamental_tensor(const Vec<N>&, const Vec<N>&) const override {
    return Mat<N>::identity();
  }
  Vec<N> spray(const Vec<N>&, const Vec<N>&) const override { return Vec<N>{}; }
  double dual_norm(const Vec<N>&, const Vec<N>& xi) const override { return norm(xi); }
  Vec<N> dual_argmax(const Vec<N>&, const Vec<N>& xi) const override {
    double n = norm(xi);
    if (n == 0.0) throw invalid_input("dual_argmax: zero covector");
    return (1.0 / n) * xi;
  }
  Vec<N> legendre_inverse(const Vec<N>&, const Vec<N>& xi) const override { return xi; }
};

// F = sqrt(y^T A(x) y) for a smooth SPD matrix field A
template <std::size_t N>
class RiemannianMetric final : public Metric<N> {
 public:
  using MatrixField = std::function<Mat<N>(const Vec<N>&)>;

  explicit RiemannianMetric(MatrixField field) : field_(std::move(field)) {}

  double value(const Vec<N>& x, const Vec<N>& y) const override {
    double q = quad_form(field_(x), y, y);
    if (q < 0.0) throw ill_conditioned("riemannian metric: matrix not positive definite", 0.0);
    return std::sqrt(q);
  }
  Mat<N> fundamental_tensor(const Vec<N>& x, const Vec<N>&) const override { return field_(x); }
  double dual_norm(const Vec<N>& x, const Vec<N>& xi) const override {
    return std::sqrt(quad_form(inverse(field_(x)), xi, xi));
  }
  Vec<N> dual_argmax(const Vec<N>& x, const Vec<N>& xi) const override {
    Vec<N> v = legendre_inverse(x, xi);
    return (1.0 / value(x, v)) * v;
  }
  Vec<N> legendre_inverse(const Vec<N>& x, const Vec<N>& xi) const override {
    return solve(field_(x), xi);
  }

 private:
  MatrixField field_;
};

// F = alpha + beta = sqrt(y^T a(x) y) + <b(x), y>, valid while ||b||_a < 1.
template <std::size_t N>
class RandersMetric : public Metric<N> {
 public:
  using MatrixField = std::function<Mat<N>(const Vec<N>&)>;
  using FormField = std::function<Vec<N>(const Vec<N>&)>;

  RandersMetric(MatrixField a, FormField b) : a_(std::move(a)), b_(std::move(b)) {}

  double value(const Vec<N>& x, const Vec<N>& y) const override {
    return std::sqrt(quad_form(a_(x), y, y)) + dot(b_(x), y);
  }

  // (F/alpha)(a - l l^T) + (l + b)(l + b)^T with l = a y / alpha
  Mat<N> fundamental_tensor(const Vec<N>& x, const Vec<N>& y) const override {
    Mat<N> a = a_(x);
    Vec<N> b = b_(x);
    double alpha = std::sqrt(quad_form(a, y, y));
    Vec<N> l = (1.0 / alpha) * matvec(a, y);
    double f = alpha + dot(b, y);
    Vec<N> lb = l + b;
    Mat<N> g = mat_scale(f / alpha, mat_add(a, mat_scale(-1.0, outer(l, l))));
    return mat_add(g, outer(lb, lb));
  }

  double dual_norm(const Vec<N>& x, const Vec<N>& xi) const override {
    if (norm(xi) == 0.0) return 0.0;
    Mat<N> ai;
    double c;
    Vec<N> aib;
    dual_data(x, ai, aib, c);
    return -dot(xi, aib) + std::sqrt(c * quad_form(ai, xi, xi));
  }

  Vec<N> dual_argmax(const Vec<N>& x, const Vec<N>& xi) const override {
    if (norm(xi) == 0.0) throw invalid_input("dual_argmax: zero covector");
    Mat<N> ai;
    double c;
    Vec<N> aib;
    dual_data(x, ai, aib, c);
    double root = std::sqrt(c * quad_form(ai, xi, xi));
    return (c / root) * matvec(ai, xi) - aib;
  }

  Vec<N> legendre_inverse(const Vec<N>& x, const Vec<N>& xi) const override {
    return dual_norm(x, xi) * dual_argmax(x, xi);
  }

  // ||b||_a < 1 at a probe point; factories call this over a sample grid
  void validate_at(const Vec<N>& x) const {
    Mat<N> a = a_(x);
    double cond;
    if (!positive_definite(a, &cond))
      throw ill_conditioned("randers metric: alpha matrix not positive definite", cond);
    double nb = quad_form(inverse(a), b_(x), b_(x));
    if (nb >= 1.0)
      throw invalid_input("randers metric: ||b||_alpha >= 1 at a probe point");
  }

 private:
  // unit ball {F < 1} is the ellipsoid (y + A^{-1} b)^T A (y + A^{-1} b) < 1 + b^T A^{-1} b
  // with A = a - b b^T; dual norm and maximizer follow from its support function
  void dual_data(const Vec<N>& x, Mat<N>& ai, Vec<N>& aib, double& c) const {
    Mat<N> a = a_(x);
    Vec<N> b = b_(x);
    Mat<N> A = mat_add(a, mat_scale(-1.0, outer(b, b)));
    ai = inverse(A);
    aib = matvec(ai, b);
    c = 1.0 + dot(b, aib);
  }

  MatrixField a_;
  FormField b_;
};

// Funk metric on the open unit ball:
//   F(x,y) = (sqrt((1-|x|^2)|y|^2 + <x,y>^2) + <x,y>) / (1-|x|^2).
// Randers data a_ij = ((1-|x|^2) delta_ij + x_i x_j)/(1-|x|^2)^2, b = x/(1-|x|^2);
// projectively flat with spray G = (F/2) y and dual norm |xi| - <xi,x>.
template <std::size_t N>
class FunkMetric final : public RandersMetric<N> {
 public:
  FunkMetric()
      : RandersMetric<N>(
            [](const Vec<N>& x) {
              double s = dot(x, x);
              Mat<N> a = mat_add(mat_scale(1.0 - s, Mat<N>::identity()), outer(x, x));
              return mat_scale(1.0 / ((1.0 - s) * (1.0 - s)), a);
            },
            [](const Vec<N>& x) { return (1.0 / (1.0 - dot(x, x))) * x; }) {}

  double value(const Vec<N>& x, const Vec<N>& y) const override {
    double s = dot(x, x);
    if (s >= 1.0) throw domain_exit("funk metric evaluated outside the unit ball");
    double xy = dot(x, y);
    return (std::sqrt((1.0 - s) * dot(y, y) + xy * xy) + xy) / (1.0 - s);
  }

  Vec<N> spray(const Vec<N>& x, const Vec<N>& y) const override {
    return (0.5 * value(x, y)) * y;
  }

  double dual_norm(const Vec<N>& x, const Vec<N>& xi) const override {
    return norm(xi) - dot(xi, x);
  }

  Vec<N> dual_argmax(const Vec<N>& x, const Vec<N>& xi) const override {
    double n = norm(xi);
    if (n == 0.0) throw invalid_input("dual_argmax: zero covector");
    return (1.0 / n) * xi - x;
  }

  Vec<N> legendre_inverse(const Vec<N>& x, const Vec<N>& xi) const override {
    return dual_norm(x, xi) * dual_argmax(x, xi);
  }

  bool admissible(const Vec<N>& x) const override { return dot(x, x) < 1.0; }
};

// evaluates the base metric at (x, -y)
template <std::size_t N>
class ReverseMetric final : public Metric<N> {
 public:
  explicit ReverseMetric(MetricPtr<N> base) : base_(std::move(base)) {}

  double value(const Vec<N>& x, const Vec<N>& y) const override { return base_->value(x, -y); }
  Mat<N> fundamental_tensor(const Vec<N>& x, const Vec<N>& y) const override {
    return base_->fundamental_tensor(x, -y);
  }
  Vec<N> spray(const Vec<N>& x, const Vec<N>& y) const override { return base_->spray(x, -y); }
  double dual_norm(const Vec<N>& x, const Vec<N>& xi) const override {
    return base_->dual_norm(x, -xi);
  }
  Vec<N> dual_argmax(const Vec<N>& x, const Vec<N>& xi) const override {
    return -base_->dual_argmax(x, -xi);
  }
  Vec<N> legendre_inverse(const Vec<N>& x, const Vec<N>& xi) const override {
    return -base_->legendre_inverse(x, -xi);
  }
  bool admissible(const Vec<N>& x) const override { return base_->admissible(x); }

  const MetricPtr<N>& base() const { return base_; }

 private:
  MetricPtr<N> base_;
};

template <std::size_t N>
inline MetricPtr<N> reverse_metric(const MetricPtr<N>& m) {
  if (auto rev = std::dynamic_pointer_cast<const ReverseMetric<N>>(m)) return rev->base();
  return std::make_shared<ReverseMetric<N>>(m);
}

template <std::size_t N>
inline MetricPtr<N> make_euclidean() {
  return std::make_shared<EuclideanMetric<N>>();
}

template <std::size_t N>
inline MetricPtr<N> make_riemannian(typename RiemannianMetric<N>::MatrixField field) {
  return std::make_shared<RiemannianMetric<N>>(std::move(field));
}

template <std::size_t N>
inline MetricPtr<N> make_randers(typename RandersMetric<N>::MatrixField a,
                                 typename RandersMetric<N>::FormField b,
                                 const std::vector<Vec<N>>& probes = {}) {
  auto m = std::make_shared<RandersMetric<N>>(std::move(a), std::move(b));
  for (const auto& p : probes) m->validate_at(p);
  return m;
}

template <std::size_t N>
inline MetricPtr<N> make_funk_ball() {
  return std::make_shared<FunkMetric<N>>();
}

// ---- pointwise reversibility and uniformity constants ------------------------

struct MetricConstants {
  double reversibility;  // lambda_F(x) = sup_{F(x,y)=1} F(x,-y)
  double uniformity;     // Lambda_F(x) = sup g_X(Y,Y) / g_Z(Y,Y) over the indicatrix
};

template <std::size_t N>
MetricConstants constants_at(const Metric<N>& m, const Vec<N>& x, int order = 64) {
  auto dirs = detail::scan_directions<N>(order);
  const int K = static_cast<int>(dirs.size());
  std::vector<Vec<N>> nodes(K);
  std::vector<Mat<N>> gs(K);
  for (int k = 0; k < K; ++k) {
    nodes[k] = (1.0 / m.value(x, dirs[k])) * dirs[k];
    gs[k] = m.fundamental_tensor(x, nodes[k]);
  }

  // reversibility
  double lam = 0.0;
  int lam_at = 0;
  for (int k = 0; k < K; ++k) {
    double v = m.value(x, -nodes[k]);
    if (v > lam) { lam = v; lam_at = k; }
  }

  // uniformity: for each Y the max over X and min over Z decouple
  double uni = 0.0;
  int bY = 0, bX = 0, bZ = 0;
  for (int ky = 0; ky < K; ++ky) {
    double qmax = -1e300, qmin = 1e300;
    int ax = 0, az = 0;
    for (int k = 0; k < K; ++k) {
      double q = quad_form(gs[k], nodes[ky], nodes[ky]);
      if (q > qmax) { qmax = q; ax = k; }
      if (q < qmin) { qmin = q; az = k; }
    }
    if (qmax / qmin > uni) {
      uni = qmax / qmin;
      bY = ky; bX = ax; bZ = az;
    }
  }

  if constexpr (N == 2) {
    auto angle_of = [&](int k) { return 2.0 * detail::pi * k / K; };
    auto unit_node = [&](double th) {
      Vec<2> w = detail::direction(th);
      return (1.0 / m.value(x, w)) * w;
    };
    // refine lambda
    {
      double span = 2.0 * detail::pi / K;
      auto f = [&](double th) { return m.value(x, -unit_node(th)); };
      double th = detail::golden_max(f, angle_of(lam_at) - span, angle_of(lam_at) + span);
      lam = std::max(lam, f(th));
    }
    // refine uniformity by cyclic golden section in the three angles
    {
      double tY = angle_of(bY), tX = angle_of(bX), tZ = angle_of(bZ);
      double span = 2.0 * detail::pi / K;
      auto ratio = [&](double ty, double tx, double tz) {
        Vec<2> yv = unit_node(ty);
        Mat<2> gx = m.fundamental_tensor(x, unit_node(tx));
        Mat<2> gz = m.fundamental_tensor(x, unit_node(tz));
        return quad_form(gx, yv, yv) / quad_form(gz, yv, yv);
      };
      for (int round = 0; round < 4; ++round) {
        tX = detail::golden_max([&](double t) { return ratio(tY, t, tZ); }, tX - span, tX + span);
        tZ = detail::golden_max([&](double t) { return -ratio(tY, tX, t); }, tZ - span, tZ + span);
        tY = detail::golden_max([&](double t) { return ratio(t, tX, tZ); }, tY - span, tY + span);
        span *= 0.3;
      }
      uni = std::max(uni, ratio(tY, tX, tZ));
    }
  }
  // n = 3 keeps the grid estimate; the scan is dense enough for the
  // tolerances used at that dimension

  return {lam, uni};
}

}  // namespace finsler
