#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/linalg.hpp"

namespace finsler {

// A compact region {level < 0} with smooth boundary {level = 0}.
// convex_minimizing() asserts that every geodesic ray minimizes until it
// hits the boundary; the omega quantities below are only defined then.
template <std::size_t N>
class Domain {
 public:
  virtual ~Domain() = default;

  virtual double level(const Vec<N>& x) const = 0;

  virtual Vec<N> level_gradient(const Vec<N>& x) const {
    const double h = 1e-6;
    Vec<N> g{};
    for (std::size_t i = 0; i < N; ++i) {
      Vec<N> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g[i] = (level(xp) - level(xm)) / (2.0 * h);
    }
    return g;
  }

  bool contains(const Vec<N>& x) const { return level(x) < 0.0; }

  virtual bool convex_minimizing() const { return false; }

  // interior star point used by the radial parameterizations
  virtual Vec<N> anchor() const = 0;

  // smallest t > 0 with level(x + t*dir) = 0; t is in units of |dir|
  virtual double ray_exit(const Vec<N>& x, const Vec<N>& dir) const {
    if (level(x) >= 0.0) throw domain_exit("ray_exit: start point not inside");
    if (norm(dir) == 0.0) throw invalid_input("ray_exit: zero direction");
    double lo = 0.0, hi = 1e-3;
    while (level(x + hi * dir) < 0.0) {
      lo = hi;
      hi *= 1.6;
      if (hi > 1e7) throw runaway_flow("ray_exit: ray never leaves the domain", hi);
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (1.0 + hi); ++it) {
      double mid = 0.5 * (lo + hi);
      (level(x + mid * dir) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

template <std::size_t N>
using DomainPtr = std::shared_ptr<const Domain<N>>;

template <std::size_t N>
class BallDomain final : public Domain<N> {
 public:
  BallDomain(const Vec<N>& center, double radius) : c_(center), r_(radius) {
    if (radius <= 0.0) throw invalid_input("BallDomain: radius must be positive");
  }

  double level(const Vec<N>& x) const override { return norm(x - c_) - r_; }

  Vec<N> level_gradient(const Vec<N>& x) const override {
    Vec<N> d = x - c_;
    double n = norm(d);
    if (n == 0.0) throw invalid_input("level_gradient: gradient at the center");
    return (1.0 / n) * d;
  }

  bool convex_minimizing() const override { return true; }

  Vec<N> anchor() const override { return c_; }

  double ray_exit(const Vec<N>& x, const Vec<N>& dir) const override {
    Vec<N> p = x - c_;
    double dd = dot(dir, dir), pd = dot(p, dir), pp = dot(p, p);
    if (dd == 0.0) throw invalid_input("ray_exit: zero direction");
    if (pp >= r_ * r_) throw domain_exit("ray_exit: start point not inside");
    return (-pd + std::sqrt(pd * pd + dd * (r_ * r_ - pp))) / dd;
  }

  double radius() const { return r_; }
  const Vec<N>& center() const { return c_; }

 private:
  Vec<N> c_;
  double r_;
};

// Implicit domain from user-supplied callables; the gradient may be empty,
// in which case central differences are used.
template <std::size_t N>
class LevelDomain final : public Domain<N> {
 public:
  using LevelFn = std::function<double(const Vec<N>&)>;
  using GradFn = std::function<Vec<N>(const Vec<N>&)>;

  LevelDomain(LevelFn h, GradFn grad, Vec<N> anchor, bool convex)
      : h_(std::move(h)), grad_(std::move(grad)), anchor_(anchor), convex_(convex) {
    if (!h_) throw invalid_input("LevelDomain: missing level function");
    if (h_(anchor_) >= 0.0) throw invalid_input("LevelDomain: anchor not inside");
  }

  double level(const Vec<N>& x) const override { return h_(x); }

  Vec<N> level_gradient(const Vec<N>& x) const override {
    if (grad_) return grad_(x);
    return Domain<N>::level_gradient(x);
  }

  bool convex_minimizing() const override { return convex_; }

  Vec<N> anchor() const override { return anchor_; }

 private:
  LevelFn h_;
  GradFn grad_;
  Vec<N> anchor_;
  bool convex_;
};

template <std::size_t N>
DomainPtr<N> make_ball_domain(const Vec<N>& center, double radius) {
  return std::make_shared<BallDomain<N>>(center, radius);
}

template <std::size_t N>
DomainPtr<N> make_level_domain(typename LevelDomain<N>::LevelFn h,
                               typename LevelDomain<N>::GradFn grad,
                               const Vec<N>& anchor, bool convex) {
  return std::make_shared<LevelDomain<N>>(std::move(h), std::move(grad), anchor, convex);
}

}  // namespace finsler
