#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "finsler/domain.hpp"
#include "finsler/santalo.hpp"
#include "support/oracles.hpp"

using namespace finsler;

namespace {

const double kPi = 3.14159265358979323846;
const double kTwoPiSq = 2.0 * kPi * kPi;

SantaloOptions small_nodes() {
  SantaloOptions o;
  o.nodes.boundary = 64;
  o.nodes.fiber = 64;
  o.nodes.radial = 32;
  o.nodes.angular = 64;
  return o;
}

}  // namespace

TEST_CASE("left side is exact on the euclidean disk") {
  auto euc = make_euclidean<2>();
  auto disk = make_ball_domain<2>({0.0, 0.0}, 1.0);

  CHECK(lhs_integral(euc, MeasureKind::busemann_hausdorff, *disk, FiberOne<2>{}) ==
        Catch::Approx(kTwoPiSq).epsilon(1e-10));
  CHECK(lhs_integral(euc, MeasureKind::busemann_hausdorff, *disk, FiberCoordinate<2>{0}) ==
        Catch::Approx(0.0).margin(1e-6));
  CHECK(lhs_integral(euc, MeasureKind::busemann_hausdorff, *disk,
                     [](const Vec<2>&, const Vec<2>&) { return 0.0; }) == 0.0);
}

TEST_CASE("boundary sides match the phase-space side on the euclidean disk") {
  auto euc = make_euclidean<2>();
  auto disk = make_ball_domain<2>({0.0, 0.0}, 1.0);
  auto reports = verify(euc, MeasureKind::busemann_hausdorff, *disk, FiberOne<2>{}, 1e-3);

  for (const SantaloReport& r : reports) {
    CAPTURE(formula_name(r.formula), r.lhs, r.rhs, r.rel_err);
    CHECK(r.lhs == Catch::Approx(kTwoPiSq).epsilon(1e-10));
    CHECK(r.rhs == Catch::Approx(kTwoPiSq).margin(0.02));
    CHECK(r.rel_err < 1e-3);
    CHECK(r.pass);
    CHECK(r.abs_err == Catch::Approx(std::fabs(r.lhs - r.rhs)).margin(1e-15));
    CHECK(r.fiber_kept > 0);
    CHECK(r.fiber_dropped >= 0);
    CHECK(r.runtime_seconds > 0.0);
  }
  // reversible metric: the two boundary formulas coincide
  CHECK(reports[0].rhs == Catch::Approx(reports[1].rhs).epsilon(1e-4));
}

TEST_CASE("the funk ball satisfies the identity in both directions") {
  auto funk = make_funk_ball<2>();
  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);

  SECTION("constant function at full resolution") {
    auto reports = verify(funk, MeasureKind::busemann_hausdorff, *dom, FiberOne<2>{}, 1e-3);
    for (const SantaloReport& r : reports) {
      CAPTURE(formula_name(r.formula), r.lhs, r.rhs, r.rel_err);
      CHECK(r.pass);
      CHECK(r.rel_err < 1e-3);
    }
  }

  SECTION("smooth bump, both measures, reduced resolution") {
    FiberBump<2> bump{{0.1, 0.0}, 0.35};
    for (MeasureKind kind : {MeasureKind::busemann_hausdorff, MeasureKind::holmes_thompson}) {
      auto reports = verify(funk, kind, *dom, bump, 1e-2, small_nodes());
      for (const SantaloReport& r : reports) {
        CAPTURE(measure_name(kind), formula_name(r.formula), r.lhs, r.rhs, r.rel_err);
        CHECK(r.pass);
        CHECK(r.lhs >= 0.0);
        CHECK(r.rhs >= 0.0);
      }
    }
  }
}

TEST_CASE("both sides are independent of the base measure") {
  auto funk = make_funk_ball<2>();
  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
  SantaloOptions o = small_nodes();

  double lhs_bh = lhs_integral(funk, MeasureKind::busemann_hausdorff, *dom, FiberOne<2>{}, o);
  double lhs_ht = lhs_integral(funk, MeasureKind::holmes_thompson, *dom, FiberOne<2>{}, o);
  CHECK(lhs_bh == Catch::Approx(lhs_ht).epsilon(1e-12));

  double in_bh = rhs_inward(funk, MeasureKind::busemann_hausdorff, *dom, FiberOne<2>{}, o);
  double in_ht = rhs_inward(funk, MeasureKind::holmes_thompson, *dom, FiberOne<2>{}, o);
  CHECK(in_bh == Catch::Approx(in_ht).epsilon(1e-12));
}

TEST_CASE("fixed-order reduction is bit-stable across worker counts") {
  auto funk = make_funk_ball<2>();
  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
  SantaloOptions serial = small_nodes();
  SantaloOptions threaded = small_nodes();
  threaded.workers = 3;

  double a = lhs_integral(funk, MeasureKind::busemann_hausdorff, *dom, FiberOne<2>{}, serial);
  double b = lhs_integral(funk, MeasureKind::busemann_hausdorff, *dom, FiberOne<2>{}, threaded);
  CHECK(a == b);
}

TEST_CASE("dropping the distortion breaks the funk identity but not the flat one") {
  SantaloOptions mutated = small_nodes();
  mutated.include_distortion = false;

  auto euc = make_euclidean<2>();
  auto disk = make_ball_domain<2>({0.0, 0.0}, 1.0);
  auto flat = verify(euc, MeasureKind::busemann_hausdorff, *disk, FiberOne<2>{}, 1e-2, mutated);
  CHECK(flat[0].pass);
  CHECK(flat[1].pass);

  auto funk = make_funk_ball<2>();
  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
  auto bent = verify(funk, MeasureKind::busemann_hausdorff, *dom, FiberOne<2>{}, 1e-2, mutated);
  CHECK_FALSE(bent[0].pass);
  CHECK_FALSE(bent[1].pass);
  CHECK(bent[0].rel_err > 1e-2);
}

TEST_CASE("outward formula equals the inward formula of the reversed metric") {
  auto funk = make_funk_ball<2>();
  auto rev = reverse_metric(funk);
  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
  SantaloOptions o = small_nodes();
  FiberBump<2> bump{{0.1, 0.0}, 0.35};

  double outward = rhs_outward(funk, MeasureKind::busemann_hausdorff, *dom, bump, o);
  double inward_rev = rhs_inward(
      rev, MeasureKind::busemann_hausdorff, *dom,
      [&bump](const Vec<2>& x, const Vec<2>& y) { return bump(x, -1.0 * y); }, o);
  CHECK(outward == Catch::Approx(inward_rev).epsilon(1e-4));
}

TEST_CASE("error drops under step refinement") {
  // the angular layers converge faster than the noise floor (the grazing
  // kink shifts between fiber rows, so the lattice sum cancels it), which
  // leaves the line-integral step as the one layer with an observable
  // order; refine it with a quadratic integrand against the analytic value
  auto euc = make_euclidean<2>();
  auto disk = make_ball_domain<2>({0.0, 0.0}, 1.0);
  auto f = [](const Vec<2>& x, const Vec<2>&) { return x[0] * x[0]; };
  const double truth = kPi * kPi / 2.0;

  double err[3];
  SantaloOptions o = small_nodes();
  o.nodes.dt = 1.6e-2;
  for (int level = 0; level < 3; ++level) {
    double rhs = rhs_inward(euc, MeasureKind::busemann_hausdorff, *disk, f, o);
    err[level] = std::fabs(rhs - truth);
    o.nodes.dt /= 2.0;
  }
  CAPTURE(err[0], err[1], err[2]);
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  // trapezoid refinement along the chords is second order
  CHECK(err[0] / err[1] > 3.0);
  CHECK(err[1] / err[2] > 3.0);
}

TEST_CASE("bad inputs are rejected") {
  auto funk = make_funk_ball<2>();
  SantaloOptions o = small_nodes();

  auto wild = make_level_domain<2>(
      [](const Vec<2>& x) { return dot(x, x) - 0.09; }, {}, Vec<2>{0.0, 0.0}, false);
  CHECK_THROWS_AS(lhs_integral(funk, MeasureKind::busemann_hausdorff, *wild, FiberOne<2>{}, o),
                  unsupported_domain);
  CHECK_THROWS_AS(rhs_inward(funk, MeasureKind::busemann_hausdorff, *wild, FiberOne<2>{}, o),
                  unsupported_domain);

  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
  FiberFunction<2> poison = [](const Vec<2>& x, const Vec<2>&) {
    return x[0] > 0.1 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  CHECK_THROWS_AS(lhs_integral(funk, MeasureKind::busemann_hausdorff, *dom, poison, o),
                  invalid_input);

  SantaloOptions zero_workers = small_nodes();
  zero_workers.workers = 0;
  CHECK_THROWS_AS(
      lhs_integral(funk, MeasureKind::busemann_hausdorff, *dom, FiberOne<2>{}, zero_workers),
      invalid_input);
}
