#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "finsler/domain.hpp"
#include "finsler/geodesics.hpp"
#include "finsler/measures.hpp"
#include "finsler/metric.hpp"
#include "support/oracles.hpp"

using namespace finsler;

namespace {

const double kPi = 3.14159265358979323846;

double cross2(const Vec<2>& a, const Vec<2>& b) { return a[0] * b[1] - a[1] * b[0]; }

// chord exit parameter for the euclidean unit disk
double disk_exit(const Vec<2>& p, const Vec<2>& u) {
  double pu = dot(p, u);
  return -pu + std::sqrt(1.0 - dot(p, p) + pu * pu);
}

}  // namespace

TEST_CASE("euclidean flow translates at unit speed") {
  auto euc = make_euclidean<2>();
  oracles::Rng rng(401);
  for (int k = 0; k < 10; ++k) {
    Vec<2> x = rng.in_box<2>(-1.0, 1.0);
    Vec<2> u = rng.direction<2>();
    for (double t : {1.7, -0.9}) {
      FlowState<2> s = flow(*euc, FlowState<2>{x, 3.0 * u}, t);
      CHECK(norm(s.x - (x + t * u)) < 1e-9);
      CHECK(norm(s.y - u) < 1e-12);
    }
  }
}

TEST_CASE("funk flow reaches closed-form radial marks") {
  auto funk = make_funk_ball<2>();
  for (double r : {0.3, 0.5, 0.9}) {
    double t = oracles::funk::radial_distance(r);
    FlowState<2> s = flow(*funk, FlowState<2>{{0.0, 0.0}, {1.0, 0.0}}, t);
    CHECK(norm(s.x - Vec<2>{r, 0.0}) < 1e-6);
  }
}

TEST_CASE("funk geodesics run along straight chart lines") {
  auto funk = make_funk_ball<2>();
  oracles::Rng rng(402);
  for (int k = 0; k < 8; ++k) {
    Vec<2> x0 = rng.in_ball<2>(0.6);
    Vec<2> u = rng.direction<2>();
    FlowState<2> s{x0, u};
    for (int leg = 0; leg < 10; ++leg) {
      s = flow(*funk, s, 0.2);
      CHECK(std::fabs(cross2(s.x - x0, u)) < 1e-6);
    }
  }
}

TEST_CASE("speed stays pinned to one") {
  auto funk = make_funk_ball<2>();
  FlowState<2> s{{0.1, 0.2}, {1.0, 0.3}};
  detail::renormalize(*funk, s);

  SECTION("raw stepping drifts below 1e-6 per unit time") {
    FlowState<2> r = s;
    for (int i = 0; i < 1000; ++i) r = detail::rk4_step(*funk, r, 1e-3);
    CHECK(std::fabs(funk->value(r.x, r.y) - 1.0) < 1e-6);
  }

  SECTION("renormalized flow holds the invariant to machine precision") {
    FlowState<2> r = flow(*funk, s, 3.0);
    CHECK(std::fabs(funk->value(r.x, r.y) - 1.0) < 1e-12);
  }
}

TEST_CASE("flow composes and reverses") {
  auto funk = make_funk_ball<2>();
  auto rev = reverse_metric(funk);
  auto sph = oracles::sphere_chart<2>();
  oracles::Rng rng(403);

  SECTION("composition") {
    for (int k = 0; k < 5; ++k) {
      Vec<2> x = rng.in_ball<2>(0.4);
      Vec<2> u = rng.direction<2>();
      FlowState<2> one = flow(*funk, FlowState<2>{x, u}, 0.9);
      FlowState<2> two = flow(*funk, flow(*funk, FlowState<2>{x, u}, 0.5), 0.4);
      CHECK(norm(one.x - two.x) < 1e-6);
      CHECK(norm(one.y - two.y) < 1e-6);

      FlowState<2> sone = flow(*sph, FlowState<2>{x, u}, 1.3);
      FlowState<2> stwo = flow(*sph, flow(*sph, FlowState<2>{x, u}, 0.6), 0.7);
      CHECK(norm(sone.x - stwo.x) < 1e-6);
      CHECK(norm(sone.y - stwo.y) < 1e-6);
    }
  }

  SECTION("backward flow equals the reversed metric's forward flow") {
    // backward orbits head for the chart boundary, so keep the legs short
    for (int k = 0; k < 5; ++k) {
      Vec<2> x = rng.in_ball<2>(0.25);
      Vec<2> u = rng.direction<2>();
      FlowState<2> back = flow(*funk, FlowState<2>{x, u}, -0.25);
      FlowState<2> fwd = flow(*rev, FlowState<2>{x, -1.0 * u}, 0.25);
      CHECK(norm(back.x - fwd.x) < 1e-6);
      CHECK(norm(back.y + fwd.y) < 1e-6);
    }
  }
}

TEST_CASE("exit times match closed chords") {
  auto euc = make_euclidean<2>();
  auto disk = make_ball_domain<2>({0.0, 0.0}, 1.0);
  oracles::Rng rng(404);

  SECTION("euclidean unit disk") {
    ExitRecord<2> centre = exit_time(*euc, *disk, FlowState<2>{{0.0, 0.0}, {1.0, 0.0}});
    CHECK(centre.t == Catch::Approx(1.0).margin(1e-9));

    ExitRecord<2> across = exit_time(*euc, *disk, FlowState<2>{{-1.0, 0.0}, {1.0, 0.0}});
    CHECK(across.t == Catch::Approx(2.0).margin(1e-8));

    for (int k = 0; k < 20; ++k) {
      Vec<2> p = rng.in_ball<2>(0.9);
      Vec<2> u = rng.direction<2>();
      ExitRecord<2> rec = exit_time(*euc, *disk, FlowState<2>{p, u});
      CHECK(rec.t == Catch::Approx(disk_exit(p, u)).margin(1e-8));
      CHECK(std::fabs(disk->level(rec.state.x)) < 1e-9);
    }
  }

  SECTION("funk ball of chart radius one half") {
    auto funk = make_funk_ball<2>();
    auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
    ExitRecord<2> rec = exit_time(*funk, *dom, FlowState<2>{{0.0, 0.0}, {1.0, 0.0}});
    CHECK(rec.t == Catch::Approx(std::log(2.0)).margin(1e-6));
    CHECK(norm(rec.state.x - Vec<2>{0.5, 0.0}) < 1e-6);
  }
}

TEST_CASE("exit time shrinks by the elapsed time along the flow") {
  auto funk = make_funk_ball<2>();
  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.7);
  oracles::Rng rng(405);
  for (int k = 0; k < 10; ++k) {
    Vec<2> x = rng.in_ball<2>(0.5);
    Vec<2> u = rng.direction<2>();
    double total = exit_time(*funk, *dom, FlowState<2>{x, u}).t;
    double step = 0.3 * total;
    FlowState<2> mid = flow(*funk, FlowState<2>{x, u}, step);
    double rest = exit_time(*funk, *dom, mid).t;
    CHECK(rest == Catch::Approx(total - step).margin(1e-6));
  }
}

TEST_CASE("grazing, runaway, and misplaced launches") {
  auto euc = make_euclidean<2>();
  auto disk = make_ball_domain<2>({0.0, 0.0}, 1.0);

  SECTION("tangent launch from the boundary has a zero-length chord") {
    ExitRecord<2> rec = exit_time(*euc, *disk, FlowState<2>{{1.0, 0.0}, {0.0, 1.0}});
    CHECK(rec.t == Catch::Approx(0.0).margin(1e-9));
  }

  SECTION("outward launch from the boundary has a zero-length chord") {
    ExitRecord<2> rec = exit_time(*euc, *disk, FlowState<2>{{1.0, 0.0}, {1.0, 0.1}});
    CHECK(rec.t == Catch::Approx(0.0).margin(1e-9));
  }

  SECTION("a closed orbit inside a huge domain runs away") {
    auto sph = oracles::sphere_chart<2>();
    auto big = make_ball_domain<2>({0.0, 0.0}, 50.0);
    CHECK_THROWS_AS(exit_time(*sph, *big, FlowState<2>{{0.3, 0.0}, {0.0, 1.0}}, 1e-3, 5.0),
                    runaway_flow);
  }

  SECTION("starting outside the domain is rejected") {
    CHECK_THROWS_AS(exit_time(*euc, *disk, FlowState<2>{{2.0, 0.0}, {1.0, 0.0}}), domain_exit);
  }
}

TEST_CASE("line integrals accumulate to the boundary") {
  auto euc = make_euclidean<2>();
  auto disk = make_ball_domain<2>({0.0, 0.0}, 1.0);
  oracles::Rng rng(406);

  for (int k = 0; k < 10; ++k) {
    Vec<2> p = rng.in_ball<2>(0.8);
    Vec<2> u = rng.direction<2>();
    double L = disk_exit(p, u);

    auto [ones, rec] =
        integrate_to_exit(*euc, *disk, FlowState<2>{p, u}, [](const FlowState<2>&) { return 1.0; });
    CHECK(ones == Catch::Approx(rec.t).epsilon(1e-10));

    auto [lin, rec2] = integrate_to_exit(*euc, *disk, FlowState<2>{p, u},
                                         [](const FlowState<2>& s) { return s.x[0]; });
    CHECK(lin == Catch::Approx(L * p[0] + 0.5 * L * L * u[0]).margin(1e-9));
    CHECK(rec2.t == Catch::Approx(L).margin(1e-8));
  }

  auto funk = make_funk_ball<2>();
  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
  auto [len, rec] =
      integrate_to_exit(*funk, *dom, FlowState<2>{{0.0, 0.0}, {1.0, 0.0}},
                        [](const FlowState<2>&) { return 1.0; });
  CHECK(len == Catch::Approx(std::log(2.0)).margin(1e-6));
  CHECK(rec.t == Catch::Approx(std::log(2.0)).margin(1e-6));
}

TEST_CASE("polar density is exact in flat space") {
  auto euc2 = make_euclidean<2>();
  auto prof2 = polar_density_profile(*euc2, Vec<2>{0.2, -0.1}, Vec<2>{0.6, 0.8}, 1.5);
  for (std::size_t k = 0; k < prof2.size(); k += 100)
    CHECK(prof2[k].second == Catch::Approx(prof2[k].first).margin(1e-10));
  CHECK(prof2.back().second == Catch::Approx(1.5).margin(1e-10));

  auto euc3 = make_euclidean<3>();
  auto prof3 = polar_density_profile(*euc3, Vec<3>{0.0, 0.0, 0.0}, Vec<3>{1.0, 1.0, 0.5}, 1.2);
  for (std::size_t k = 0; k < prof3.size(); k += 100) {
    double t = prof3[k].first;
    CHECK(prof3[k].second == Catch::Approx(t * t).margin(1e-9));
  }
}

TEST_CASE("polar density matches the round sphere") {
  auto sph = oracles::sphere_chart<2>();

  SECTION("radial launch from the chart origin") {
    auto prof = polar_density_profile(*sph, Vec<2>{0.0, 0.0}, Vec<2>{1.0, 0.0}, 2.0);
    for (std::size_t k = 250; k < prof.size(); k += 250)
      CHECK(prof[k].second == Catch::Approx(std::sin(prof[k].first)).margin(1e-3));
  }

  SECTION("tangential launch away from the origin") {
    auto prof = polar_density_profile(*sph, Vec<2>{0.3, 0.0}, Vec<2>{0.0, 1.0}, 3.0);
    for (std::size_t k = 250; k < prof.size(); k += 250)
      CHECK(prof[k].second == Catch::Approx(std::sin(prof[k].first)).margin(1e-3));
  }
}

TEST_CASE("polar density does not depend on the base measure") {
  auto funk = make_funk_ball<2>();
  Vec<2> x{0.2, -0.1}, y{0.7, 0.3};
  auto prof = polar_density_profile(*funk, x, y, 0.8);
  double cancelled = prof.back().second;
  double bh = polar_density(*funk, MeasureKind::busemann_hausdorff, x, y, 0.8);
  double ht = polar_density(*funk, MeasureKind::holmes_thompson, x, y, 0.8);
  CHECK(bh == Catch::Approx(cancelled).epsilon(1e-9));
  CHECK(ht == Catch::Approx(cancelled).epsilon(1e-9));
}

TEST_CASE("conjugate points are detected") {
  auto sph = oracles::sphere_chart<2>();
  bool thrown = false;
  try {
    polar_density_profile(*sph, Vec<2>{0.3, 0.0}, Vec<2>{0.0, 1.0}, 3.3);
  } catch (const conjugate_point& e) {
    thrown = true;
    CHECK(e.r == Catch::Approx(kPi).margin(0.02));
  }
  CHECK(thrown);
}

TEST_CASE("double integral of the density on chords and great circles") {
  SECTION("flat chord") {
    auto euc = make_euclidean<2>();
    double l = 1.5;
    double lhs = polar_density_double_integral(*euc, Vec<2>{0.1, 0.0}, Vec<2>{0.8, 0.6}, l);
    CHECK(lhs == Catch::Approx(l * l * l / 6.0).epsilon(1e-9));
  }

  SECTION("round sphere at the full loop length is sharp") {
    auto sph = oracles::sphere_chart<2>();
    double lhs = polar_density_double_integral(*sph, Vec<2>{0.3, 0.0}, Vec<2>{0.0, 1.0}, kPi);
    CHECK(lhs == Catch::Approx(kPi).epsilon(2e-2));
  }

  SECTION("funk chords sit strictly above the flat-comparison mark") {
    auto funk = make_funk_ball<2>();
    auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
    oracles::Rng rng(407);
    for (int k = 0; k < 3; ++k) {
      Vec<2> x = rng.in_ball<2>(0.3);
      Vec<2> u = rng.direction<2>();
      double l = 0.8 * exit_time(*funk, *dom, FlowState<2>{x, u}).t;
      double lhs = polar_density_double_integral(*funk, x, u, l);
      CHECK(lhs > l * l * l / (kPi * kPi));
    }
  }
}

TEST_CASE("chord lengths and shooting distances") {
  auto funk = make_funk_ball<2>();
  auto euc = make_euclidean<2>();

  SECTION("funk chords against the radial closed form, both orientations") {
    CHECK(chord_length(*funk, Vec<2>{0.0, 0.0}, Vec<2>{0.5, 0.0}) ==
          Catch::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(chord_length(*funk, Vec<2>{0.5, 0.0}, Vec<2>{0.0, 0.0}) ==
          Catch::Approx(std::log(1.5)).epsilon(1e-12));
  }

  SECTION("shooting reproduces straight-line distances") {
    CHECK(flow_distance(*euc, Vec<2>{-0.3, 0.2}, Vec<2>{0.4, -0.1}) ==
          Catch::Approx(norm(Vec<2>{0.7, -0.3})).margin(1e-5));

    oracles::Rng rng(408);
    for (int k = 0; k < 3; ++k) {
      Vec<2> a = rng.in_ball<2>(0.6);
      Vec<2> b = rng.in_ball<2>(0.6);
      if (norm(b - a) < 0.2) b[0] += 0.3;
      CHECK(flow_distance(*funk, a, b) == Catch::Approx(chord_length(*funk, a, b)).epsilon(2e-4));
    }
  }
}

TEST_CASE("diameter of star domains") {
  auto euc = make_euclidean<2>();
  auto disk = make_ball_domain<2>({0.0, 0.0}, 1.0);
  CHECK(flow_diameter(*euc, *disk, 8) == Catch::Approx(2.0).epsilon(1e-3));

  auto funk = make_funk_ball<2>();
  auto dom = make_ball_domain<2>({0.0, 0.0}, 0.5);
  CHECK(flow_diameter(*funk, *dom, 8) == Catch::Approx(std::log(3.0)).epsilon(1e-2));
}
