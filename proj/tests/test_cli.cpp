#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "finsler/bounds.hpp"
#include "finsler/config.hpp"
#include "finsler/driver.hpp"

using namespace finsler;
using nlohmann::ordered_json;

namespace {

const double kPi = 3.14159265358979323846;

const std::string kEuclidBall =
    "metric.family = euclidean\n"
    "domain.type = ball\n"
    "domain.radius = 1.0\n";

// coarse orders keep the command runs cheap; accuracy margins shrink with them
const std::string kCoarse =
    "quadrature.indicatrix = 64\n"
    "quadrature.boundary = 128\n"
    "quadrature.radial = 24\n"
    "quadrature.angular = 96\n"
    "quadrature.flux = 128\n"
    "grid.sample = 8\n"
    "flow.ring = 6\n";

std::string thrown_key(const std::string& text) {
  try {
    Config::parse(text);
  } catch (const config_error& e) {
    return e.key;
  }
  return "no-throw";
}

}  // namespace

TEST_CASE("config parser reads comments, dotted keys, and defaults") {
  Config cfg = Config::parse(
      "# full-line comment\n"
      "metric.family = funk   # trailing comment\n"
      "domain.type = ball\n"
      "domain.radius = 0.5\n"
      "quadrature.boundary = 64\n"
      "torus.ramps = 0.3, 0.2, 0.1\n");
  CHECK(cfg.str("metric.family") == "funk");
  CHECK(cfg.number("domain.radius") == 0.5);
  CHECK(cfg.integer("quadrature.boundary") == 64);
  CHECK(cfg.integer("quadrature.radial") == 64);  // untouched default
  CHECK(cfg.measure() == MeasureKind::busemann_hausdorff);

  std::vector<double> ramps = cfg.numbers("torus.ramps");
  REQUIRE(ramps.size() == 3);
  CHECK(ramps[1] == 0.2);

  const auto& resolved = cfg.resolved();
  CHECK(resolved.size() == 31);
  CHECK(resolved.front().first == "metric.family");
  CHECK(resolved.back().first == "out");
  bool found = false;
  for (const auto& kv : resolved)
    if (kv.first == "quadrature.boundary") {
      found = true;
      CHECK(kv.second == "64");
    }
  CHECK(found);

  Config ht = Config::parse(kEuclidBall + "measure = holmes-thompson\n");
  CHECK(ht.measure() == MeasureKind::holmes_thompson);
}

TEST_CASE("config parser names the offending key") {
  CHECK(thrown_key("domain.type = ball\n") == "metric.family");  // required key missing
  CHECK(thrown_key(kEuclidBall + "spin = 3\n") == "spin");
  CHECK(thrown_key("metric.family = euclidean\nmetric.family = funk\ndomain.type = ball\n") ==
        "metric.family");
  CHECK(thrown_key(kEuclidBall + "flow.step = fast\n") == "flow.step");
  CHECK(thrown_key(kEuclidBall + "workers = 2.5\n") == "workers");
  CHECK(thrown_key(kEuclidBall + "quadrature.boundary = 8\n") == "quadrature.boundary");
  CHECK(thrown_key(kEuclidBall + "tol.santalo = 0\n") == "tol.santalo");
  CHECK(thrown_key(kEuclidBall + "workers = 0\n") == "workers");
  CHECK(thrown_key(kEuclidBall + "measure = euclidean\n") == "measure");
  CHECK(thrown_key(kEuclidBall + "torus.split_hi = 0.1\n") == "torus.split_hi");
  CHECK(thrown_key(kEuclidBall + "balls.radii = 0.05,,0.1\n") == "balls.radii");
  CHECK(thrown_key(kEuclidBall + "santalo.functions = two\n") == "santalo.functions");
  CHECK(thrown_key("metric.family = randers\nmetric.drift0 = 0.8\nmetric.drift1 = 0.7\n"
                   "domain.type = ball\n") == "metric.drift0");
  CHECK(thrown_key("metric.family = funk\ndomain.type = ball\ndomain.radius = 1.5\n") ==
        "domain.radius");
  CHECK_THROWS_AS(Config::parse("metric.family\n"), config_error);  // no '='
  CHECK_THROWS_AS(Config::parse(kEuclidBall + "out =\n"), config_error);
}

TEST_CASE("config overrides revalidate and roll back") {
  Config cfg = Config::parse(kEuclidBall);
  cfg.override_value("workers", "4");
  CHECK(cfg.integer("workers") == 4);
  CHECK_THROWS_AS(cfg.override_value("workers", "0"), config_error);
  CHECK(cfg.integer("workers") == 4);  // rejected override leaves the old value
  CHECK_THROWS_AS(cfg.override_value("spin", "1"), config_error);
}

TEST_CASE("unknown commands and domain mismatches are config errors") {
  REQUIRE(command_names().size() == 5);
  Config ball = Config::parse(kEuclidBall);
  CHECK_THROWS_AS(run_command("frobnicate", ball, "t"), config_error);
  CHECK_THROWS_AS(run_command("constants", ball, "t"), config_error);
  CHECK_THROWS_AS(run_command("funk-report", ball, "t"), config_error);

  Config torus = Config::parse("metric.family = euclidean\ndomain.type = torus\n");
  CHECK_THROWS_AS(run_command("eigenvalue", torus, "t"), config_error);
  CHECK_THROWS_AS(run_command("verify-santalo", torus, "t"), config_error);
  CHECK_THROWS_AS(run_command("bounds", torus, "t"), config_error);

  Config funk_torus = Config::parse("metric.family = funk\ndomain.type = torus\n");
  CHECK_THROWS_AS(run_command("constants", funk_torus, "t"), config_error);
}

TEST_CASE("verify-santalo command checks both formulas on the euclid disk") {
  Config cfg = Config::parse(kEuclidBall +
                             "quadrature.boundary = 64\n"
                             "quadrature.indicatrix = 32\n"
                             "quadrature.radial = 16\n"
                             "quadrature.angular = 64\n"
                             "flow.step = 0.004\n"
                             "santalo.functions = one\n"
                             "tol.santalo = 0.02\n"
                             "workers = 2\n");
  CommandOutput out = run_command("verify-santalo", cfg, "2026-01-01T00:00:00Z");
  CHECK(out.exit_code == 0);
  CHECK(out.diagnostic.empty());

  ordered_json doc = ordered_json::parse(out.json);
  CHECK(doc["schema_version"] == 1);
  CHECK(doc["command"] == "verify-santalo");
  CHECK(doc["passed"] == true);
  CHECK(doc["config"]["metric.family"] == "euclidean");
  CHECK(doc["config"]["tol.santalo"] == "0.02");
  CHECK(doc["metadata"]["timestamp"] == "2026-01-01T00:00:00Z");

  REQUIRE(doc["results"].size() == 2);
  const double phase_volume = 2.0 * kPi * kPi;  // unit disk times unit circle
  for (const auto& row : doc["results"]) {
    CHECK(row["name"] == "one");
    CHECK(row["pass"] == true);
    CHECK(row["value"].get<double>() == Catch::Approx(phase_volume).epsilon(5e-3));
    CHECK(row["error"].get<double>() <= 0.02);
  }
  CHECK(doc["results"][0]["check"] == "santalo-inward");
  CHECK(doc["results"][1]["check"] == "santalo-outward");

  CHECK(out.csv.rfind("check,name,value,reference,error,pass\n", 0) == 0);
  CHECK(std::count(out.csv.begin(), out.csv.end(), '\n') == 3);
}

TEST_CASE("funk-report reproduces the closed forms and is deterministic") {
  Config cfg = Config::parse(
      "metric.family = funk\n"
      "domain.type = ball\n"
      "domain.radius = 0.5\n"
      "quadrature.boundary = 128\n"
      "quadrature.indicatrix = 64\n"
      "grid.sample = 8\n"
      "flow.ring = 6\n");
  CommandOutput a = run_command("funk-report", cfg, "T1");
  CHECK(a.exit_code == 0);

  ordered_json doc = ordered_json::parse(a.json);
  REQUIRE(doc["results"].size() == 6);
  const char* names[6] = {"volume",     "area-inward", "area-outward",
                          "uniformity", "diameter",    "distortion-floor"};
  FunkReference ref = funk_reference(2, 0.5);
  const double refs[6] = {ref.mu_bh, ref.a_plus, ref.a_minus, ref.lambda, ref.diam, ref.omega};
  for (int i = 0; i < 6; ++i) {
    CHECK(doc["results"][i]["name"] == names[i]);
    CHECK(doc["results"][i]["reference"].get<double>() ==
          Catch::Approx(refs[i]).epsilon(1e-12));
    CHECK(doc["results"][i]["pass"] == true);
  }
  CHECK(doc["results"][0]["value"].get<double>() == Catch::Approx(kPi / 4.0).epsilon(1e-3));

  SECTION("identical config and timestamp give identical bytes") {
    CommandOutput b = run_command("funk-report", cfg, "T1");
    CHECK(a.json == b.json);
    CHECK(a.csv == b.csv);
  }

  SECTION("the timestamp only touches the metadata field") {
    CommandOutput c = run_command("funk-report", cfg, "T2");
    CHECK(c.json != a.json);
    ordered_json da = ordered_json::parse(a.json);
    ordered_json dc = ordered_json::parse(c.json);
    da.erase("metadata");
    dc.erase("metadata");
    CHECK(da.dump() == dc.dump());
    CHECK(c.csv == a.csv);
  }

  SECTION("an unreachable tolerance turns into exit code 1") {
    // the flow diameter carries honest integration error; the closed-form
    // rows are spectrally exact and cannot be pushed below their tolerance
    Config strict = cfg;
    strict.override_value("tol.reference_coarse", "1e-12");
    CommandOutput f = run_command("funk-report", strict, "T1");
    CHECK(f.exit_code == 1);
    CHECK(ordered_json::parse(f.json)["passed"] == false);
  }
}

TEST_CASE("eigenvalue command beats its floor on the euclid disk") {
  Config cfg = Config::parse(kEuclidBall + kCoarse + "grid.resolution = 32\n");
  CommandOutput out = run_command("eigenvalue", cfg, "t");
  CHECK(out.exit_code == 0);

  ordered_json doc = ordered_json::parse(out.json);
  REQUIRE(doc["results"].size() == 2);
  CHECK(doc["results"][0]["check"] == "hemisphere-oracle");
  CHECK(doc["results"][0]["pass"] == true);
  CHECK(doc["results"][0]["value"].get<double>() == Catch::Approx(2.0).epsilon(1e-6));

  const auto& row = doc["results"][1];
  CHECK(row["check"] == "eigenvalue-floor");
  CHECK(row["pass"] == true);
  double lambda_hat = row["value"].get<double>();
  CHECK(lambda_hat > 5.5);
  CHECK(lambda_hat < 6.2);
  // flat disk of diameter 2: the floor is the hemisphere value n (pi/D)^2
  CHECK(row["reference"].get<double>() == Catch::Approx(kPi * kPi / 2.0).epsilon(0.05));
}

TEST_CASE("bounds command grades the coarse euclid disk") {
  Config cfg = Config::parse(kEuclidBall + kCoarse +
                             "tol.equality = 0.005\n"
                             "balls.radii = 0.1, 0.2\n");
  CommandOutput out = run_command("bounds", cfg, "t");
  CHECK(out.exit_code == 0);

  ordered_json doc = ordered_json::parse(out.json);
  REQUIRE(doc["results"].size() == 11);
  CHECK(doc["results"][0]["check"] == "area-per-volume");
  CHECK(doc["results"][1]["check"] == "isoperimetric-ratio");
  CHECK(doc["results"][2]["check"] == "hemisphere-flux");
  CHECK(doc["results"][3]["check"] == "dual-second-moment");
  // flat disk: the flux and moment caps are equalities up to quadrature noise
  CHECK(std::fabs(doc["results"][2]["error"].get<double>()) < 5e-3);
  CHECK(doc["results"][2]["value"].get<double>() == Catch::Approx(2.0).epsilon(1e-6));
  CHECK(std::fabs(doc["results"][3]["error"].get<double>()) < 1e-9);

  CHECK(doc["results"][4]["check"] == "comparison-floor");
  CHECK_FALSE(doc["results"][4].contains("pass"));  // informational row
  CHECK(doc["results"][6]["check"] == "comparison-ordering");
  CHECK(doc["results"][7]["check"] == "small-ball-volume");
  CHECK(doc["results"][7]["value"].get<double>() ==
        Catch::Approx(kPi * 0.01).epsilon(1e-3));  // flat metric ball is the round disk
  for (const auto& row : doc["results"])
    if (row.contains("pass")) CHECK(row["pass"] == true);

  CHECK(out.csv.find("comparison-floor,eigenvalue,") != std::string::npos);
  CHECK(std::count(out.csv.begin(), out.csv.end(), '\n') == 12);
}

TEST_CASE("constants command surveys a drifted torus") {
  Config cfg = Config::parse(
      "metric.family = randers\n"
      "metric.drift0 = 0.3\n"
      "domain.type = torus\n"
      "torus.length = 6.283185307179586\n"
      "grid.resolution = 48\n"
      "grid.torus = 24\n"
      "quadrature.indicatrix = 64\n");
  CommandOutput out = run_command("constants", cfg, "t");
  CHECK(out.exit_code == 0);

  ordered_json doc = ordered_json::parse(out.json);
  REQUIRE(doc["results"].size() == 11);
  CHECK(doc["results"][0]["check"] == "ramp-energy");
  CHECK(doc["results"][0]["name"] == "half-split");
  CHECK(doc["results"][0]["pass"] == true);
  CHECK(doc["results"][0]["error"].get<double>() < 1e-8);  // exact telescoping
  CHECK_FALSE(doc["results"][4].contains("pass"));  // half-split chain: equality limit
  CHECK(doc["results"][5]["name"] == "config-split");
  CHECK(doc["results"][9]["check"] == "split-chain");
  CHECK(doc["results"][9]["pass"] == true);

  const auto& gap = doc["results"][10];
  CHECK(gap["check"] == "torus-gap-floor");
  CHECK(gap["pass"] == true);
  CHECK(gap["value"].get<double>() > gap["reference"].get<double>());
  CHECK(doc["results"][3]["value"].get<double>() > 0.0);  // sobolev candidate
}

TEST_CASE("numerical failures surface as exit 3 with a diagnostic") {
  Config cfg = Config::parse(
      "metric.family = euclidean\n"
      "domain.type = torus\n"
      "torus.length = 1.0\n"
      "torus.ramps = 0.4\n");
  CommandOutput out = run_command("constants", cfg, "t");
  CHECK(out.exit_code == 3);
  CHECK(out.diagnostic.find("ramp") != std::string::npos);
  ordered_json doc = ordered_json::parse(out.json);
  CHECK(doc["passed"] == false);
  CHECK(doc["error"].get<std::string>().find("ramp") != std::string::npos);
}
