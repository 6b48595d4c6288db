#pragma once

// Command layer behind the CLI binary.  Each command builds its metric and
// domain from a Config, runs the checks, and renders a JSON report plus a
// CSV table.  The caller injects the timestamp and it lands only under
// "metadata", so identical configs give byte-identical payloads elsewhere.

#include <array>
#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "finsler/bounds.hpp"
#include "finsler/config.hpp"
#include "finsler/domain.hpp"
#include "finsler/errors.hpp"
#include "finsler/measures.hpp"
#include "finsler/metric.hpp"
#include "finsler/santalo.hpp"
#include "finsler/spectral.hpp"

namespace finsler {

using OrderedJson = nlohmann::ordered_json;

struct CommandOutput {
  int exit_code = 0;  // 0 all checks pass, 1 check failed, 3 numerical failure
  std::string json;
  std::string csv;
  std::string diagnostic;  // module message when exit_code is 3
};

namespace detail {

inline std::string csv_number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

// accumulates one table: a JSON results array and the matching CSV rows
struct ReportRows {
  OrderedJson results = OrderedJson::array();
  std::ostringstream csv;
  bool passed = true;

  ReportRows() { csv << "check,name,value,reference,error,pass\n"; }

  void check(const std::string& check_id, const std::string& name, double value, double reference,
             double error, bool pass, OrderedJson extra = OrderedJson::object()) {
    OrderedJson row;
    row["check"] = check_id;
    row["name"] = name;
    row["value"] = value;
    row["reference"] = reference;
    row["error"] = error;
    row["pass"] = pass;
    for (auto& item : extra.items()) row[item.key()] = item.value();
    results.push_back(std::move(row));
    csv << check_id << ',' << name << ',' << csv_number(value) << ',' << csv_number(reference)
        << ',' << csv_number(error) << ',' << (pass ? "true" : "false") << '\n';
    passed = passed && pass;
  }

  // informational row: a computed quantity with nothing to grade it against
  void value(const std::string& check_id, const std::string& name, double v,
             OrderedJson extra = OrderedJson::object()) {
    OrderedJson row;
    row["check"] = check_id;
    row["name"] = name;
    row["value"] = v;
    for (auto& item : extra.items()) row[item.key()] = item.value();
    results.push_back(std::move(row));
    csv << check_id << ',' << name << ',' << csv_number(v) << ",,,\n";
  }
};

inline MetricPtr<2> build_metric(const Config& cfg) {
  const std::string& family = cfg.str("metric.family");
  if (family == "euclidean") return make_euclidean<2>();
  if (family == "funk") return make_funk_ball<2>();
  // randers: flat background with a constant drift form
  Vec<2> b{cfg.number("metric.drift0"), cfg.number("metric.drift1")};
  return make_randers<2>([](const Vec<2>&) { return Mat<2>::identity(); },
                         [b](const Vec<2>&) { return b; }, {Vec<2>{0.0, 0.0}});
}

inline DomainPtr<2> build_ball(const Config& cfg, const std::string& command) {
  if (cfg.str("domain.type") != "ball")
    throw config_error(command + " needs domain.type = ball", "domain.type");
  return make_ball_domain<2>(Vec<2>{0.0, 0.0}, cfg.number("domain.radius"));
}

inline SantaloOptions santalo_options(const Config& cfg) {
  SantaloOptions opts;
  opts.nodes.boundary = cfg.integer("quadrature.boundary");
  opts.nodes.fiber = cfg.integer("quadrature.indicatrix");
  opts.nodes.radial = cfg.integer("quadrature.radial");
  opts.nodes.angular = cfg.integer("quadrature.angular");
  opts.nodes.dt = cfg.number("flow.step");
  opts.workers = cfg.integer("workers");
  return opts;
}

inline DomainProfile profile_from(const Config& cfg, const Metric<2>& m, MeasureKind kind,
                                  const Domain<2>& dom) {
  return domain_profile(m, kind, dom, cfg.integer("grid.sample"), cfg.integer("quadrature.boundary"),
                        cfg.integer("quadrature.indicatrix"), cfg.integer("flow.ring"));
}

inline void run_verify_santalo(const Config& cfg, ReportRows& rows) {
  MetricPtr<2> m = build_metric(cfg);
  DomainPtr<2> dom = build_ball(cfg, "verify-santalo");
  SantaloOptions opts = santalo_options(cfg);
  double tol = cfg.number("tol.santalo");
  double R = cfg.number("domain.radius");

  std::stringstream names(cfg.str("santalo.functions"));
  std::string fname;
  while (std::getline(names, fname, ',')) {
    fname = config_trim(fname);
    std::array<SantaloReport, 2> reports =
        fname == "one"
            ? verify(m, cfg.measure(), *dom, FiberOne<2>{}, tol, opts)
            : verify(m, cfg.measure(), *dom, FiberBump<2>{Vec<2>{0.2 * R, 0.0}, 0.7 * R}, tol,
                     opts);
    for (const SantaloReport& r : reports) {
      OrderedJson extra;
      extra["tol"] = r.tol;
      extra["fiber_kept"] = r.fiber_kept;
      extra["fiber_dropped"] = r.fiber_dropped;
      rows.check(std::string("santalo-") + formula_name(r.formula), fname, r.lhs, r.rhs,
                 r.rel_err, r.pass, std::move(extra));
    }
  }
}

inline void run_funk_report(const Config& cfg, ReportRows& rows) {
  if (cfg.str("metric.family") != "funk")
    throw config_error("funk-report needs metric.family = funk", "metric.family");
  MetricPtr<2> m = build_metric(cfg);
  DomainPtr<2> dom = build_ball(cfg, "funk-report");
  double r = cfg.number("domain.radius");
  FunkReference ref = funk_reference(2, r);
  // the closed forms fix the volume normalization, so this table is always
  // the busemann-hausdorff one regardless of the measure key
  DomainProfile p = profile_from(cfg, *m, MeasureKind::busemann_hausdorff, *dom);

  double tol_fine = cfg.number("tol.reference");
  double tol_coarse = cfg.number("tol.reference_coarse");
  auto rel_row = [&rows](const char* name, double measured, double reference, double tol) {
    double err = std::fabs(measured - reference) / std::fabs(reference);
    rows.check("funk-reference", name, measured, reference, err, err <= tol, {{"tol", tol}});
  };
  rel_row("volume", p.mu, ref.mu_bh, tol_fine);
  rel_row("area-inward", p.a_plus, ref.a_plus, tol_fine);
  rel_row("area-outward", p.a_minus, ref.a_minus, tol_fine);
  rel_row("uniformity", p.lambda, ref.lambda, tol_coarse);
  rel_row("diameter", p.diameter, ref.diam, tol_coarse);
  // the distortion floor is graded absolutely; its reference value is exactly 1
  double tol_omega = cfg.number("tol.omega");
  double omega_err = std::fabs(p.omega - ref.omega);
  rows.check("funk-reference", "distortion-floor", p.omega, ref.omega, omega_err,
             omega_err <= tol_omega, {{"tol", tol_omega}});
}

inline void run_eigenvalue(const Config& cfg, ReportRows& rows) {
  MetricPtr<2> m = build_metric(cfg);
  DomainPtr<2> dom = build_ball(cfg, "eigenvalue");
  MeasureKind kind = cfg.measure();

  // pins the shooting oracle before trusting the floor built on it
  double oracle = hemisphere_eigenvalue(2, pi);
  double oracle_err = std::fabs(oracle - 2.0) / 2.0;
  rows.check("hemisphere-oracle", "diameter-pi", oracle, 2.0, oracle_err, oracle_err <= 1e-6);

  MinimizeResult res = minimize(*m, kind, *dom, cfg.integer("grid.resolution"), 2000,
                                cfg.integer("quadrature.indicatrix"));
  DomainProfile p = profile_from(cfg, *m, kind, *dom);
  double floor = eigenvalue_comparison_bound(2, p.diameter, p.lambda, kind);
  OrderedJson extra;
  extra["diameter"] = p.diameter;
  extra["uniformity"] = p.lambda;
  extra["iterations"] = res.iterations;
  rows.check("eigenvalue-floor", measure_name(kind), res.lambda, floor, res.lambda - floor,
             res.lambda > floor, std::move(extra));
}

inline void run_bounds(const Config& cfg, ReportRows& rows) {
  MetricPtr<2> m = build_metric(cfg);
  DomainPtr<2> dom = build_ball(cfg, "bounds");
  MeasureKind kind = cfg.measure();
  DomainProfile p = profile_from(cfg, *m, kind, *dom);

  for (const BoundsReport& r : area_ratio_reports(2, p))
    rows.check(r.id, measure_name(kind), r.lhs, r.rhs, r.margin, r.satisfied);

  // equality-sharp checks carry a small relative slack: on metrics where the
  // inequality is an identity the hemisphere cut leaves quadrature noise of
  // either sign in the margin
  int flux_order = cfg.integer("quadrature.flux");
  double slack = cfg.number("tol.equality");
  {
    BoundsReport worst;
    bool first = true;
    for (const BoundaryPoint<2>& bp : boundary_points(*dom, 8)) {
      BoundsReport r = hemisphere_flux_check(*m, kind, *dom, bp.x, flux_order);
      if (first || r.margin < worst.margin) worst = r;
      first = false;
    }
    double scale = std::max(std::fabs(worst.lhs), std::fabs(worst.rhs));
    rows.check("hemisphere-flux", "worst-of-8", worst.lhs, worst.rhs, worst.margin,
               worst.margin >= -slack * scale, {{"points", 8}, {"order", flux_order}});
  }
  {
    double R = cfg.number("domain.radius");
    const std::array<Vec<2>, 2> points{Vec<2>{0.0, 0.0}, Vec<2>{0.3 * R, 0.1 * R}};
    const std::array<Vec<2>, 3> covectors{Vec<2>{1.0, 0.0}, Vec<2>{0.0, 1.0},
                                          Vec<2>{0.6, -0.8}};
    BoundsReport worst;
    bool first = true;
    for (const Vec<2>& x : points)
      for (const Vec<2>& xi : covectors) {
        BoundsReport r = dual_moment_check(*m, x, xi, flux_order);
        if (first || r.margin < worst.margin) worst = r;
        first = false;
      }
    double scale = std::max(std::fabs(worst.lhs), std::fabs(worst.rhs));
    rows.check("dual-second-moment", "worst-of-6", worst.lhs, worst.rhs, worst.margin,
               worst.margin >= -slack * scale, {{"points", 6}, {"order", flux_order}});
  }

  // comparison floors from the measured profile, plus the curvature ordering:
  // shrinking the model spaces can only raise both floors
  ComparisonVolumeInputs in;
  in.k = cfg.number("comparison.k");
  in.D = p.diameter;
  in.lambda = p.lambda;
  in.n = 2;
  in.V = p.mu;
  ComparisonBounds cb = comparison_bounds(in);
  rows.value("comparison-floor", "eigenvalue", cb.lambda_bound,
             {{"diameter", p.diameter}, {"uniformity", p.lambda}, {"volume", p.mu}});
  rows.value("comparison-floor", "sobolev", cb.sobolev_bound);
  ComparisonVolumeInputs pinched = in;
  pinched.k = std::pow(pi / (2.0 * in.D), 2);  // conjugate length 2D, safely past D
  ComparisonBounds cbp = comparison_bounds(pinched);
  rows.check("comparison-ordering", "positive-curvature-dominates", cbp.lambda_bound,
             cb.lambda_bound, cbp.lambda_bound - cb.lambda_bound,
             cbp.lambda_bound > cb.lambda_bound && cbp.sobolev_bound > cb.sobolev_bound);

  // forward metric balls about the origin against the small-ball floors
  const std::string& family = cfg.str("metric.family");
  double R = cfg.number("domain.radius");
  std::vector<std::string> radius_tokens;
  {
    std::stringstream ss(cfg.str("balls.radii"));
    std::string tok;
    while (std::getline(ss, tok, ',')) radius_tokens.push_back(config_trim(tok));
  }
  for (const std::string& token : radius_tokens) {
    double rr = config_number("balls.radii", token);
    DomainPtr<2> ball;
    if (family == "funk") {
      double reach = 1.0 - std::exp(-rr);
      if (reach >= R)
        throw config_error("balls.radii entry leaves the domain", "balls.radii");
      ball = make_ball_domain<2>(Vec<2>{0.0, 0.0}, reach);
    } else {
      // translation invariant: the forward ball is a gauge sublevel set
      MetricPtr<2> gauge = m;
      for (int k = 0; k < 64; ++k) {
        double th = 2.0 * pi * k / 64.0;
        Vec<2> u{std::cos(th), std::sin(th)};
        if (rr / gauge->value(Vec<2>{0.0, 0.0}, u) >= R)
          throw config_error("balls.radii entry leaves the domain", "balls.radii");
      }
      ball = make_level_domain<2>(
          [gauge, rr](const Vec<2>& x) { return gauge->value(Vec<2>{0.0, 0.0}, x) - rr; },
          nullptr, Vec<2>{0.0, 0.0}, true);
    }
    SmallBallBounds sb = small_ball_bounds(2, p.lambda, rr, kind);
    double vol = domain_measure(*m, kind, *ball, cfg.integer("quadrature.radial"),
                                cfg.integer("quadrature.angular"), cfg.integer("quadrature.indicatrix"));
    double area = boundary_area(*m, kind, *ball, +1, cfg.integer("quadrature.boundary"),
                                cfg.integer("quadrature.indicatrix"));
    std::string name = "r=" + token;
    rows.check("small-ball-volume", name, vol, sb.volume_bound, vol - sb.volume_bound,
               vol >= sb.volume_bound);
    rows.check("small-ball-area", name, area, sb.area_bound, area - sb.area_bound,
               area >= sb.area_bound);
  }
}

inline void run_constants(const Config& cfg, ReportRows& rows) {
  if (cfg.str("domain.type") != "torus")
    throw config_error("constants needs domain.type = torus", "domain.type");
  if (cfg.str("metric.family") == "funk")
    throw config_error("constants needs a translation-invariant metric", "metric.family");
  MetricPtr<2> m = build_metric(cfg);
  MeasureKind kind = cfg.measure();
  double L = cfg.number("torus.length");
  double lo = cfg.number("torus.split_lo") * L;
  double hi = cfg.number("torus.split_hi") * L;

  std::vector<TorusSplit> splits{{0.0, 0.5 * L}, {lo, hi}};
  const char* split_names[2] = {"half-split", "config-split"};
  std::vector<SplitReport> reports = split_candidates(*m, kind, L, splits, cfg.numbers("torus.ramps"),
                                                      cfg.integer("grid.resolution"));
  double tol_energy = cfg.number("tol.energy");
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const SplitReport& r = reports[i];
    const char* name = split_names[i];
    double energy_err = std::fabs(r.energy_limit - r.a_plus) / r.a_plus;
    OrderedJson extra;
    extra["tol"] = tol_energy;
    extra["energies"] = r.energies;
    rows.check("ramp-energy", name, r.energy_limit, r.a_plus, energy_err,
               energy_err <= tol_energy, std::move(extra));
    rows.value("cheeger-candidate", name, r.cheeger, {{"mu1", r.mu1}, {"mu2", r.mu2}});
    rows.value("iso-candidate", name, r.iso);
    rows.value("sobolev-candidate", name, r.sobolev);
    // the half split is the equality configuration of the chain and a finite
    // ramp lands a hair below it, so only uneven splits are graded
    bool half = r.split.a == 0.0 && r.split.b == 0.5 * L;
    if (half)
      rows.value("split-chain", name, r.chain.margin,
                 {{"lhs", r.chain.lhs}, {"rhs", r.chain.rhs}});
    else
      rows.check("split-chain", name, r.chain.lhs, r.chain.rhs, r.chain.margin,
                 r.chain.satisfied);
  }

  // spectral gap of the torus against the comparison floor; the diameter is
  // the gauge extremized over one period cell and its lattice representatives
  double D = 0.0;
  const int dn = 48;
  for (int i = 0; i < dn; ++i)
    for (int j = 0; j < dn; ++j) {
      Vec<2> v{L * i / dn, L * j / dn};
      double best = -1.0;
      for (int si = -1; si <= 1; ++si)
        for (int sj = -1; sj <= 1; ++sj) {
          double d = m->value(Vec<2>{0.0, 0.0}, v + Vec<2>{si * L, sj * L});
          if (best < 0.0 || d < best) best = d;
        }
      D = std::max(D, best);
    }
  double lambda_hat = torus_minimize(*m, kind, L, cfg.integer("grid.torus"));
  ComparisonVolumeInputs in;
  in.k = cfg.number("comparison.k");
  in.D = D;
  in.lambda = constants_at(*m, Vec<2>{0.0, 0.0}, cfg.integer("quadrature.indicatrix")).uniformity;
  in.n = 2;
  in.V = sigma(*m, kind, Vec<2>{0.0, 0.0}, cfg.integer("quadrature.indicatrix")) * L * L;
  ComparisonBounds cb = comparison_bounds(in);
  OrderedJson extra;
  extra["diameter"] = D;
  extra["uniformity"] = in.lambda;
  extra["volume"] = in.V;
  extra["sobolev_floor"] = cb.sobolev_bound;
  rows.check("torus-gap-floor", measure_name(kind), lambda_hat, cb.lambda_bound,
             lambda_hat - cb.lambda_bound, lambda_hat > cb.lambda_bound, std::move(extra));
}

}  // namespace detail

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"verify-santalo", "funk-report", "eigenvalue",
                                              "bounds", "constants"};
  return names;
}

inline CommandOutput run_command(const std::string& command, const Config& cfg,
                                 const std::string& timestamp) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end())
    throw config_error("unknown command '" + command + "'", command);

  detail::ReportRows rows;
  std::string failure;
  try {
    if (command == "verify-santalo") detail::run_verify_santalo(cfg, rows);
    else if (command == "funk-report") detail::run_funk_report(cfg, rows);
    else if (command == "eigenvalue") detail::run_eigenvalue(cfg, rows);
    else if (command == "bounds") detail::run_bounds(cfg, rows);
    else detail::run_constants(cfg, rows);
  } catch (const config_error&) {
    throw;  // the caller maps these to exit code 2
  } catch (const error& e) {
    failure = e.what();
  }

  OrderedJson doc;
  doc["schema_version"] = 1;
  doc["command"] = command;
  doc["config"] = OrderedJson::object();
  for (const auto& kv : cfg.resolved()) doc["config"][kv.first] = kv.second;
  doc["results"] = rows.results;
  doc["passed"] = failure.empty() && rows.passed;
  if (!failure.empty()) doc["error"] = failure;
  doc["metadata"] = OrderedJson{{"timestamp", timestamp}};

  CommandOutput out;
  out.json = doc.dump(2) + "\n";
  out.csv = rows.csv.str();
  out.diagnostic = failure;
  out.exit_code = failure.empty() ? (rows.passed ? 0 : 1) : 3;
  return out;
}

}  // namespace finsler
