#include "symbranch/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>

#include "symbranch/config.hpp"
#include "symbranch/duals.hpp"
#include "symbranch/exitlaw.hpp"
#include "symbranch/quadrature.hpp"
#include "symbranch/sbm_finite.hpp"
#include "symbranch/sbm_infinite.hpp"
#include "symbranch/stats.hpp"
#include "symbranch/voter.hpp"

namespace symbranch {

using nlohmann::json;

void SummaryReport::check(const std::string& group, const std::string& name, double observed,
                          double target, double tolerance, bool pass) {
  for (const auto& c : criteria) {
    if (c.name == name) throw std::logic_error("criterion registered twice: " + name);
  }
  criteria.push_back({group, name, observed, target, tolerance, pass});
}

bool SummaryReport::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
}

json SummaryReport::to_json() const {
  json list = json::array();
  for (const auto& c : criteria) {
    list.push_back({{"group", c.group},
                    {"name", c.name},
                    {"observed", c.observed},
                    {"target", c.target},
                    {"tolerance", c.tolerance},
                    {"pass", c.pass}});
  }
  return {{"experiment", experiment}, {"seed", seed},       {"config", config},
          {"results", results},       {"criteria", list}, {"pass", passed()}};
}

namespace {

template <class... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

json mean_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}, {"count", m.count}}; }

const char* axis_name(Axis a) { return a == Axis::kU ? "U" : "V"; }

ConfigError bad(const ConfigReader& r, const std::string& key, const std::string& msg) {
  return ConfigError(r.path() + "." + key, msg);
}

void require_open_rho(const ConfigReader& r, const std::string& key, double rho) {
  if (!(rho > -1.0 && rho < 1.0)) throw bad(r, key, "correlations must lie in (-1, 1)");
}

void require_positive(const ConfigReader& r, const std::string& key, double x) {
  if (!(x > 0.0)) throw bad(r, key, "must be > 0");
}

void require_count(const ConfigReader& r, const std::string& key, std::size_t n,
                   std::size_t minimum) {
  if (n < minimum) throw bad(r, key, "must be >= " + std::to_string(minimum));
}

struct GraphSpec {
  SiteGraph graph;
  json echo;
};

GraphSpec read_graph_with_default(ConfigReader& r, const std::string& type, int dimension,
                                  int side) {
  ConfigReader& g = r.child("graph");
  const std::string t = g.choice("type", type, {"torus", "dumbbell", "single_site"});
  try {
    if (t == "torus") {
      const auto d = g.integer("dimension", dimension);
      const auto l = g.integer("side", side);
      if (d < 1 || d > 3) throw bad(g, "dimension", "expected 1, 2 or 3");
      if (l < 3) throw bad(g, "side", "torus side must be >= 3");
      return {build_torus(int(d), int(l)), {{"type", t}, {"dimension", d}, {"side", l}}};
    }
    if (t == "dumbbell") {
      const double rate = g.number("rate", 1.0);
      require_positive(g, "rate", rate);
      return {build_dumbbell(rate), {{"type", t}, {"rate", rate}}};
    }
    return {build_single_site(), {{"type", t}}};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(g.path(), e.what());
  }
}

std::vector<double> sorted_magnitudes(std::span<const BoundaryPoint> pts, Axis axis) {
  std::vector<double> out;
  for (const auto& p : pts) {
    if (p.axis == axis && p.magnitude > 0.0) out.push_back(p.magnitude);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

// Test functions for the scaling identity. Each vanishes to second order at the
// pole (a, 0) and is continuous at the origin.
struct TestFunction {
  const char* name;
  std::function<double(double, double)> u_branch;  // (y, a)
  std::function<double(double, double)> v_branch;
};

const std::vector<TestFunction>& scaling_functions() {
  static const std::vector<TestFunction> fs = {
      {"exp", [](double y, double a) { return (y - a) * (y - a) * std::exp(-y); },
       [](double y, double a) { return a * a * std::exp(-y); }},
      {"cubic", [](double y, double a) { return (y - a) * (y - a) / std::pow(1.0 + y, 3); },
       [](double y, double a) { return a * a / std::pow(1.0 + y, 3); }},
      {"lorentz",
       [](double y, double a) { return (y - a) * (y - a) / std::pow(1.0 + y * y, 2); },
       [](double y, double a) { return a * a / std::pow(1.0 + y * y, 2); }},
  };
  return fs;
}

// Integral of g(y) * density(y) over the U-axis with a pole at `pole`, plus the
// V-axis part.
double integrate_on_e(const std::function<double(double)>& u_part,
                      const std::function<double(double)>& v_part, double pole) {
  double total = quad::integrate(u_part, 0.0, pole);
  total += quad::integrate(u_part, pole, 2.0 * pole + 1.0);
  total += quad::integrate_tail(u_part, 2.0 * pole + 1.0);
  total += quad::integrate_half_line(v_part, pole);
  return total;
}

ExperimentResult exitlaw_validate(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  const auto rhos = cfg.numbers("rhos", {-0.9, -0.5, 0.0, 0.5, 0.9});
  const auto starts = cfg.number_pairs("starts", {{1.0, 1.0}, {2.0, 0.5}});
  const std::size_t samples = cfg.count("samples", 100000);
  const std::size_t oracle_samples = cfg.count("oracle_samples", 10000);
  BrownianExitOptions oracle;
  oracle.dt_min = cfg.number("oracle_dt", 1e-4);
  const double ks_tol = cfg.number("ks_tolerance", 0.02);
  const double p_min = cfg.number("oracle_p_min", 1e-3);
  const double mass_tol = cfg.number("mass_tolerance", 1e-6);
  ConfigReader& nu = cfg.child("jump_measure");
  const auto nu_rhos = nu.numbers("rhos", {-0.9, -0.5, 0.0, 0.5, 0.9});
  const auto scales = nu.numbers("scales", {0.5, 2.0, 3.0});
  const auto truncations =
      nu.number_pairs("truncations", {{-0.5, 0.01}, {-0.3, 0.1}, {0.0, 0.1}, {0.5, 0.1}});
  const double nu_tol = nu.number("tolerance", 1e-6);
  const double balance_tol = nu.number("balance_tolerance", 1e-8);
  cfg.finish();
  for (double r : rhos) require_open_rho(cfg, "rhos", r);
  for (double r : nu_rhos) require_open_rho(nu, "rhos", r);
  for (auto [u, v] : starts) {
    if (!(u > 0.0 && v > 0.0)) throw bad(cfg, "starts", "starts must lie inside the quadrant");
  }
  for (double a : scales) require_positive(nu, "scales", a);
  for (auto [r, e] : truncations) {
    require_open_rho(nu, "truncations", r);
    if (!(e > 0.0 && e < 0.5)) throw bad(nu, "truncations", "eps must lie in (0, 0.5)");
  }
  require_count(cfg, "samples", samples, 2);
  require_count(cfg, "oracle_samples", oracle_samples, 2);
  require_positive(cfg, "oracle_dt", oracle.dt_min);

  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = {{"rhos", rhos},
                {"starts", starts},
                {"samples", samples},
                {"oracle_samples", oracle_samples},
                {"oracle_dt", oracle.dt_min},
                {"ks_tolerance", ks_tol},
                {"oracle_p_min", p_min},
                {"mass_tolerance", mass_tol},
                {"jump_measure",
                 {{"rhos", nu_rhos},
                  {"scales", scales},
                  {"truncations", truncations},
                  {"tolerance", nu_tol},
                  {"balance_tolerance", balance_tol}}}};
  CsvTable table("exitlaw-validate",
                 {"rho", "u0", "v0", "axis", "mass", "ks", "oracle_ks", "oracle_p"});

  std::uint64_t case_index = 0;
  json cases = json::array();
  for (double rho : rhos) {
    const ExitLawParams params = ExitLawParams::make(rho);
    for (auto [u, v] : starts) {
      const std::string where = fmt("rho=%g start=(%g,%g)", rho, u, v);
      const double mu = exit_axis_mass(params, u, v, Axis::kU);
      const double mv = exit_axis_mass(params, u, v, Axis::kV);
      rep.check("exit-normalization", "total mass " + where, mu + mv, 1.0, mass_tol,
                std::abs(mu + mv - 1.0) < mass_tol);

      std::vector<BoundaryPoint> draws(samples);
      for_each_index(samples, exec, [&](std::size_t i) {
        Rng rng = make_stream(seed, StreamTag::kExitLaw, i, case_index);
        draws[i] = sample_exit(params, u, v, rng);
      });
      std::vector<double> oracle_signed(oracle_samples);
      std::vector<std::uint8_t> exited(oracle_samples);
      for_each_index(oracle_samples, exec, [&](std::size_t i) {
        Rng rng = make_stream(seed, StreamTag::kBrownianOracle, i, case_index);
        const BrownianExit e = simulate_brownian_exit(rho, u, v, rng, oracle);
        oracle_signed[i] = e.point.signed_magnitude();
        exited[i] = e.exited ? 1 : 0;
      });
      std::vector<double> exact_signed(samples);
      for (std::size_t i = 0; i < samples; ++i) exact_signed[i] = draws[i].signed_magnitude();
      const double d2 = ks_two_sample(oracle_signed, exact_signed);
      const double n_eff =
          double(samples) * double(oracle_samples) / double(samples + oracle_samples);
      const double p2 = ks_p_value(d2, n_eff);
      const auto stuck = std::count(exited.begin(), exited.end(), 0);
      rep.check("exit-sampler", "oracle two-sample p " + where, p2, p_min, 0.0,
                p2 > p_min && stuck == 0);

      json c = {{"rho", rho}, {"start", {u, v}}, {"oracle_ks", d2}, {"oracle_p", p2},
                {"oracle_unfinished", stuck}};
      for (Axis axis : {Axis::kU, Axis::kV}) {
        const auto mags = sorted_magnitudes(draws, axis);
        const double mass = axis == Axis::kU ? mu : mv;
        const auto cdf = exit_axis_cdf(params, u, v, axis, mags);
        const double ks = ks_statistic_partial(mags, samples, cdf, mass);
        rep.check("exit-sampler", fmt("ks %s ", axis_name(axis)) + where, ks, 0.0, ks_tol,
                  ks < ks_tol);
        c[axis_name(axis)] = {{"mass", mass}, {"ks", ks}, {"count", mags.size()}};
        table.add(rho, u, v, axis_name(axis), mass, ks, d2, p2);
      }
      cases.push_back(c);
      ++case_index;
    }
  }
  rep.results["exit_law"] = cases;

  json facts = json::array();
  for (double rho : nu_rhos) {
    auto dens = [rho](Axis axis, double y) {
      return nu_density(rho, BoundaryPoint::make(axis, y));
    };
    const double moment =
        quad::integrate_half_line([&](double y) { return y > 0.0 ? y * dens(Axis::kV, y) : 0.0; },
                                  1.0);
    rep.check("jump-measure", fmt("V first moment rho=%g", rho), moment, 1.0, nu_tol,
              std::abs(moment - 1.0) < nu_tol);
    json f = {{"rho", rho}, {"v_first_moment", moment}};
    for (double a : scales) {
      for (const auto& tf : scaling_functions()) {
        auto scaled = [&](Axis axis, double y) {
          return nu_scaled_density(rho, a, BoundaryPoint::make(axis, y));
        };
        const double lhs = integrate_on_e(
            [&](double y) { return y > 0.0 ? tf.u_branch(y, a) * scaled(Axis::kU, y) : 0.0; },
            [&](double y) { return y > 0.0 ? tf.v_branch(y, a) * scaled(Axis::kV, y) : 0.0; },
            a);
        const double rhs =
            integrate_on_e(
                [&](double y) { return y > 0.0 ? tf.u_branch(a * y, a) * dens(Axis::kU, y) : 0.0; },
                [&](double y) { return y > 0.0 ? tf.v_branch(a * y, a) * dens(Axis::kV, y) : 0.0; },
                1.0) /
            a;
        const double err = std::abs(lhs - rhs);
        rep.check("jump-measure", fmt("scaling %s rho=%g a=%g", tf.name, rho, a), lhs, rhs,
                  nu_tol, err < nu_tol);
        f["scaling"].push_back({{"a", a}, {"function", tf.name}, {"lhs", lhs}, {"rhs", rhs}});
      }
    }
    facts.push_back(f);
  }
  rep.results["jump_measure"] = facts;

  json balances = json::array();
  for (auto [rho, eps] : truncations) {
    TruncatedJumpMeasure m = [&] {
      try {
        return truncate_nu(rho, eps);
      } catch (const std::runtime_error& e) {
        throw bad(nu, "truncations", fmt("rho=%g eps=%g: ", rho, eps) + e.what());
      }
    }();
    // Independent check in the original variable y.
    auto u_dens = [rho](double y) { return nu_density(rho, BoundaryPoint::make(Axis::kU, y)); };
    const double upper =
        quad::integrate_tail([&](double y) { return (y - 1.0) * u_dens(y); }, 1.0 + eps);
    const double lower = quad::integrate(
        [&](double y) { return y > 0.0 ? (1.0 - y) * u_dens(y) : 0.0; }, 0.0,
        1.0 - m.eps_prime());
    const double v_mass = quad::integrate_half_line(
        [&](double y) { return y > 0.0 ? nu_density(rho, BoundaryPoint::make(Axis::kV, y)) : 0.0; },
        1.0);
    const double residual = upper - lower - v_mass;
    rep.check("jump-measure", fmt("balance rho=%g eps=%g", rho, eps), residual, 0.0,
              balance_tol, std::abs(residual) < balance_tol);
    balances.push_back({{"rho", rho},
                        {"eps", eps},
                        {"eps_prime", m.eps_prime()},
                        {"upper", upper},
                        {"lower", lower},
                        {"v_mass", v_mass},
                        {"residual", residual},
                        {"table_drift_shift", m.drift_shift()},
                        {"v_first_moment", m.v_first_moment()}});
  }
  rep.results["truncation"] = balances;
  res.tables.push_back(std::move(table));
  return res;
}

// ---------------------------------------------------------------------------

ExperimentResult moment_curve(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  const auto rhos = cfg.numbers("rhos", {-0.5, 0.0, 0.5});
  const auto start = cfg.numbers("start", {1.0, 1.0});
  const std::size_t mag_samples = cfg.count("magnitude_samples", 1000000);
  const std::size_t time_samples = cfg.count("time_samples", 100000);
  const double mag_tol = cfg.number("magnitude_tolerance", 0.10);
  const double time_tol = cfg.number("time_tolerance", 0.15);
  const double exponent_tol = cfg.number("exponent_tolerance", 1e-12);
  BrownianExitOptions oracle;
  oracle.dt_min = cfg.number("oracle_dt", 1e-4);
  cfg.finish();
  for (double r : rhos) require_open_rho(cfg, "rhos", r);
  if (start.size() != 2 || !(start[0] > 0.0 && start[1] > 0.0)) {
    throw bad(cfg, "start", "expected two positive numbers");
  }
  require_count(cfg, "magnitude_samples", mag_samples, 100);
  require_count(cfg, "time_samples", time_samples, 100);
  require_positive(cfg, "oracle_dt", oracle.dt_min);

  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = {{"rhos", rhos},
                {"start", start},
                {"magnitude_samples", mag_samples},
                {"time_samples", time_samples},
                {"magnitude_tolerance", mag_tol},
                {"time_tolerance", time_tol},
                {"exponent_tolerance", exponent_tol},
                {"oracle_dt", oracle.dt_min}};

  const double p0 = critical_exponent(0.0);
  const double p1 = critical_exponent(1.0);
  const double pm = critical_exponent(-0.5);
  const double pp = critical_exponent(0.5);
  const double pinf = critical_exponent(-1.0);
  rep.check("critical-exponent", "p(0) exact", p0, 2.0, 0.0, p0 == 2.0);
  rep.check("critical-exponent", "p(1) exact", p1, 1.0, 0.0, p1 == 1.0);
  rep.check("critical-exponent", "p(-0.5)", pm, 3.0, exponent_tol,
            std::abs(pm - 3.0) < exponent_tol);
  rep.check("critical-exponent", "p(0.5)", pp, 1.5, exponent_tol,
            std::abs(pp - 1.5) < exponent_tol);
  rep.check("critical-exponent", "p(-1) infinite", pinf, std::numeric_limits<double>::infinity(),
            0.0, std::isinf(pinf) && pinf > 0.0);

  CsvTable table("moment-curve", {"rho", "p", "hill_magnitude", "hill_time", "k_magnitude",
                                  "k_time"});
  json rows = json::array();
  std::uint64_t case_index = 0;
  for (double rho : rhos) {
    const ExitLawParams params = ExitLawParams::make(rho);
    std::vector<double> mags(mag_samples);
    for_each_index(mag_samples, exec, [&](std::size_t i) {
      Rng rng = make_stream(seed, StreamTag::kExitLaw, i, case_index);
      mags[i] = sample_exit(params, start[0], start[1], rng).magnitude;
    });
    std::vector<double> taus(time_samples);
    for_each_index(time_samples, exec, [&](std::size_t i) {
      Rng rng = make_stream(seed, StreamTag::kBrownianOracle, i, case_index);
      taus[i] = simulate_brownian_exit(rho, start[0], start[1], rng, oracle).tau;
    });
    const std::size_t km = default_hill_k(mag_samples);
    const std::size_t kt = default_hill_k(time_samples);
    const double hm = hill_exponent(mags, km);
    const double ht = hill_exponent(taus, kt);
    rep.check("tail-moments", fmt("magnitude tail rho=%g", rho), hm, params.p,
              mag_tol * params.p, std::abs(hm - params.p) < mag_tol * params.p);
    rep.check("tail-moments", fmt("exit-time tail rho=%g", rho), ht, params.p / 2.0,
              time_tol * params.p / 2.0, std::abs(ht - params.p / 2.0) < time_tol * params.p / 2.0);
    table.add(rho, params.p, hm, ht, km, kt);
    rows.push_back({{"rho", rho},
                    {"p", params.p},
                    {"hill_magnitude", hm},
                    {"hill_time", ht},
                    {"median_time", quantile(taus, 0.5)}});
    ++case_index;
  }
  rep.results["tails"] = rows;
  res.tables.push_back(std::move(table));
  return res;
}

// ---------------------------------------------------------------------------

struct MassSetup {
  GraphSpec graph;
  SdeConfig base;
  std::vector<double> rhos;
  PairField initial;
  double sigmas = 3.0;
  double ratio_tol = 0.05;
};

MassSetup read_mass_setup(ConfigReader& cfg, std::uint64_t seed) {
  MassSetup s{read_graph_with_default(cfg, "torus", 1, 8), {}, {}, {}, 3.0, 0.05};
  const std::size_t n = s.graph.graph.size();
  s.base.gamma = cfg.number("gamma", 1.0);
  s.base.dt = cfg.number("dt", 0.0);
  s.base.horizon = cfg.number("horizon", 1.0);
  s.base.replicas = cfg.count("replicas", 10000);
  s.base.seed = seed;
  s.rhos = cfg.numbers("rhos", {-0.5, 0.0, 0.5});
  s.initial = {cfg.field("u0", n, 1.0), cfg.field("v0", n, 1.0)};
  s.sigmas = cfg.number("sigmas", 3.0);
  s.ratio_tol = cfg.number("ratio_tolerance", 0.05);
  cfg.finish();
  for (double r : s.rhos) {
    if (!(r >= -1.0 && r <= 1.0)) throw bad(cfg, "rhos", "correlations must lie in [-1, 1]");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(s.initial.u[k] >= 0.0 && s.initial.v[k] >= 0.0)) {
      throw bad(cfg, "u0", "initial masses must be nonnegative");
    }
  }
  try {
    s.base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.path(), e.what());
  }
  return s;
}

json mass_echo(const MassSetup& s) {
  return {{"graph", s.graph.echo},
          {"gamma", s.base.gamma},
          {"dt", s.base.step()},
          {"horizon", s.base.horizon},
          {"replicas", s.base.replicas},
          {"rhos", s.rhos},
          {"u0", s.initial.u},
          {"v0", s.initial.v},
          {"sigmas", s.sigmas},
          {"ratio_tolerance", s.ratio_tol}};
}

// One ensemble per rho; the same replica index across rho shares its stream.
std::vector<std::vector<SbmRun>> mass_runs(const MassSetup& s, Exec exec) {
  std::vector<std::vector<SbmRun>> out;
  for (double rho : s.rhos) {
    SdeConfig c = s.base;
    c.rho = rho;
    out.push_back(simulate_ensemble(s.graph.graph, c, s.initial, {}, exec));
  }
  return out;
}

ExperimentResult mass_martingale(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  const MassSetup s = read_mass_setup(cfg, seed);
  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = mass_echo(s);
  const auto runs = mass_runs(s, exec);
  CsvTable table("mass-martingale", {"rho", "replica", "total_u", "total_v"});
  json rows = json::array();
  for (std::size_t r = 0; r < s.rhos.size(); ++r) {
    std::vector<double> tu, tv;
    for (std::size_t i = 0; i < runs[r].size(); ++i) {
      const auto& o = runs[r][i].observables;
      tu.push_back(o.total_u);
      tv.push_back(o.total_v);
      table.add(s.rhos[r], i, o.total_u, o.total_v);
    }
    const MeanSe mu = mean_se(tu);
    const MeanSe mv = mean_se(tv);
    const double iu = s.initial.total_u();
    const double iv = s.initial.total_v();
    rep.check("mass-martingale", fmt("total U rho=%g", s.rhos[r]), mu.mean, iu,
              s.sigmas * mu.se, std::abs(mu.mean - iu) < s.sigmas * mu.se);
    rep.check("mass-martingale", fmt("total V rho=%g", s.rhos[r]), mv.mean, iv,
              s.sigmas * mv.se, std::abs(mv.mean - iv) < s.sigmas * mv.se);
    rows.push_back({{"rho", s.rhos[r]},
                    {"initial_u", iu},
                    {"initial_v", iv},
                    {"total_u", mean_json(mu)},
                    {"total_v", mean_json(mv)}});
  }
  rep.results["masses"] = rows;
  res.tables.push_back(std::move(table));
  return res;
}

ExperimentResult bracket_ratio(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  const MassSetup s = read_mass_setup(cfg, seed);
  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = mass_echo(s);
  const auto runs = mass_runs(s, exec);
  CsvTable table("bracket-ratio",
                 {"rho", "replica", "quad_u", "quad_v", "cross", "clock", "clamps"});
  json rows = json::array();
  for (std::size_t r = 0; r < s.rhos.size(); ++r) {
    const double rho = s.rhos[r];
    double qu = 0.0, qv = 0.0, cr = 0.0, cl = 0.0;
    std::size_t clamps = 0;
    for (std::size_t i = 0; i < runs[r].size(); ++i) {
      const auto& o = runs[r][i].observables;
      const Brackets& b = o.brackets;
      table.add(rho, i, b.quad_u, b.quad_v, b.cross, b.clock, o.clamps);
      qu += b.quad_u;
      qv += b.quad_v;
      cr += b.cross;
      cl += b.clock;
      clamps += o.clamps;
    }
    const double ratio = cr / (0.5 * (qu + qv));
    // Relative tolerance, taken absolute at rho = 0.
    const double tol = s.ratio_tol * (rho == 0.0 ? 1.0 : std::abs(rho));
    rep.check("mass-martingale", fmt("cross/quad rho=%g", rho), ratio, rho, tol,
              std::abs(ratio - rho) <= tol);
    rows.push_back({{"rho", rho},
                    {"ratio", ratio},
                    {"quad_u", qu},
                    {"quad_v", qv},
                    {"cross", cr},
                    {"clock", cl},
                    {"clamps", clamps}});
  }
  rep.results["brackets"] = rows;
  res.tables.push_back(std::move(table));
  return res;
}

// ---------------------------------------------------------------------------

ExperimentResult duality_moment(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  const GraphSpec gs = read_graph_with_default(cfg, "dumbbell", 1, 8);
  const SiteGraph& g = gs.graph;
  const std::size_t n = g.size();
  const double gamma = cfg.number("gamma", 1.0);
  const double t = cfg.number("t", 0.5);
  const double dt = cfg.number("dt", 0.0);
  const auto rhos = cfg.numbers("rhos", {-0.5, 0.0});
  std::vector<double> du(n, 1.0), dv(n, 1.0);
  if (n >= 2) {
    du[1] = 0.5;
    dv[0] = 0.5;
  }
  const bool given_u = cfg.has("u0"), given_v = cfg.has("v0");
  PairField initial{cfg.field("u0", n, 1.0), cfg.field("v0", n, 1.0)};
  if (!given_u) initial.u = du;
  if (!given_v) initial.v = dv;
  const auto u_sites = cfg.counts("u_sites", {0});
  const auto v_sites = cfg.counts("v_sites", {n > 1 ? std::size_t{1} : std::size_t{0}});
  const std::size_t euler_replicas = cfg.count("euler_replicas", 100000);
  const std::size_t dual_replicas = cfg.count("dual_replicas", 100000);
  const double z = cfg.number("z", 1.959963984540054);
  cfg.finish();
  for (double r : rhos) {
    if (!(r >= -1.0 && r <= 1.0)) throw bad(cfg, "rhos", "correlations must lie in [-1, 1]");
  }
  for (auto k : u_sites) {
    if (k >= n) throw bad(cfg, "u_sites", "site out of range");
  }
  for (auto k : v_sites) {
    if (k >= n) throw bad(cfg, "v_sites", "site out of range");
  }
  require_count(cfg, "euler_replicas", euler_replicas, 2);
  require_count(cfg, "dual_replicas", dual_replicas, 2);

  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = {{"graph", gs.echo},       {"gamma", gamma},        {"t", t},
                {"rhos", rhos},           {"u0", initial.u},       {"v0", initial.v},
                {"u_sites", u_sites},     {"v_sites", v_sites},    {"z", z},
                {"euler_replicas", euler_replicas}, {"dual_replicas", dual_replicas}};
  CsvTable table("duality-moment", {"rho", "method", "mean", "se", "lo", "hi"});
  json rows = json::array();
  for (double rho : rhos) {
    SdeConfig c;
    c.gamma = gamma;
    c.rho = rho;
    c.dt = dt;
    c.horizon = t;
    c.replicas = euler_replicas;
    c.seed = seed;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(cfg.path(), e.what());
    }
    const auto runs = simulate_ensemble(g, c, initial, {}, exec);
    std::vector<double> products(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
      double p = 1.0;
      for (auto k : u_sites) p *= runs[i].final_state.u[k];
      for (auto k : v_sites) p *= runs[i].final_state.v[k];
      products[i] = p;
    }
    const MeanSe euler = mean_se(products);

    MomentDualConfig d;
    d.gamma = gamma;
    d.rho = rho;
    d.t = t;
    d.replicas = dual_replicas;
    d.seed = seed;
    const MomentDualResult dual = moment_dual_estimate(g, d, initial, u_sites, v_sites, exec);

    const double lo1 = euler.mean - z * euler.se, hi1 = euler.mean + z * euler.se;
    const double lo2 = dual.estimate.mean - z * dual.estimate.se;
    const double hi2 = dual.estimate.mean + z * dual.estimate.se;
    const bool overlap = lo1 <= hi2 && lo2 <= hi1;
    rep.check("moment-duality", fmt("euler vs dual rho=%g", rho), euler.mean, dual.estimate.mean,
              z * (euler.se + dual.estimate.se), overlap && !dual.unstable);
    table.add(rho, "euler", euler.mean, euler.se, lo1, hi1);
    table.add(rho, "dual", dual.estimate.mean, dual.estimate.se, lo2, hi2);
    rows.push_back({{"rho", rho},
                    {"euler", mean_json(euler)},
                    {"dual", mean_json(dual.estimate)},
                    {"dual_unstable", dual.unstable},
                    {"z_gap", z_gap(euler, dual.estimate)}});
  }
  rep.results["moments"] = rows;
  res.tables.push_back(std::move(table));
  return res;
}

ExperimentResult duality_self(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  const GraphSpec gs = read_graph_with_default(cfg, "torus", 1, 4);
  const SiteGraph& g = gs.graph;
  const std::size_t n = g.size();
  SdeConfig c;
  c.gamma = cfg.number("gamma", 1.0);
  c.rho = cfg.number("rho", 0.3);
  c.dt = cfg.number("dt", 0.0);
  c.horizon = cfg.number("t", 0.5);
  c.replicas = cfg.count("replicas", 10000);
  c.seed = seed;
  const PairField x0{cfg.field("u0", n, 0.5), cfg.field("v0", n, 0.3)};
  const PairField y0{cfg.field("y1", n, 0.4), cfg.field("y2", n, 0.2)};
  const double sigmas = cfg.number("sigmas", 3.0);
  cfg.finish();
  require_open_rho(cfg, "rho", c.rho);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.path(), e.what());
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(x0.u[k] >= 0 && x0.v[k] >= 0 && y0.u[k] >= 0 && y0.v[k] >= 0)) {
      throw bad(cfg, "u0", "fields must be nonnegative");
    }
  }

  std::vector<PairField> fwd(c.replicas), bwd(c.replicas);
  for_each_index(c.replicas, exec, [&](std::size_t i) {
    Rng a = make_stream(seed, StreamTag::kSbmFinite, i, 0);
    fwd[i] = simulate(g, c, x0, {}, a).final_state;
    Rng b = make_stream(seed, StreamTag::kSbmFinite, i, 1);
    bwd[i] = simulate(g, c, y0, {}, b).final_state;
  });
  const SelfDualGap gap = selfdual_check(fwd, y0, bwd, x0, c.rho);

  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = {{"graph", gs.echo},       {"gamma", c.gamma},   {"rho", c.rho},
                {"dt", c.step()},         {"t", c.horizon},     {"replicas", c.replicas},
                {"u0", x0.u},             {"v0", x0.v},         {"y1", y0.u},
                {"y2", y0.v},             {"sigmas", sigmas}};
  rep.check("self-duality", "real gap", gap.gap.real(), 0.0, sigmas * gap.se_real,
            std::abs(gap.gap.real()) < sigmas * gap.se_real);
  rep.check("self-duality", "imaginary gap", gap.gap.imag(), 0.0, sigmas * gap.se_imag,
            std::abs(gap.gap.imag()) < sigmas * gap.se_imag);
  rep.results = {{"forward", {{"re", gap.forward.mean.real()}, {"im", gap.forward.mean.imag()}}},
                 {"backward", {{"re", gap.backward.mean.real()}, {"im", gap.backward.mean.imag()}}},
                 {"gap", {{"re", gap.gap.real()}, {"im", gap.gap.imag()}}},
                 {"se", {{"re", gap.se_real}, {"im", gap.se_imag}}}};
  CsvTable table("duality-self", {"side", "replica", "re", "im"});
  for (std::size_t i = 0; i < c.replicas; ++i) {
    const auto f = selfdual_functional(fwd[i], y0, c.rho);
    table.add("forward", i, f.real(), f.imag());
  }
  for (std::size_t i = 0; i < c.replicas; ++i) {
    const auto b = selfdual_functional(x0, bwd[i], c.rho);
    table.add("backward", i, b.real(), b.imag());
  }
  res.tables.push_back(std::move(table));
  return res;
}

// ---------------------------------------------------------------------------

ExperimentResult gamma_limit(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  const auto gammas = cfg.numbers("gammas", {1.0, 10.0, 100.0});
  const double rho = cfg.number("rho", 0.0);
  const double horizon = cfg.number("horizon", 0.5);
  const double base_dt = cfg.number("base_dt", 1e-3);
  const auto start = cfg.numbers("start", {1.0, 1.0});
  const std::size_t samples = cfg.count("samples", 10000);
  const double level = cfg.number("quantile", 0.99);
  cfg.finish();
  require_open_rho(cfg, "rho", rho);
  require_positive(cfg, "horizon", horizon);
  require_positive(cfg, "base_dt", base_dt);
  if (start.size() != 2 || !(start[0] > 0.0 && start[1] > 0.0)) {
    throw bad(cfg, "start", "expected two positive numbers");
  }
  if (gammas.size() < 2) throw bad(cfg, "gammas", "need at least two values");
  for (double g : gammas) require_positive(cfg, "gammas", g);
  require_count(cfg, "samples", samples, 2);
  if (!(level > 0.0 && level < 1.0)) throw bad(cfg, "quantile", "expected (0, 1)");

  const ExitLawParams params = ExitLawParams::make(rho);
  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = {{"gammas", gammas}, {"rho", rho},         {"horizon", horizon},
                {"base_dt", base_dt}, {"start", start},   {"samples", samples},
                {"quantile", level}};
  CsvTable table("gamma-limit", {"gamma", "replica", "u", "v", "occupation", "absorbed"});
  std::map<Axis, std::vector<double>> ks;
  std::vector<double> q;
  json rows = json::array();
  for (double gamma : gammas) {
    SdeConfig c;
    c.gamma = gamma;
    c.rho = rho;
    c.horizon = horizon;
    c.dt = base_dt * std::min(1.0, 1.0 / gamma);
    std::vector<NonspatialResult> out(samples);
    for_each_index(samples, exec, [&](std::size_t i) {
      // Common random numbers across gamma.
      Rng rng = make_stream(seed, StreamTag::kNonspatial, i);
      out[i] = nonspatial_simulate(c, start[0], start[1], rng);
    });
    std::vector<BoundaryPoint> ends;
    std::vector<double> occ(samples);
    std::size_t absorbed = 0;
    for (std::size_t i = 0; i < samples; ++i) {
      const auto& r = out[i];
      table.add(gamma, i, r.u, r.v, r.occupation, r.absorbed ? 1 : 0);
      occ[i] = r.occupation;
      // Paths still inside the quadrant count towards neither axis.
      if (r.absorbed) {
        ends.push_back(BoundaryPoint::from_pair(r.u, r.v));
        ++absorbed;
      }
    }
    json row = {{"gamma", gamma}, {"dt", c.step()}, {"absorbed", absorbed}};
    for (Axis axis : {Axis::kU, Axis::kV}) {
      const auto mags = sorted_magnitudes(ends, axis);
      const auto cdf = exit_axis_cdf(params, start[0], start[1], axis, mags);
      const double mass = exit_axis_mass(params, start[0], start[1], axis);
      ks[axis].push_back(ks_statistic_partial(mags, samples, cdf, mass));
      row[fmt("ks_%s", axis_name(axis))] = ks[axis].back();
    }
    q.push_back(quantile(occ, level));
    row["occupation_quantile"] = q.back();
    rows.push_back(row);
  }
  for (std::size_t j = 1; j < gammas.size(); ++j) {
    for (Axis axis : {Axis::kU, Axis::kV}) {
      rep.check("gamma-limit",
                fmt("ks %s decreases gamma %g->%g", axis_name(axis), gammas[j - 1], gammas[j]),
                ks[axis][j], ks[axis][j - 1], 0.0, ks[axis][j] < ks[axis][j - 1]);
    }
    rep.check("gamma-limit",
              fmt("occupation quantile non-increasing gamma %g->%g", gammas[j - 1], gammas[j]),
              q[j], q[j - 1], 0.0, q[j] <= q[j - 1]);
  }
  rep.results["by_gamma"] = rows;
  res.tables.push_back(std::move(table));
  return res;
}

// ---------------------------------------------------------------------------

struct InfiniteSetup {
  GraphSpec graph;
  double rho = -0.3;
  double t = 0.5;
  BoundaryField initial = {};
  PairField initial_pair = {};
  std::size_t replicas = 20000;
  std::size_t site = 0;
  double sigmas = 3.0;
};

void read_infinite_common(ConfigReader& cfg, InfiniteSetup& s) {
  const std::size_t n = s.graph.graph.size();
  s.rho = cfg.number("rho", s.rho);
  s.t = cfg.number("t", s.t);
  ScalarField du(n, 0.0), dv(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) (k % 2 == 0 ? du : dv)[k] = 1.0;
  s.initial_pair = {cfg.field("u0", n, 0.0), cfg.field("v0", n, 0.0)};
  if (!cfg.has("u0") && !cfg.has("v0")) s.initial_pair = {du, dv};
  s.replicas = cfg.count("replicas", s.replicas);
  s.site = cfg.count("site", s.site);
  s.sigmas = cfg.number("sigmas", s.sigmas);
  if (!(s.rho >= -1.0 && s.rho < 1.0)) throw bad(cfg, "rho", "expected [-1, 1)");
  require_positive(cfg, "t", s.t);
  require_count(cfg, "replicas", s.replicas, 2);
  if (s.site >= n) throw bad(cfg, "site", "site out of range");
  try {
    for (std::size_t k = 0; k < n; ++k) {
      if (!(s.initial_pair.u[k] >= 0.0 && s.initial_pair.v[k] >= 0.0)) {
        throw std::invalid_argument("initial masses must be nonnegative");
      }
    }
    s.initial = to_boundary(s.initial_pair);
  } catch (const std::invalid_argument& e) {
    throw bad(cfg, "u0", e.what());
  }
}

json infinite_echo(const InfiniteSetup& s) {
  return {{"graph", s.graph.echo}, {"rho", s.rho},          {"t", s.t},
          {"u0", s.initial_pair.u}, {"v0", s.initial_pair.v}, {"replicas", s.replicas},
          {"site", s.site},         {"sigmas", s.sigmas}};
}

bool field_on_e(const BoundaryField& f) {
  return std::all_of(f.begin(), f.end(), [](const BoundaryPoint& p) { return p.u() * p.v() == 0.0; });
}

bool pair_on_e(const PairField& f) {
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f.u[k] * f.v[k] != 0.0) return false;
  }
  return true;
}

struct SiteSamples {
  std::vector<double> u;
  std::vector<double> v;
  bool on_e = true;
};

SiteSamples trotter_samples(const InfiniteSetup& s, double eps, std::uint64_t seed,
                            std::uint64_t salt, Exec exec) {
  const ExitLawParams params = ExitLawParams::make(s.rho);
  const HeatKernel kernel(s.graph.graph, eps);
  SiteSamples out{std::vector<double>(s.replicas), std::vector<double>(s.replicas), true};
  std::vector<std::uint8_t> ok(s.replicas, 1);
  for_each_index(s.replicas, exec, [&](std::size_t i) {
    Rng rng = make_stream(seed, StreamTag::kTrotter, i, salt);
    const auto tr = trotter_simulate(s.graph.graph, params, eps, s.t, s.initial, rng, {}, &kernel);
    out.u[i] = tr.final_state[s.site].u();
    out.v[i] = tr.final_state[s.site].v();
    ok[i] = field_on_e(tr.final_state) ? 1 : 0;
  });
  out.on_e = std::all_of(ok.begin(), ok.end(), [](auto x) { return x == 1; });
  return out;
}

ExperimentResult trotter_refine(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  InfiniteSetup s{read_graph_with_default(cfg, "dumbbell", 1, 8)};
  read_infinite_common(cfg, s);
  const auto eps = cfg.numbers("eps", {0.02, 0.01});
  const double power = cfg.number("power", 1.2);
  cfg.finish();
  if (eps.size() < 2) throw bad(cfg, "eps", "need at least two step sizes");
  for (double e : eps) require_positive(cfg, "eps", e);
  require_positive(cfg, "power", power);

  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = infinite_echo(s);
  rep.config["eps"] = eps;
  rep.config["power"] = power;
  CsvTable table("trotter-refine", {"eps", "replica", "u", "v"});
  std::vector<MeanSe> moments;
  bool on_e = true;
  json rows = json::array();
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const SiteSamples x = trotter_samples(s, eps[j], seed, j, exec);
    std::vector<double> f(s.replicas);
    for (std::size_t i = 0; i < s.replicas; ++i) {
      f[i] = std::pow(x.u[i], power);
      table.add(eps[j], i, x.u[i], x.v[i]);
    }
    moments.push_back(mean_se(f));
    on_e = on_e && x.on_e;
    rows.push_back({{"eps", eps[j]}, {"moment", mean_json(moments.back())},
                    {"mean_u", mean_json(mean_se(x.u))}});
  }
  for (std::size_t j = 1; j < eps.size(); ++j) {
    const double se = std::hypot(moments[j].se, moments[j - 1].se);
    const double gap = std::abs(moments[j].mean - moments[j - 1].mean);
    rep.check("sbm-infinite", fmt("trotter refinement eps %g->%g", eps[j - 1], eps[j]), gap, 0.0,
              s.sigmas * se, gap < s.sigmas * se);
  }
  rep.check("sbm-infinite", "trotter states on E", on_e ? 1.0 : 0.0, 1.0, 0.0, on_e);
  rep.results["refinement"] = rows;
  res.tables.push_back(std::move(table));
  return res;
}

ExperimentResult pdmp_vs_trotter(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  InfiniteSetup s{read_graph_with_default(cfg, "dumbbell", 1, 8)};
  read_infinite_common(cfg, s);
  const double trunc_eps = cfg.number("trunc_eps", 0.1);
  const double trotter_eps = cfg.number("trotter_eps", 0.01);
  PdmpOptions popts;
  popts.flow_substep = cfg.number("flow_substep", 1e-2);
  popts.safety = cfg.number("safety", 1.5);
  cfg.finish();
  if (s.rho == -1.0) throw bad(cfg, "rho", "use voter-limit for rho = -1");
  if (!(trunc_eps > 0.0 && trunc_eps < 0.5)) throw bad(cfg, "trunc_eps", "expected (0, 0.5)");
  require_positive(cfg, "trotter_eps", trotter_eps);
  require_positive(cfg, "flow_substep", popts.flow_substep);
  if (!(popts.safety >= 1.0)) throw bad(cfg, "safety", "must be >= 1");
  TruncatedJumpMeasure trunc = [&] {
    try {
      return truncate_nu(s.rho, trunc_eps);
    } catch (const std::runtime_error& e) {
      throw bad(cfg, "trunc_eps", e.what());
    }
  }();

  const ExitLawParams params = ExitLawParams::make(s.rho);
  std::vector<double> pu(s.replicas), pv(s.replicas), zeroed(s.replicas);
  std::vector<std::size_t> jumps(s.replicas), halvings(s.replicas), origins(s.replicas);
  std::vector<std::uint8_t> ok(s.replicas, 1);
  for_each_index(s.replicas, exec, [&](std::size_t i) {
    Rng rng = make_stream(seed, StreamTag::kPdmp, i);
    const auto run = pdmp_simulate(s.graph.graph, params, trunc, s.t, s.initial, rng, popts);
    pu[i] = run.trajectory.final_state[s.site].u();
    pv[i] = run.trajectory.final_state[s.site].v();
    ok[i] = field_on_e(run.trajectory.final_state) ? 1 : 0;
    jumps[i] = run.diagnostics.jumps;
    halvings[i] = run.diagnostics.halvings;
    origins[i] = run.diagnostics.origin_resolutions;
    zeroed[i] = run.diagnostics.zeroed_mass;
  });
  const SiteSamples tr = trotter_samples(s, trotter_eps, seed, 0, exec);
  const bool on_e = tr.on_e && std::all_of(ok.begin(), ok.end(), [](auto x) { return x == 1; });

  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = infinite_echo(s);
  rep.config["trunc_eps"] = trunc_eps;
  rep.config["trotter_eps"] = trotter_eps;
  rep.config["flow_substep"] = popts.flow_substep;
  rep.config["safety"] = popts.safety;
  const MeanSe mpu = mean_se(pu), mpv = mean_se(pv), mtu = mean_se(tr.u), mtv = mean_se(tr.v);
  const double su = std::hypot(mpu.se, mtu.se), sv = std::hypot(mpv.se, mtv.se);
  rep.check("sbm-infinite", "pdmp vs trotter mean U", mpu.mean, mtu.mean, s.sigmas * su,
            std::abs(mpu.mean - mtu.mean) < s.sigmas * su);
  rep.check("sbm-infinite", "pdmp vs trotter mean V", mpv.mean, mtv.mean, s.sigmas * sv,
            std::abs(mpv.mean - mtv.mean) < s.sigmas * sv);
  rep.check("sbm-infinite", "pdmp and trotter states on E", on_e ? 1.0 : 0.0, 1.0, 0.0, on_e);
  std::size_t total_jumps = 0, total_halvings = 0, total_origins = 0;
  double total_zeroed = 0.0;
  CsvTable table("pdmp-vs-trotter",
                 {"method", "replica", "u", "v", "jumps", "halvings", "zeroed_mass"});
  for (std::size_t i = 0; i < s.replicas; ++i) {
    table.add("pdmp", i, pu[i], pv[i], jumps[i], halvings[i], zeroed[i]);
    total_jumps += jumps[i];
    total_halvings += halvings[i];
    total_origins += origins[i];
    total_zeroed += zeroed[i];
  }
  for (std::size_t i = 0; i < s.replicas; ++i) {
    table.add("trotter", i, tr.u[i], tr.v[i], std::size_t{0}, std::size_t{0}, 0.0);
  }
  rep.results = {{"pdmp", {{"u", mean_json(mpu)}, {"v", mean_json(mpv)}}},
                 {"trotter", {{"u", mean_json(mtu)}, {"v", mean_json(mtv)}}},
                 {"truncation",
                  {{"eps_prime", trunc.eps_prime()},
                   {"u_mass", trunc.u_mass()},
                   {"v_mass", trunc.v_mass()},
                   {"drift_shift", trunc.drift_shift()},
                   {"v_first_moment", trunc.v_first_moment()}}},
                 {"diagnostics",
                  {{"jumps", total_jumps},
                   {"halvings", total_halvings},
                   {"origin_resolutions", total_origins},
                   {"zeroed_mass", total_zeroed}}}};
  res.tables.push_back(std::move(table));
  return res;
}

ExperimentResult martingale_check(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  InfiniteSetup s{read_graph_with_default(cfg, "torus", 1, 4), 0.3, 0.5};
  s.replicas = 10000;
  read_infinite_common(cfg, s);
  const std::size_t n = s.graph.graph.size();
  ScalarField dy1(n, 0.0), dy2(n, 0.0);
  dy1[0] = 0.5;
  if (n > 1) dy2[1] = 0.5;
  const PairField y{cfg.field("y1", n, 0.0), cfg.field("y2", n, 0.0)};
  const PairField test = cfg.has("y1") || cfg.has("y2") ? y : PairField{dy1, dy2};
  const double eps = cfg.number("eps", 0.01);
  cfg.finish();
  if (s.rho == -1.0) throw bad(cfg, "rho", "expected (-1, 1)");
  require_positive(cfg, "eps", eps);
  for (std::size_t k = 0; k < n; ++k) {
    if (test.u[k] * test.v[k] != 0.0 || test.u[k] < 0.0 || test.v[k] < 0.0) {
      throw bad(cfg, "y1", "test pair must take values in E");
    }
  }

  const ExitLawParams params = ExitLawParams::make(s.rho);
  const HeatKernel kernel(s.graph.graph, eps);
  std::vector<std::complex<double>> m(s.replicas);
  std::vector<std::uint8_t> ok(s.replicas, 1);
  for_each_index(s.replicas, exec, [&](std::size_t i) {
    Rng rng = make_stream(seed, StreamTag::kTrotter, i);
    TrotterOptions o;
    o.record_path = true;
    const auto tr = trotter_simulate(s.graph.graph, params, eps, s.t, s.initial, rng, o, &kernel);
    m[i] = martingale_functional(tr, s.graph.graph, s.rho, test);
    bool e = field_on_e(tr.final_state);
    for (const auto& p : tr.path) e = e && pair_on_e(p.right);
    ok[i] = e ? 1 : 0;
  });
  const ComplexMeanSe est = mean_se(std::span<const std::complex<double>>(m));
  const bool on_e = std::all_of(ok.begin(), ok.end(), [](auto x) { return x == 1; });

  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = infinite_echo(s);
  rep.config["y1"] = test.u;
  rep.config["y2"] = test.v;
  rep.config["eps"] = eps;
  rep.check("sbm-infinite", "martingale real part", est.mean.real(), 0.0,
            s.sigmas * est.se_real, std::abs(est.mean.real()) < s.sigmas * est.se_real);
  rep.check("sbm-infinite", "martingale imaginary part", est.mean.imag(), 0.0,
            s.sigmas * est.se_imag, std::abs(est.mean.imag()) < s.sigmas * est.se_imag);
  rep.check("sbm-infinite", "martingale path states on E", on_e ? 1.0 : 0.0, 1.0, 0.0, on_e);
  rep.results = {{"re", est.mean.real()},
                 {"im", est.mean.imag()},
                 {"se_re", est.se_real},
                 {"se_im", est.se_imag}};
  CsvTable table("martingale-functional", {"replica", "re", "im"});
  for (std::size_t i = 0; i < s.replicas; ++i) table.add(i, m[i].real(), m[i].imag());
  res.tables.push_back(std::move(table));
  return res;
}

// ---------------------------------------------------------------------------

ExperimentResult voter_limit(ConfigReader& cfg, std::uint64_t seed, Exec exec) {
  const GraphSpec gs = read_graph_with_default(cfg, "torus", 1, 8);
  const SiteGraph& g = gs.graph;
  const std::size_t n = g.size();
  OpinionField opinions(n, 0);
  for (std::size_t k = 0; k < n / 2; ++k) opinions[k] = 1;
  if (cfg.has("opinions")) {
    const auto raw = cfg.counts("opinions", {});
    if (raw.size() != n) throw bad(cfg, "opinions", "expected one entry per site");
    for (std::size_t k = 0; k < n; ++k) {
      if (raw[k] > 1) throw bad(cfg, "opinions", "opinions must be 0 or 1");
      opinions[k] = static_cast<std::uint8_t>(raw[k]);
    }
  }
  VoterCompareConfig vc;
  vc.t = cfg.number("t", 1.0);
  vc.replicas = cfg.count("replicas", 20000);
  vc.seed = seed;
  vc.trotter_eps = cfg.number("trotter_eps", 0.01);
  vc.flow_substep = cfg.number("flow_substep", 1e-2);
  std::vector<std::pair<double, double>> def = {{3, 4}, {0, 1}, {0, 4}, {1, 2}};
  for (auto [a, b] : cfg.number_pairs("pairs", def)) {
    if (a < 0 || b < 0 || a != std::floor(a) || b != std::floor(b) || a >= double(n) ||
        b >= double(n)) {
      throw bad(cfg, "pairs", "pairs must hold site indices");
    }
    vc.pairs.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  const double sigmas = cfg.number("sigmas", 3.0);
  cfg.finish();
  require_positive(cfg, "t", vc.t);
  require_count(cfg, "replicas", vc.replicas, 2);
  require_positive(cfg, "trotter_eps", vc.trotter_eps);
  require_positive(cfg, "flow_substep", vc.flow_substep);

  const VoterComparison cmp = voter_vs_sbminf(g, opinions, vc, exec);
  ExperimentResult res;
  SummaryReport& rep = res.report;
  rep.config = {{"graph", gs.echo},
                {"opinions", std::vector<int>(opinions.begin(), opinions.end())},
                {"t", vc.t},
                {"replicas", vc.replicas},
                {"trotter_eps", vc.trotter_eps},
                {"flow_substep", vc.flow_substep},
                {"pairs", vc.pairs},
                {"sigmas", sigmas}};
  CsvTable table("voter-limit",
                 {"site_a", "site_b", "voter", "voter_se", "trotter", "trotter_se", "pdmp",
                  "pdmp_se", "z_voter_trotter", "z_voter_pdmp", "z_trotter_pdmp"});
  json rows = json::array();
  for (const auto* group : {&cmp.one_point, &cmp.two_point}) {
    for (const auto& pc : *group) {
      table.add(pc.site_a, pc.site_b, pc.voter.mean, pc.voter.se, pc.trotter.mean, pc.trotter.se,
                pc.pdmp.mean, pc.pdmp.se, pc.z_voter_trotter, pc.z_voter_pdmp, pc.z_trotter_pdmp);
    }
  }
  for (const auto& pc : cmp.two_point) {
    const std::string where = fmt("(%zu,%zu)", pc.site_a, pc.site_b);
    rep.check("voter-identification", "voter vs trotter " + where, pc.z_voter_trotter, 0.0,
              sigmas, pc.z_voter_trotter < sigmas);
    rep.check("voter-identification", "voter vs pdmp " + where, pc.z_voter_pdmp, 0.0, sigmas,
              pc.z_voter_pdmp < sigmas);
    rep.check("voter-identification", "trotter vs pdmp " + where, pc.z_trotter_pdmp, 0.0, sigmas,
              pc.z_trotter_pdmp < sigmas);
    rows.push_back({{"pair", {pc.site_a, pc.site_b}},
                    {"voter", mean_json(pc.voter)},
                    {"trotter", mean_json(pc.trotter)},
                    {"pdmp", mean_json(pc.pdmp)}});
  }
  rep.check("voter-identification", "pdmp magnitudes exactly 1",
            cmp.pdmp_unit_magnitudes ? 1.0 : 0.0, 1.0, 0.0, cmp.pdmp_unit_magnitudes);
  rep.check("voter-identification", "pdmp rates equal flip rates",
            cmp.pdmp_rates_match ? 1.0 : 0.0, 1.0, 0.0,
            cmp.pdmp_rates_match && cmp.rate_checks > 0);
  rep.results = {{"two_point", rows},
                 {"rate_checks", cmp.rate_checks},
                 {"pdmp_jumps", cmp.pdmp_jumps},
                 {"trotter_magnitude_drift", cmp.trotter_magnitude_drift}};
  res.tables.push_back(std::move(table));
  return res;
}

using Runner = ExperimentResult (*)(ConfigReader&, std::uint64_t, Exec);

const std::vector<std::pair<std::string, Runner>>& registry() {
  static const std::vector<std::pair<std::string, Runner>> r = {
      {"exitlaw-validate", exitlaw_validate},
      {"moment-curve", moment_curve},
      {"mass-martingale", mass_martingale},
      {"bracket-ratio", bracket_ratio},
      {"duality-moment", duality_moment},
      {"duality-self", duality_self},
      {"gamma-limit", gamma_limit},
      {"trotter-refine", trotter_refine},
      {"pdmp-vs-trotter", pdmp_vs_trotter},
      {"voter-limit", voter_limit},
      {"martingale-functional", martingale_check},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

ExperimentResult run_experiment(const std::string& name, const json& config,
                                const ExperimentOptions& options) {
  const auto& reg = registry();
  const auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& e) { return e.first == name; });
  if (it == reg.end()) throw ConfigError("$.experiment", "unknown experiment '" + name + "'");
  ConfigReader reader(config);
  const std::string declared = reader.text("experiment", name);
  if (declared != name) {
    throw ConfigError("$.experiment", "config is for '" + declared + "', not '" + name + "'");
  }
  std::uint64_t seed = reader.seed("seed", 42);
  if (options.seed) seed = *options.seed;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res = it->second(reader, seed, options.exec);
  res.report.experiment = name;
  res.report.seed = seed;
  res.report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

SummaryReport run_experiment_to(const std::string& name, const json& config,
                                const ExperimentOptions& options,
                                const std::filesystem::path& out) {
  ExperimentResult res = run_experiment(name, config, options);
  CommandOutput o;
  o.stem = name;
  o.summary = res.report.to_json();
  o.tables = std::move(res.tables);
  write_output(o, out);
  return res.report;
}

}  // namespace symbranch
