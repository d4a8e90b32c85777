#include "symbranch/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>

#include "symbranch/config.hpp"
#include "symbranch/duals.hpp"
#include "symbranch/exitlaw.hpp"
#include "symbranch/sbm_finite.hpp"
#include "symbranch/sbm_infinite.hpp"
#include "symbranch/stats.hpp"
#include "symbranch/voter.hpp"

namespace symbranch {

using nlohmann::json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable::CsvTable(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void CsvTable::push(std::vector<std::string> row) {
  if (row.size() != columns_.size()) {
    throw std::logic_error("csv row width differs from header in " + name_);
  }
  rows_.push_back(std::move(row));
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
}

void write_output(const CommandOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / (out.stem + ".json"));
    if (!f) throw std::runtime_error("cannot write " + (dir / (out.stem + ".json")).string());
    f << out.summary.dump(2) << '\n';
  }
  for (const auto& t : out.tables) {
    std::ofstream f(dir / (t.name() + ".csv"));
    if (!f) throw std::runtime_error("cannot write " + (dir / (t.name() + ".csv")).string());
    t.write(f);
  }
}

namespace {

json mean_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}, {"count", m.count}}; }

const char* axis_name(Axis a) { return a == Axis::kU ? "U" : "V"; }

// Library argument checks become config errors at the document root.
template <class Fn>
auto as_config(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("$", e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError("$", e.what());
  }
}

std::vector<std::size_t> all_sites(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = k;
  return out;
}

void check_sites(const ConfigReader& r, const std::string& key,
                 const std::vector<std::size_t>& sites, std::size_t n) {
  for (std::size_t s : sites) {
    if (s >= n) throw ConfigError(r.path() + "." + key, "site " + std::to_string(s) + " out of range");
  }
}

std::vector<double> read_times(ConfigReader& r, double horizon) {
  auto times = r.numbers("times", {horizon});
  for (double t : times) {
    if (!(t >= 0.0 && t <= horizon)) throw ConfigError(r.path() + ".times", "time outside [0, horizon]");
  }
  return times;
}

OpinionField read_opinions(ConfigReader& r, std::size_t n) {
  OpinionField def(n, 0);
  for (std::size_t k = 0; k < n / 2; ++k) def[k] = 1;
  const bool given = r.has("opinions");
  const auto raw = r.counts("opinions", {});
  if (!given) return def;
  if (raw.size() != n) {
    throw ConfigError(r.path() + ".opinions", "expected " + std::to_string(n) + " entries");
  }
  OpinionField out(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (raw[k] > 1) throw ConfigError(r.path() + ".opinions", "opinions must be 0 or 1");
    out[k] = static_cast<std::uint8_t>(raw[k]);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> read_site_pairs(
    ConfigReader& r, const std::string& key, std::size_t n,
    std::vector<std::pair<std::size_t, std::size_t>> fallback) {
  std::vector<std::pair<double, double>> def;
  for (auto [a, b] : fallback) def.emplace_back(double(a), double(b));
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto [a, b] : r.number_pairs(key, def)) {
    if (a < 0 || b < 0 || a != std::floor(a) || b != std::floor(b) || a >= double(n) ||
        b >= double(n)) {
      throw ConfigError(r.path() + "." + key, "pairs must hold site indices below " +
                                                  std::to_string(n));
    }
    out.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  return out;
}

SdeConfig read_sde(ConfigReader& r) {
  SdeConfig c;
  c.gamma = r.number("gamma", 1.0);
  c.rho = r.number("rho", 0.0);
  c.dt = r.number("dt", 0.0);
  c.horizon = r.number("horizon", 1.0);
  c.replicas = r.count("replicas", 100);
  c.seed = r.seed("seed", 42);
  c.scheme = r.choice("scheme", "euler", {"euler", "split"}) == "split" ? Scheme::kSplit
                                                                          : Scheme::kEuler;
  as_config([&] {
    c.validate();
    return 0;
  });
  return c;
}

json sde_json(const SdeConfig& c) {
  return {{"gamma", c.gamma},     {"rho", c.rho},           {"dt", c.step()},
          {"horizon", c.horizon}, {"replicas", c.replicas}, {"seed", c.seed},
          {"scheme", c.scheme == Scheme::kSplit ? "split" : "euler"}};
}

}  // namespace

CommandOutput exitlaw_validate_command(double rho, double u, double v, std::size_t samples,
                                       std::uint64_t seed, Exec exec) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw ConfigError("$.rho", "expected rho in [-1, 1]");
  if (!(u >= 0.0 && v >= 0.0 && std::isfinite(u) && std::isfinite(v))) {
    throw ConfigError("$.start", "start must be two nonnegative numbers");
  }
  if (samples < 2) throw ConfigError("$.samples", "need at least two samples");
  const ExitLawParams params = ExitLawParams::make(rho);
  std::vector<BoundaryPoint> draws(samples);
  for_each_index(samples, exec, [&](std::size_t i) {
    Rng rng = make_stream(seed, StreamTag::kExitLaw, i);
    draws[i] = sample_exit(params, u, v, rng);
  });

  CommandOutput out;
  out.stem = "exitlaw_validate";
  CsvTable table("exitlaw_validate", {"axis", "magnitude"});
  for (const auto& d : draws) table.add(axis_name(d.axis), d.magnitude);
  out.tables.push_back(std::move(table));

  json& s = out.summary;
  s["config"] = {{"rho", rho}, {"start", {u, v}}, {"samples", samples}, {"seed", seed}};
  s["critical_exponent"] = params.p;
  const bool atomic = u == 0.0 || v == 0.0 || std::abs(rho) == 1.0;
  s["atomic"] = atomic;
  for (Axis axis : {Axis::kU, Axis::kV}) {
    std::vector<double> mags;
    for (const auto& d : draws) {
      if (d.axis == axis && d.magnitude > 0.0) mags.push_back(d.magnitude);
    }
    std::sort(mags.begin(), mags.end());
    json a;
    a["count"] = mags.size();
    a["fraction"] = double(mags.size()) / double(samples);
    if (!atomic) {
      const double mass = exit_axis_mass(params, u, v, axis);
      const auto cdf = exit_axis_cdf(params, u, v, axis, mags);
      const double ks = ks_statistic_partial(mags, samples, cdf, mass);
      const double p = ks_p_value(ks, double(samples));
      a["mass"] = mass;
      a["ks"] = ks;
      a["p_value"] = p;
      out.pass = out.pass && p > 1e-3;
    }
    s["axes"][axis_name(axis)] = a;
  }
  if (atomic) {
    // Check the atoms: the start itself on E, the two-atom law at rho = -1,
    // the origin at rho = 1.
    bool ok = true;
    for (const auto& d : draws) {
      if (u == 0.0 || v == 0.0) {
        ok = ok && d == BoundaryPoint::from_pair(u, v);
      } else if (rho == -1.0) {
        ok = ok && d.magnitude == u + v;
      } else {
        ok = ok && d.magnitude == 0.0;
      }
    }
    s["atoms_consistent"] = ok;
    out.pass = ok;
  } else if (samples > 1000) {
    std::vector<double> mags;
    for (const auto& d : draws) mags.push_back(d.magnitude);
    s["hill_exponent"] = hill_exponent(mags, default_hill_k(samples));
  }
  s["pass"] = out.pass;
  return out;
}

CommandOutput sbm_run_command(const json& config, Exec exec) {
  ConfigReader r(config);
  const SiteGraph g = as_config([&] { return read_graph(r.child("graph")); });
  const SdeConfig cfg = read_sde(r);
  const std::size_t n = g.size();
  PairField initial{r.field("u0", n, 1.0), r.field("v0", n, 1.0)};
  SimulateOptions opts;
  opts.probes = r.counts("probes", all_sites(n));
  check_sites(r, "probes", opts.probes, n);
  opts.times = read_times(r, cfg.horizon);
  r.finish();
  for (std::size_t k = 0; k < n; ++k) {
    if (!(initial.u[k] >= 0.0 && initial.v[k] >= 0.0)) {
      throw ConfigError("$.u0", "initial masses must be nonnegative");
    }
  }

  const auto runs = simulate_ensemble(g, cfg, initial, opts, exec);
  CommandOutput out;
  out.stem = "sbm_run";
  CsvTable table("sbm_run", {"replica", "time", "site", "u", "v"});
  std::vector<double> tu(runs.size()), tv(runs.size()), qu(runs.size()), qv(runs.size()),
      cr(runs.size()), cl(runs.size());
  std::size_t clamps = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& rec : runs[i].records) table.add(i, rec.time, rec.site, rec.u, rec.v);
    const auto& o = runs[i].observables;
    tu[i] = o.total_u;
    tv[i] = o.total_v;
    qu[i] = o.brackets.quad_u;
    qv[i] = o.brackets.quad_v;
    cr[i] = o.brackets.cross;
    cl[i] = o.brackets.clock;
    clamps += o.clamps;
  }
  out.tables.push_back(std::move(table));
  json& s = out.summary;
  s["config"] = sde_json(cfg);
  s["config"]["sites"] = n;
  s["initial"] = {{"total_u", initial.total_u()}, {"total_v", initial.total_v()}};
  s["final"] = {{"total_u", mean_json(mean_se(tu))}, {"total_v", mean_json(mean_se(tv))}};
  s["brackets"] = {{"quad_u", mean_json(mean_se(qu))},
                   {"quad_v", mean_json(mean_se(qv))},
                   {"cross", mean_json(mean_se(cr))},
                   {"clock", mean_json(mean_se(cl))}};
  s["clamps"] = clamps;
  s["coarse_step"] = cfg.coarse_step();
  return out;
}

CommandOutput sbminf_run_command(const json& config, Exec exec) {
  ConfigReader r(config);
  const SiteGraph g = as_config([&] { return read_graph(r.child("graph")); });
  const std::size_t n = g.size();
  const double rho = r.number("rho", 0.0);
  if (!(rho >= -1.0 && rho < 1.0)) throw ConfigError("$.rho", "expected rho in [-1, 1)");
  const std::string method = r.choice("method", "trotter", {"trotter", "pdmp"});
  const double eps = r.number("eps", 0.01);
  const double trunc_eps = r.number("trunc_eps", 0.1);
  PdmpOptions popts;
  popts.flow_substep = r.number("flow_substep", 1e-2);
  popts.safety = r.number("safety", 1.5);
  const double horizon = r.number("horizon", 1.0);
  const std::size_t replicas = r.count("replicas", 100);
  const std::uint64_t seed = r.seed("seed", 42);
  PairField initial{r.field("u0", n, 1.0), r.field("v0", n, 0.0)};
  const auto times = read_times(r, horizon);
  r.finish();
  if (!(eps > 0.0)) throw ConfigError("$.eps", "must be > 0");
  if (!(trunc_eps > 0.0 && trunc_eps < 0.5)) throw ConfigError("$.trunc_eps", "expected (0, 0.5)");
  if (!(popts.flow_substep > 0.0)) throw ConfigError("$.flow_substep", "must be > 0");
  if (!(popts.safety >= 1.0)) throw ConfigError("$.safety", "must be >= 1");
  if (!(horizon >= 0.0)) throw ConfigError("$.horizon", "must be >= 0");
  if (replicas == 0) throw ConfigError("$.replicas", "must be >= 1");
  BoundaryField start;
  try {
    for (std::size_t k = 0; k < n; ++k) {
      if (!(initial.u[k] >= 0.0 && initial.v[k] >= 0.0)) {
        throw std::invalid_argument("initial masses must be nonnegative");
      }
    }
    start = to_boundary(initial);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("$.u0", std::string(e.what()) + " (u0 * v0 must vanish at every site)");
  }

  const ExitLawParams params = ExitLawParams::make(rho);
  const bool pdmp = method == "pdmp";
  std::optional<TruncatedJumpMeasure> trunc;
  std::optional<HeatKernel> kernel;
  if (pdmp) {
    try {
      trunc.emplace(truncate_nu(rho, trunc_eps));
    } catch (const std::runtime_error& e) {
      throw ConfigError("$.trunc_eps", e.what());
    }
  } else {
    kernel.emplace(g, eps);
  }
  popts.times = times;

  std::vector<Trajectory> trajs(replicas);
  std::vector<PdmpDiagnostics> diags(pdmp ? replicas : 0);
  for_each_index(replicas, exec, [&](std::size_t i) {
    if (pdmp) {
      Rng rng = make_stream(seed, StreamTag::kPdmp, i);
      auto run = pdmp_simulate(g, params, *trunc, horizon, start, rng, popts);
      trajs[i] = std::move(run.trajectory);
      diags[i] = std::move(run.diagnostics);
    } else {
      Rng rng = make_stream(seed, StreamTag::kTrotter, i);
      TrotterOptions topts;
      topts.times = times;
      trajs[i] = trotter_simulate(g, params, eps, horizon, start, rng, topts, &*kernel);
    }
  });

  CommandOutput out;
  out.stem = "sbminf_run";
  CsvTable table("sbminf_run", {"replica", "time", "site", "u", "v"});
  std::vector<std::vector<double>> final_u(n, std::vector<double>(replicas));
  bool on_e = true;
  for (std::size_t i = 0; i < replicas; ++i) {
    const auto& tr = trajs[i];
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const BoundaryPoint& p = tr.states[j][k];
        on_e = on_e && p.u() * p.v() == 0.0;
        table.add(i, tr.times[j], k, p.u(), p.v());
      }
    }
    for (std::size_t k = 0; k < n; ++k) final_u[k][i] = tr.final_state[k].u();
  }
  out.tables.push_back(std::move(table));
  json& s = out.summary;
  s["config"] = {{"rho", rho},
                 {"method", method},
                 {"horizon", horizon},
                 {"replicas", replicas},
                 {"seed", seed},
                 {"sites", n}};
  if (pdmp) {
    s["config"]["trunc_eps"] = trunc_eps;
    s["config"]["flow_substep"] = popts.flow_substep;
    s["config"]["safety"] = popts.safety;
    s["truncation"] = {{"eps", trunc->eps()},
                       {"eps_prime", trunc->eps_prime()},
                       {"atom", trunc->is_atom()},
                       {"u_mass", trunc->u_mass()},
                       {"v_mass", trunc->v_mass()},
                       {"drift_shift", trunc->drift_shift()},
                       {"v_first_moment", trunc->v_first_moment()}};
    CsvTable diag("sbminf_run_replicas", {"replica", "jumps", "proposals", "halvings",
                                          "substeps", "zeroed_mass", "origin_resolutions"});
    std::size_t jumps = 0, halvings = 0, origins = 0;
    double zeroed = 0.0;
    for (std::size_t i = 0; i < replicas; ++i) {
      const auto& d = diags[i];
      diag.add(i, d.jumps, d.proposals, d.halvings, d.substeps, d.zeroed_mass,
               d.origin_resolutions);
      jumps += d.jumps;
      halvings += d.halvings;
      origins += d.origin_resolutions;
      zeroed += d.zeroed_mass;
    }
    out.tables.push_back(std::move(diag));
    s["diagnostics"] = {{"jumps", jumps},
                        {"halvings", halvings},
                        {"origin_resolutions", origins},
                        {"zeroed_mass", zeroed}};
  } else {
    s["config"]["eps"] = eps;
  }
  json means = json::array();
  for (std::size_t k = 0; k < n; ++k) means.push_back(mean_json(mean_se(final_u[k])));
  s["final_u"] = means;
  s["on_boundary"] = on_e;
  out.pass = on_e;
  return out;
}

CommandOutput dual_command(const std::string& kind, const json& config, Exec exec) {
  ConfigReader r(config);
  const SiteGraph g = as_config([&] { return read_graph(r.child("graph")); });
  const std::size_t n = g.size();
  CommandOutput out;
  out.stem = "dual_" + kind;
  json& s = out.summary;

  if (kind == "moment") {
    MomentDualConfig cfg;
    cfg.gamma = r.number("gamma", 1.0);
    cfg.rho = r.number("rho", 0.0);
    cfg.t = r.number("t", 0.5);
    cfg.replicas = r.count("replicas", 10000);
    cfg.seed = r.seed("seed", 42);
    cfg.force = r.flag("force", false);
    cfg.colors = r.flag("colors", true);
    const PairField initial{r.field("u0", n, 1.0), r.field("v0", n, 1.0)};
    const auto u_sites = r.counts("u_sites", {0});
    const auto v_sites = r.counts("v_sites", {n > 1 ? std::size_t{1} : std::size_t{0}});
    check_sites(r, "u_sites", u_sites, n);
    check_sites(r, "v_sites", v_sites, n);
    r.finish();
    if (!(cfg.rho >= -1.0 && cfg.rho <= 1.0)) throw ConfigError("$.rho", "expected [-1, 1]");
    if (!(cfg.gamma >= 0.0)) throw ConfigError("$.gamma", "must be >= 0");
    MomentDualResult res;
    try {
      res = as_config([&] { return moment_dual_estimate(g, cfg, initial, u_sites, v_sites, exec); });
    } catch (const HeavyWeightError& e) {
      throw ConfigError("$.force", e.what());
    }
    CsvTable table("dual_moment", {"replica", "weight", "same_time", "diff_time", "flips"});
    for (std::size_t i = 0; i < cfg.replicas; ++i) {
      Rng rng = make_stream(cfg.seed, StreamTag::kMomentDual, i);
      const auto path = run_colored_particles(g, cfg, u_sites, v_sites, rng);
      table.add(i, moment_dual_weight(path, initial, cfg.gamma, cfg.rho), path.same_time,
                path.diff_time, path.flips);
    }
    out.tables.push_back(std::move(table));
    s["config"] = {{"gamma", cfg.gamma}, {"rho", cfg.rho},         {"t", cfg.t},
                   {"replicas", cfg.replicas}, {"seed", cfg.seed}, {"u_sites", u_sites},
                   {"v_sites", v_sites},       {"colors", cfg.colors}};
    s["estimate"] = mean_json(res.estimate);
    s["unstable"] = res.unstable;
    out.pass = !res.unstable;
  } else if (kind == "coalesce") {
    const OpinionField opinions = read_opinions(r, n);
    const auto sites = r.counts("sites", {0});
    check_sites(r, "sites", sites, n);
    const double t = r.number("t", 1.0);
    const std::size_t replicas = r.count("replicas", 10000);
    const std::uint64_t seed = r.seed("seed", 42);
    r.finish();
    if (!(t >= 0.0)) throw ConfigError("$.t", "must be >= 0");
    const MeanSe est =
        as_config([&] { return coalescing_dual_estimate(g, opinions, sites, t, replicas, seed, exec); });
    CsvTable table("dual_coalesce", {"t", "mean", "se"});
    table.add(t, est.mean, est.se);
    out.tables.push_back(std::move(table));
    s["config"] = {{"t", t}, {"replicas", replicas}, {"seed", seed}, {"sites", sites},
                   {"opinions", std::vector<int>(opinions.begin(), opinions.end())}};
    s["estimate"] = mean_json(est);
  } else if (kind == "selfdual") {
    SdeConfig cfg;
    cfg.gamma = r.number("gamma", 1.0);
    cfg.rho = r.number("rho", 0.0);
    cfg.dt = r.number("dt", 0.0);
    cfg.horizon = r.number("t", 0.5);
    cfg.replicas = r.count("replicas", 10000);
    cfg.seed = r.seed("seed", 42);
    const PairField x0{r.field("u0", n, 0.5), r.field("v0", n, 0.3)};
    const PairField y0{r.field("y1", n, 0.4), r.field("y2", n, 0.2)};
    r.finish();
    as_config([&] {
      cfg.validate();
      return 0;
    });
    if (std::abs(cfg.rho) == 1.0) throw ConfigError("$.rho", "expected |rho| < 1");
    std::vector<PairField> fwd(cfg.replicas), bwd(cfg.replicas);
    for_each_index(cfg.replicas, exec, [&](std::size_t i) {
      Rng a = make_stream(cfg.seed, StreamTag::kSbmFinite, i, 0);
      fwd[i] = simulate(g, cfg, x0, {}, a).final_state;
      Rng b = make_stream(cfg.seed, StreamTag::kSbmFinite, i, 1);
      bwd[i] = simulate(g, cfg, y0, {}, b).final_state;
    });
    const SelfDualGap gap = selfdual_check(fwd, y0, bwd, x0, cfg.rho);
    CsvTable table("dual_selfdual", {"side", "replica", "re", "im"});
    for (std::size_t i = 0; i < cfg.replicas; ++i) {
      const auto f = selfdual_functional(fwd[i], y0, cfg.rho);
      table.add("forward", i, f.real(), f.imag());
    }
    for (std::size_t i = 0; i < cfg.replicas; ++i) {
      const auto b = selfdual_functional(x0, bwd[i], cfg.rho);
      table.add("backward", i, b.real(), b.imag());
    }
    out.tables.push_back(std::move(table));
    s["config"] = sde_json(cfg);
    s["forward"] = {{"re", gap.forward.mean.real()}, {"im", gap.forward.mean.imag()}};
    s["backward"] = {{"re", gap.backward.mean.real()}, {"im", gap.backward.mean.imag()}};
    s["gap"] = {{"re", gap.gap.real()},
                {"im", gap.gap.imag()},
                {"se_re", gap.se_real},
                {"se_im", gap.se_imag}};
    out.pass = std::abs(gap.gap.real()) < 3.0 * gap.se_real &&
               std::abs(gap.gap.imag()) < 3.0 * gap.se_imag;
  } else {
    throw ConfigError("$", "unknown dual kind '" + kind + "'");
  }
  s["pass"] = out.pass;
  return out;
}

CommandOutput voter_command(const std::string& kind, const json& config, Exec exec) {
  ConfigReader r(config);
  const SiteGraph g = as_config([&] { return read_graph(r.child("graph")); });
  const std::size_t n = g.size();
  const OpinionField opinions = read_opinions(r, n);
  CommandOutput out;
  out.stem = "voter_" + kind;
  json& s = out.summary;

  if (kind == "run") {
    const double horizon = r.number("horizon", 1.0);
    const auto times = read_times(r, horizon);
    const std::size_t replicas = r.count("replicas", 100);
    const std::uint64_t seed = r.seed("seed", 42);
    r.finish();
    if (replicas == 0) throw ConfigError("$.replicas", "must be >= 1");
    std::vector<VoterTrajectory> trajs(replicas);
    for_each_index(replicas, exec, [&](std::size_t i) {
      Rng rng = make_stream(seed, StreamTag::kVoter, i);
      trajs[i] = gillespie_simulate(g, opinions, horizon, rng, times);
    });
    CsvTable table("voter_run", {"replica", "time", "site", "opinion"});
    std::vector<std::vector<double>> density(times.size(), std::vector<double>(replicas));
    std::vector<std::vector<double>> consensus(times.size(), std::vector<double>(replicas));
    for (std::size_t i = 0; i < replicas; ++i) {
      for (std::size_t j = 0; j < trajs[i].times.size(); ++j) {
        const auto& st = trajs[i].states[j];
        double ones = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          table.add(i, trajs[i].times[j], k, static_cast<int>(st[k]));
          ones += st[k];
        }
        density[j][i] = ones / double(n);
        consensus[j][i] = is_consensus(st) ? 1.0 : 0.0;
      }
    }
    out.tables.push_back(std::move(table));
    // Trajectories report their sample times in ascending order.
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    json rows = json::array();
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      rows.push_back({{"time", sorted[j]},
                      {"density", mean_json(mean_se(density[j]))},
                      {"consensus", mean_json(mean_se(consensus[j]))}});
    }
    s["config"] = {{"horizon", horizon}, {"replicas", replicas}, {"seed", seed}, {"sites", n}};
    s["samples"] = rows;
  } else if (kind == "compare") {
    VoterCompareConfig cfg;
    cfg.t = r.number("t", 1.0);
    std::vector<std::pair<std::size_t, std::size_t>> adjacent;
    for (std::size_t k = 0; k + 1 < n; ++k) adjacent.emplace_back(k, k + 1);
    cfg.pairs = read_site_pairs(r, "pairs", n, adjacent);
    cfg.replicas = r.count("replicas", 10000);
    cfg.seed = r.seed("seed", 42);
    cfg.trotter_eps = r.number("trotter_eps", 0.01);
    cfg.flow_substep = r.number("flow_substep", 1e-2);
    const double sigmas = r.number("sigmas", 3.0);
    r.finish();
    if (!(cfg.t > 0.0)) throw ConfigError("$.t", "must be > 0");
    if (!(cfg.trotter_eps > 0.0)) throw ConfigError("$.trotter_eps", "must be > 0");
    if (!(cfg.flow_substep > 0.0)) throw ConfigError("$.flow_substep", "must be > 0");
    const VoterComparison cmp = as_config([&] { return voter_vs_sbminf(g, opinions, cfg, exec); });
    CsvTable table("voter_compare",
                   {"site_a", "site_b", "voter", "voter_se", "trotter", "trotter_se", "pdmp",
                    "pdmp_se", "z_voter_trotter", "z_voter_pdmp", "z_trotter_pdmp"});
    bool within = true;
    for (const auto* group : {&cmp.one_point, &cmp.two_point}) {
      for (const auto& pc : *group) {
        table.add(pc.site_a, pc.site_b, pc.voter.mean, pc.voter.se, pc.trotter.mean,
                  pc.trotter.se, pc.pdmp.mean, pc.pdmp.se, pc.z_voter_trotter, pc.z_voter_pdmp,
                  pc.z_trotter_pdmp);
        if (group == &cmp.two_point) {
          within = within && std::max({pc.z_voter_trotter, pc.z_voter_pdmp, pc.z_trotter_pdmp}) < sigmas;
        }
      }
    }
    out.tables.push_back(std::move(table));
    s["config"] = {{"t", cfg.t},
                   {"replicas", cfg.replicas},
                   {"seed", cfg.seed},
                   {"trotter_eps", cfg.trotter_eps},
                   {"flow_substep", cfg.flow_substep},
                   {"pairs", cfg.pairs}};
    s["two_point_within"] = within;
    s["pdmp_unit_magnitudes"] = cmp.pdmp_unit_magnitudes;
    s["pdmp_rates_match"] = cmp.pdmp_rates_match;
    s["rate_checks"] = cmp.rate_checks;
    s["pdmp_jumps"] = cmp.pdmp_jumps;
    s["trotter_magnitude_drift"] = cmp.trotter_magnitude_drift;
    out.pass = within && cmp.pdmp_unit_magnitudes && cmp.pdmp_rates_match;
  } else {
    throw ConfigError("$", "unknown voter kind '" + kind + "'");
  }
  s["pass"] = out.pass;
  return out;
}

}  // namespace symbranch
