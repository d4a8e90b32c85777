#include "symbranch/voter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace symbranch {

double flip_rate(std::span<const std::uint8_t> field, const SiteGraph& g, std::size_t k) {
  double rate = 0.0;
  for (const Neighbor& n : g.neighbors(k)) {
    if (field[n.site] != field[k]) rate += n.rate;
  }
  return rate;
}

VoterTrajectory gillespie_simulate(const SiteGraph& g, const OpinionField& initial,
                                   double horizon, Rng& rng, std::span<const double> times) {
  if (initial.size() != g.size()) throw std::invalid_argument("opinion field size mismatch");
  for (auto x : initial) {
    if (x > 1) throw std::invalid_argument("opinions must be 0 or 1");
  }
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  VoterTrajectory traj;
  traj.first_event = std::numeric_limits<double>::infinity();
  OpinionField state = initial;
  std::vector<double> rates(g.size());
  std::size_t next = 0;
  auto record_until = [&](double t) {
    while (next < sorted.size() && sorted[next] < t) {
      traj.times.push_back(sorted[next]);
      traj.states.push_back(state);
      ++next;
    }
  };
  double t = 0.0;
  while (true) {
    double total = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      rates[k] = flip_rate(state, g, k);
      total += rates[k];
    }
    if (!(total > 0.0)) break;
    t += exponential(rng, total);
    if (t > horizon) break;
    record_until(t);
    double pick = uniform_open(rng) * total;
    std::size_t k = 0;
    for (; k + 1 < g.size(); ++k) {
      pick -= rates[k];
      if (pick < 0.0) break;
    }
    while (rates[k] == 0.0) --k;  // round-off landed past the last active site
    state[k] = static_cast<std::uint8_t>(1 - state[k]);
    if (traj.flips == 0) traj.first_event = t;
    ++traj.flips;
  }
  record_until(std::numeric_limits<double>::infinity());
  traj.final_state = std::move(state);
  return traj;
}

BoundaryField embed_opinions(std::span<const std::uint8_t> field) {
  BoundaryField out(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    if (field[k] > 1) throw std::invalid_argument("opinions must be 0 or 1");
    out[k] = BoundaryPoint::make(field[k] == 1 ? Axis::kU : Axis::kV, 1.0);
  }
  return out;
}

bool is_consensus(std::span<const std::uint8_t> field) {
  return std::all_of(field.begin(), field.end(), [&](auto x) { return x == field.front(); });
}

std::vector<MeanSe> consensus_probability(const SiteGraph& g, const OpinionField& initial,
                                          std::span<const double> horizons,
                                          std::size_t replicas, std::uint64_t seed, Exec exec) {
  if (horizons.empty()) return {};
  const double last = *std::max_element(horizons.begin(), horizons.end());
  std::vector<std::vector<double>> hits(horizons.size(), std::vector<double>(replicas));
  for_each_index(replicas, exec, [&](std::size_t i) {
    Rng rng = make_stream(seed, StreamTag::kVoter, i, 1);
    const auto traj = gillespie_simulate(g, initial, last, rng, horizons);
    // States come back sorted by time; map them to the caller's order.
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const auto it = std::find(traj.times.begin(), traj.times.end(), horizons[h]);
      const auto idx = static_cast<std::size_t>(it - traj.times.begin());
      hits[h][i] = is_consensus(traj.states[idx]) ? 1.0 : 0.0;
    }
  });
  std::vector<MeanSe> out;
  for (const auto& h : hits) out.push_back(mean_se(h));
  return out;
}

VoterComparison voter_vs_sbminf(const SiteGraph& g, const OpinionField& initial,
                                const VoterCompareConfig& cfg, Exec exec) {
  if (initial.size() != g.size()) throw std::invalid_argument("opinion field size mismatch");
  const BoundaryField embedded = embed_opinions(initial);
  for (const auto& [a, b] : cfg.pairs) {
    if (a >= g.size() || b >= g.size()) throw std::invalid_argument("pair site out of range");
  }
  if (cfg.replicas == 0) throw std::invalid_argument("replicas must be >= 1");
  const std::size_t n = g.size();
  const std::size_t reps = cfg.replicas;
  const ExitLawParams params = ExitLawParams::make(-1.0);
  const TruncatedJumpMeasure atom = truncate_nu(-1.0, 0.1);
  const HeatKernel kernel(g, cfg.trotter_eps);
  const std::vector<double> at{cfg.t};

  // Final U-values per replica, row-major [replica][site].
  std::vector<double> voter(reps * n);
  std::vector<double> trotter(reps * n);
  std::vector<double> pdmp(reps * n);
  std::vector<std::uint8_t> unit(reps, 1);
  std::vector<std::uint8_t> rates_ok(reps, 1);
  std::vector<std::size_t> checks(reps, 0);
  std::vector<std::size_t> jumps(reps, 0);
  std::vector<double> drift(reps, 0.0);

  for_each_index(reps, exec, [&](std::size_t i) {
    Rng rv = make_stream(cfg.seed, StreamTag::kVoter, i);
    const auto vt = gillespie_simulate(g, initial, cfg.t, rv, at);
    Rng rt = make_stream(cfg.seed, StreamTag::kTrotter, i);
    const auto tt = trotter_simulate(g, params, cfg.trotter_eps, cfg.t, embedded, rt, {}, &kernel);
    Rng rp = make_stream(cfg.seed, StreamTag::kPdmp, i);
    PdmpOptions popts;
    popts.flow_substep = cfg.flow_substep;
    popts.record_path = true;
    popts.times = {0.0, 0.25 * cfg.t, 0.5 * cfg.t, 0.75 * cfg.t, cfg.t};
    popts.check_rates = true;
    const auto pr = pdmp_simulate(g, params, atom, cfg.t, embedded, rp, popts);
    for (std::size_t k = 0; k < n; ++k) {
      voter[i * n + k] = vt.states.front()[k];
      // Opinion read off the axis; the magnitude drift from rounding in the
      // heat kernel is reported separately.
      trotter[i * n + k] = tt.final_state[k].axis == Axis::kU ? 1.0 : 0.0;
      pdmp[i * n + k] = pr.trajectory.final_state[k].u();
      drift[i] = std::max(drift[i], std::abs(tt.final_state[k].magnitude - 1.0));
    }
    for (const PathPoint& p : pr.trajectory.path) {
      for (const PairField* f : {&p.left, &p.right}) {
        for (std::size_t k = 0; k < n; ++k) {
          if (f->u[k] * f->v[k] != 0.0 || f->u[k] + f->v[k] != 1.0) unit[i] = 0;
        }
      }
    }
    // The thinning rate is I(k) times the unit mass of the atom.
    for (const auto& [rates, state] : pr.diagnostics.rate_samples) {
      OpinionField op(n);
      for (std::size_t k = 0; k < n; ++k) op[k] = state[k].axis == Axis::kU ? 1 : 0;
      for (std::size_t k = 0; k < n; ++k) {
        ++checks[i];
        if (rates[k] != flip_rate(op, g, k)) rates_ok[i] = 0;
      }
    }
    jumps[i] = pr.diagnostics.jumps;
  });

  VoterComparison out;
  auto compare = [&](std::size_t a, std::size_t b) {
    PointComparison pc;
    pc.site_a = a;
    pc.site_b = b;
    std::vector<double> x(reps), y(reps), z(reps);
    for (std::size_t i = 0; i < reps; ++i) {
      x[i] = voter[i * n + a] * (a == b ? 1.0 : voter[i * n + b]);
      y[i] = trotter[i * n + a] * (a == b ? 1.0 : trotter[i * n + b]);
      z[i] = pdmp[i * n + a] * (a == b ? 1.0 : pdmp[i * n + b]);
    }
    pc.voter = mean_se(x);
    pc.trotter = mean_se(y);
    pc.pdmp = mean_se(z);
    pc.z_voter_trotter = z_gap(pc.voter, pc.trotter);
    pc.z_voter_pdmp = z_gap(pc.voter, pc.pdmp);
    pc.z_trotter_pdmp = z_gap(pc.trotter, pc.pdmp);
    return pc;
  };
  for (std::size_t k = 0; k < n; ++k) out.one_point.push_back(compare(k, k));
  for (const auto& [a, b] : cfg.pairs) out.two_point.push_back(compare(a, b));
  for (std::size_t i = 0; i < reps; ++i) {
    out.pdmp_unit_magnitudes = out.pdmp_unit_magnitudes && unit[i] == 1;
    out.pdmp_rates_match = out.pdmp_rates_match && rates_ok[i] == 1;
    out.rate_checks += checks[i];
    out.pdmp_jumps += jumps[i];
    out.trotter_magnitude_drift = std::max(out.trotter_magnitude_drift, drift[i]);
  }
  return out;
}

}  // namespace symbranch
