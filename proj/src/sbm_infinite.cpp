#include "symbranch/sbm_infinite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "symbranch/duals.hpp"

namespace symbranch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> step_indices(std::span<const double> times, double step,
                                      std::size_t last) {
  std::vector<std::size_t> out;
  for (double t : times) {
    if (!(t >= 0.0)) throw std::invalid_argument("probe times must be >= 0");
    out.push_back(std::min(static_cast<std::size_t>(std::llround(t / step)), last));
  }
  return out;
}

// Rate of the off-axis generator term over the site magnitude.
double pair_intensity(std::span<const double> u, std::span<const double> v,
                      const SiteGraph& g, std::size_t k) {
  double rate = 0.0;
  if (u[k] > 0.0) {
    double flux = 0.0;
    for (const Neighbor& n : g.neighbors(k)) flux += n.rate * v[n.site];
    rate = flux / u[k];
  } else if (v[k] > 0.0) {
    double flux = 0.0;
    for (const Neighbor& n : g.neighbors(k)) flux += n.rate * u[n.site];
    rate = flux / v[k];
  }
  if (rate < 0.0) throw std::logic_error("negative intensity: state is off E");
  return rate;
}

}  // namespace

PairField to_pair(const BoundaryField& field) {
  PairField out = PairField::constant(field.size(), 0.0, 0.0);
  for (std::size_t k = 0; k < field.size(); ++k) {
    out.u[k] = field[k].u();
    out.v[k] = field[k].v();
  }
  return out;
}

BoundaryField to_boundary(const PairField& field) {
  BoundaryField out(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    out[k] = BoundaryPoint::from_pair(field.u[k], field.v[k]);
  }
  return out;
}

PairField trotter_step(const PairField& state, const HeatKernel& kernel,
                       const ExitLawParams& params, Rng& rng) {
  PairField out{kernel.apply(state.u), kernel.apply(state.v)};
  for (std::size_t k = 0; k < out.size(); ++k) {
    const BoundaryPoint p = sample_exit(params, out.u[k], out.v[k], rng);
    out.u[k] = p.u();
    out.v[k] = p.v();
  }
  return out;
}

Trajectory trotter_simulate(const SiteGraph& g, const ExitLawParams& params, double eps,
                            double horizon, const BoundaryField& initial, Rng& rng,
                            const TrotterOptions& options, const HeatKernel* kernel) {
  if (!(eps > 0.0)) throw std::invalid_argument("Trotter step must be > 0");
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  if (initial.size() != g.size()) throw std::invalid_argument("initial field size mismatch");
  std::optional<HeatKernel> own;
  if (kernel == nullptr) {
    own.emplace(g, eps);
    kernel = &*own;
  } else if (kernel->step() != eps) {
    throw std::invalid_argument("heat kernel step differs from eps");
  }
  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / eps - 1e-9)));
  const auto at = step_indices(options.times, eps, steps);

  Trajectory traj;
  PairField state = to_pair(initial);
  auto record = [&](std::size_t index) {
    for (std::size_t j = 0; j < at.size(); ++j) {
      if (at[j] != index) continue;
      traj.times.push_back(options.times[j]);
      traj.states.push_back(to_boundary(state));
    }
  };
  if (options.record_path) traj.path.push_back({0.0, state, state});
  record(0);
  PairField heated = state;
  for (std::size_t n = 1; n <= steps; ++n) {
    kernel->apply(state.u, heated.u);
    kernel->apply(state.v, heated.v);
    for (std::size_t k = 0; k < state.size(); ++k) {
      const BoundaryPoint p = sample_exit(params, heated.u[k], heated.v[k], rng);
      state.u[k] = p.u();
      state.v[k] = p.v();
    }
    if (options.record_path) traj.path.push_back({static_cast<double>(n) * eps, heated, state});
    record(n);
  }
  traj.final_state = to_boundary(state);
  return traj;
}

double intensity(std::span<const BoundaryPoint> state, const SiteGraph& g, std::size_t k) {
  const BoundaryPoint here = state[k];
  if (here.magnitude == 0.0) return 0.0;
  double flux = 0.0;
  for (const Neighbor& n : g.neighbors(k)) {
    flux += n.rate * (here.axis == Axis::kU ? state[n.site].v() : state[n.site].u());
  }
  const double rate = flux / here.magnitude;
  if (rate < 0.0) throw std::logic_error("negative intensity: state is off E");
  return rate;
}

double intensity(const PairField& state, const SiteGraph& g, std::size_t k) {
  if (state.u[k] != 0.0 && state.v[k] != 0.0) {
    throw std::logic_error("intensity needs a state on E");
  }
  return pair_intensity(state.u, state.v, g, k);
}

BoundaryPoint apply_jump(BoundaryPoint site_state, BoundaryPoint mark) {
  if (!(mark.magnitude >= 0.0)) throw std::invalid_argument("jump mark must lie on E");
  const double magnitude = site_state.magnitude * mark.magnitude;
  if (mark.axis == Axis::kU) return BoundaryPoint::make(site_state.axis, magnitude);
  const Axis swapped = site_state.axis == Axis::kU ? Axis::kV : Axis::kU;
  return BoundaryPoint::make(swapped, magnitude);
}

void apply_jump(BoundaryField& state, std::size_t k, BoundaryPoint mark) {
  state.at(k) = apply_jump(state[k], mark);
}

namespace {

// Explicit-Euler flow of the compensated system, state held as a pair field.
class PdmpFlow {
 public:
  PdmpFlow(const SiteGraph& g, const TruncatedJumpMeasure& trunc)
      : g_(g),
        mass_(trunc.total_mass()),
        m2_(trunc.v_first_moment()),
        shift_(trunc.drift_shift()),
        fu_(g.size()),
        fv_(g.size()) {}

  double mass() const { return mass_; }

  void rates(const PairField& x, std::vector<double>& out) const {
    out.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = pair_intensity(x.u, x.v, g_, k) * mass_;
  }

  void derivative(const PairField& x) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double rate = pair_intensity(x.u, x.v, g_, k);
      fu_[k] = apply_generator_at(g_, x.u, k) - rate * (shift_ * x.u[k] + m2_ * x.v[k]);
      fv_[k] = apply_generator_at(g_, x.v, k) - rate * (shift_ * x.v[k] + m2_ * x.u[k]);
    }
  }

  void advance(const PairField& from, double h, PairField& to) const {
    to.u.resize(from.size());
    to.v.resize(from.size());
    for (std::size_t k = 0; k < from.size(); ++k) {
      to.u[k] = from.u[k] + h * fu_[k];
      to.v[k] = from.v[k] + h * fv_[k];
    }
  }

 private:
  const SiteGraph& g_;
  double mass_;
  double m2_;
  double shift_;
  ScalarField fu_;
  ScalarField fv_;
};

// Puts `x` back on E. `before` tells which axis each site was on. Without an
// engine, sites that left the origin in both types keep their larger part.
void project(PairField& x, const PairField& before, const ExitLawParams& params, Rng* rng,
             PdmpDiagnostics& diag) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    double& u = x.u[k];
    double& v = x.v[k];
    if (u < 0.0) {
      diag.zeroed_mass -= u;
      u = 0.0;
    }
    if (v < 0.0) {
      diag.zeroed_mass -= v;
      v = 0.0;
    }
    if (u == 0.0 || v == 0.0) continue;
    if (before.u[k] > 0.0) {
      diag.zeroed_mass += v;
      v = 0.0;
    } else if (before.v[k] > 0.0) {
      diag.zeroed_mass += u;
      u = 0.0;
    } else if (rng == nullptr) {
      (u < v ? u : v) = 0.0;
    } else {
      const BoundaryPoint p = sample_exit(params, u, v, *rng);
      u = p.u();
      v = p.v();
      ++diag.origin_resolutions;
    }
  }
}

}  // namespace

PdmpRun pdmp_simulate(const SiteGraph& g, const ExitLawParams& params,
                      const TruncatedJumpMeasure& trunc, double horizon,
                      const BoundaryField& initial, Rng& rng, const PdmpOptions& options) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  if (!(options.flow_substep > 0.0)) throw std::invalid_argument("flow_substep must be > 0");
  if (!(options.safety >= 1.0)) throw std::invalid_argument("thinning safety must be >= 1");
  if (initial.size() != g.size()) throw std::invalid_argument("initial field size mismatch");
  if (trunc.rho() != params.rho) throw std::invalid_argument("truncation built for another rho");
  std::vector<double> probe_times(options.times.begin(), options.times.end());
  std::sort(probe_times.begin(), probe_times.end());
  for (double t : probe_times) {
    if (!(t >= 0.0 && t <= horizon)) throw std::invalid_argument("probe time outside horizon");
  }

  PdmpRun run;
  Trajectory& traj = run.trajectory;
  PdmpDiagnostics& diag = run.diagnostics;
  PdmpFlow flow(g, trunc);
  PairField state = to_pair(initial);
  PairField end;
  PairField trial;
  std::vector<double> start_rates;
  std::vector<double> end_rates;
  std::vector<double> bounds(g.size());
  std::size_t next_probe = 0;

  auto record_probes = [&](double t) {
    while (next_probe < probe_times.size() && probe_times[next_probe] <= t) {
      traj.times.push_back(probe_times[next_probe]);
      traj.states.push_back(to_boundary(state));
      if (options.check_rates) {
        flow.rates(state, start_rates);
        diag.rate_samples.emplace_back(start_rates, traj.states.back());
      }
      ++next_probe;
    }
  };

  double t = 0.0;
  if (options.record_path) traj.path.push_back({0.0, state, state});
  record_probes(0.0);
  constexpr int kMaxHalvings = 30;
  while (t < horizon) {
    flow.rates(state, start_rates);
    const double max_rate = *std::max_element(start_rates.begin(), start_rates.end());
    double h = std::min(options.flow_substep, horizon - t);
    if (max_rate > 0.0) h = std::min(h, 0.1 / max_rate);
    if (next_probe < probe_times.size()) h = std::min(h, probe_times[next_probe] - t);
    flow.derivative(state);

    // The rate at each site along the linear flow is a ratio of affine
    // functions of time, so its maximum over the substep sits at an endpoint.
    int halvings = 0;
    while (true) {
      flow.advance(state, h, end);
      PdmpDiagnostics scratch;
      project(end, state, params, nullptr, scratch);
      flow.rates(end, end_rates);
      bool violated = false;
      for (std::size_t k = 0; k < g.size(); ++k) {
        // Halving cannot help a site whose rate starts at zero.
        bounds[k] = options.safety * (start_rates[k] > 0.0 ? start_rates[k] : end_rates[k]);
        if (end_rates[k] > bounds[k]) violated = true;
      }
      if (!violated) break;
      if (halvings == kMaxHalvings) {
        for (std::size_t k = 0; k < g.size(); ++k) {
          bounds[k] = options.safety * std::max(start_rates[k], end_rates[k]);
        }
        break;
      }
      h *= 0.5;
      ++halvings;
      ++diag.halvings;
    }
    double total_bound = 0.0;
    for (double b : bounds) total_bound += b;

    ++diag.substeps;
    double s = t;
    bool jumped = false;
    while (total_bound > 0.0) {
      s += exponential(rng, total_bound);
      if (s >= t + h) break;
      ++diag.proposals;
      double pick = uniform_open(rng) * total_bound;
      std::size_t k = 0;
      for (; k + 1 < bounds.size(); ++k) {
        pick -= bounds[k];
        if (pick < 0.0) break;
      }
      flow.advance(state, s - t, trial);
      project(trial, state, params, &rng, diag);
      const double rate = pair_intensity(trial.u, trial.v, g, k) * flow.mass();
      if (uniform_open(rng) * bounds[k] >= rate) continue;
      state = trial;
      t = s;
      const PairField left = state;
      BoundaryPoint here = BoundaryPoint::from_pair(state.u[k], state.v[k]);
      const BoundaryPoint mark = sample_nu_trunc(trunc, rng);
      here = apply_jump(here, mark);
      state.u[k] = here.u();
      state.v[k] = here.v();
      ++diag.jumps;
      if (options.record_jumps) diag.events.push_back({k, mark, t});
      if (options.record_path) traj.path.push_back({t, left, state});
      jumped = true;
      break;
    }
    if (jumped) continue;
    const PairField before = state;
    flow.advance(before, h, state);
    project(state, before, params, &rng, diag);
    t += h;
    if (horizon - t < 1e-12 * std::max(1.0, horizon)) t = horizon;
    if (options.record_path) traj.path.push_back({t, state, state});
    record_probes(t);
  }
  record_probes(kInf);
  traj.final_state = to_boundary(state);
  return run;
}

std::complex<double> martingale_functional(const Trajectory& trajectory, const SiteGraph& g,
                                           double rho, const PairField& y) {
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y.u[k] * y.v[k] != 0.0 || y.u[k] < 0.0 || y.v[k] < 0.0) {
      throw std::invalid_argument("test pair must take values in E");
    }
  }
  const auto& path = trajectory.path;
  if (path.empty()) throw std::invalid_argument("martingale functional needs a recorded path");
  auto integrand = [&](const PairField& x) {
    const ScalarField au = apply_generator(g, x.u);
    const ScalarField av = apply_generator(g, x.v);
    return selfdual_inner(au, av, y.u, y.v, rho) * selfdual_functional(x, y, rho);
  };
  std::complex<double> integral = 0.0;
  std::complex<double> prev = integrand(path.front().right);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double dt = path[i].time - path[i - 1].time;
    const std::complex<double> at_left = integrand(path[i].left);
    integral += 0.5 * dt * (prev + at_left);
    prev = integrand(path[i].right);
  }
  return selfdual_functional(path.back().right, y, rho) -
         selfdual_functional(path.front().right, y, rho) - integral;
}

}  // namespace symbranch
