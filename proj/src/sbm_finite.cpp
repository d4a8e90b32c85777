#include "symbranch/sbm_finite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace symbranch {

PairField PairField::constant(std::size_t sites, double u0, double v0) {
  return {ScalarField(sites, u0), ScalarField(sites, v0)};
}

double PairField::total_u() const { return std::accumulate(u.begin(), u.end(), 0.0); }
double PairField::total_v() const { return std::accumulate(v.begin(), v.end(), 0.0); }

double PairField::overlap() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) sum += u[k] * v[k];
  return sum;
}

double SdeConfig::step() const {
  if (dt > 0.0) return dt;
  return 1e-3 * std::min(1.0, gamma > 0.0 ? 1.0 / gamma : 1.0);
}

std::size_t SdeConfig::step_count() const {
  if (!(horizon > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(horizon / step() - 1e-9));
}

void SdeConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be >= 0");
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [-1, 1]");
  if (dt < 0.0 || !std::isfinite(dt)) throw std::invalid_argument("dt must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must be >= 0");
  }
  if (replicas == 0) throw std::invalid_argument("replicas must be >= 1");
}

bool SdeConfig::coarse_step() const { return gamma > 0.0 && step() > 0.1 / gamma; }

EulerStepper::EulerStepper(const SiteGraph& g, const SdeConfig& cfg)
    : EulerStepper(g, cfg, nullptr) {}

EulerStepper::EulerStepper(const SiteGraph& g, const SdeConfig& cfg, const HeatKernel* kernel)
    : g_(g),
      gamma_(cfg.gamma),
      rho_(cfg.rho),
      dt_(cfg.step()),
      scheme_(cfg.scheme),
      du_(g.size()),
      dv_(g.size()) {
  cfg.validate();
  if (scheme_ == Scheme::kSplit) {
    if (kernel != nullptr) {
      if (kernel->step() != dt_ || kernel->matrix().rows() != static_cast<Eigen::Index>(g.size())) {
        throw std::invalid_argument("heat kernel does not match graph and step");
      }
      kernel_ = kernel;
    } else {
      own_kernel_.emplace(g, dt_);
      kernel_ = &*own_kernel_;
    }
  }
}

std::size_t EulerStepper::step(PairField& state, Rng& rng) {
  const std::size_t n = g_.size();
  if (state.u.size() != n || state.v.size() != n) {
    throw std::invalid_argument("state size does not match graph");
  }
  if (scheme_ == Scheme::kSplit) {
    kernel_->apply(state.u, du_);
    kernel_->apply(state.v, dv_);
    state.u.swap(du_);
    state.v.swap(dv_);
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      du_[k] = apply_generator_at(g_, state.u, k) * dt_;
      dv_[k] = apply_generator_at(g_, state.v, k) * dt_;
    }
  }
  const double orth = std::sqrt(std::max(0.0, 1.0 - rho_ * rho_));
  std::size_t clamps = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = std::max(state.u[k], 0.0);
    const double b = std::max(state.v[k], 0.0);
    double u = state.u[k];
    double v = state.v[k];
    if (scheme_ == Scheme::kEuler) {
      u += du_[k];
      v += dv_[k];
    }
    const double sigma = std::sqrt(gamma_ * a * b * dt_);
    if (sigma > 0.0) {
      const double z1 = standard_normal(rng);
      const double zp = standard_normal(rng);
      u += sigma * z1;
      v += sigma * (rho_ * z1 + orth * zp);
    }
    if (!std::isfinite(u) || !std::isfinite(v)) {
      throw NonFiniteError("non-finite state at site " + std::to_string(k));
    }
    if (u < 0.0) {
      u = 0.0;
      ++clamps;
    }
    if (v < 0.0) {
      v = 0.0;
      ++clamps;
    }
    state.u[k] = u;
    state.v[k] = v;
  }
  return clamps;
}

std::size_t step_euler(PairField& state, const SiteGraph& g, const SdeConfig& cfg, Rng& rng) {
  EulerStepper stepper(g, cfg);
  return stepper.step(state, rng);
}

Brackets realized_brackets(std::span<const MassSample> series, double gamma) {
  Brackets out;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double du = series[i].total_u - series[i - 1].total_u;
    const double dv = series[i].total_v - series[i - 1].total_v;
    out.quad_u += du * du;
    out.quad_v += dv * dv;
    out.cross += du * dv;
    out.clock += gamma * (series[i].time - series[i - 1].time) * series[i - 1].overlap;
  }
  return out;
}

namespace {

std::vector<std::size_t> record_steps(const SdeConfig& cfg, std::span<const double> times) {
  const std::size_t last = cfg.step_count();
  std::vector<std::size_t> out;
  out.reserve(times.size());
  for (double t : times) {
    if (!(t >= 0.0) || t > cfg.horizon * (1.0 + 1e-12)) {
      throw std::invalid_argument("probe time outside [0, horizon]");
    }
    const auto idx = static_cast<std::size_t>(std::llround(t / cfg.step()));
    out.push_back(std::min(idx, last));
  }
  return out;
}

}  // namespace

SbmRun simulate(const SiteGraph& g, const SdeConfig& cfg, const PairField& initial,
                const SimulateOptions& options, Rng& rng, const HeatKernel* kernel) {
  cfg.validate();
  for (std::size_t k = 0; k < initial.size(); ++k) {
    if (!(initial.u[k] >= 0.0 && initial.v[k] >= 0.0)) {
      throw std::invalid_argument("initial state must be nonnegative");
    }
  }
  for (std::size_t site : options.probes) {
    if (site >= g.size()) throw std::invalid_argument("probe site out of range");
  }
  EulerStepper stepper(g, cfg, kernel);
  const std::vector<std::size_t> at = record_steps(cfg, options.times);
  const std::size_t steps = cfg.step_count();
  const double dt = stepper.dt();

  SbmRun run;
  run.final_state = initial;
  PairField& state = run.final_state;
  MassObservables& obs = run.observables;
  obs.initial_u = obs.total_u = state.total_u();
  obs.initial_v = obs.total_v = state.total_v();

  auto record = [&](std::size_t index) {
    for (std::size_t j = 0; j < at.size(); ++j) {
      if (at[j] != index) continue;
      for (std::size_t site : options.probes) {
        run.records.push_back({options.times[j], site, state.u[site], state.v[site]});
      }
    }
  };
  double next_level = 0.0;
  auto sample_clock = [&]() {
    if (!(options.clock_spacing > 0.0) || obs.brackets.clock < next_level) return;
    obs.clock_samples.push_back({obs.brackets.clock, obs.total_u, obs.total_v, 0.0});
    next_level = (std::floor(obs.brackets.clock / options.clock_spacing) + 1.0) *
                 options.clock_spacing;
  };

  double overlap = state.overlap();
  if (options.record_series) {
    obs.series.reserve(steps + 1);
    obs.series.push_back({0.0, obs.total_u, obs.total_v, overlap});
  }
  record(0);
  sample_clock();
  for (std::size_t i = 1; i <= steps; ++i) {
    obs.clamps += stepper.step(state, rng);
    const double total_u = state.total_u();
    const double total_v = state.total_v();
    const double du = total_u - obs.total_u;
    const double dv = total_v - obs.total_v;
    obs.brackets.quad_u += du * du;
    obs.brackets.quad_v += dv * dv;
    obs.brackets.cross += du * dv;
    obs.brackets.clock += cfg.gamma * dt * overlap;
    obs.total_u = total_u;
    obs.total_v = total_v;
    overlap = state.overlap();
    if (options.record_series) {
      obs.series.push_back({static_cast<double>(i) * dt, total_u, total_v, overlap});
    }
    record(i);
    sample_clock();
  }
  return run;
}

std::vector<SbmRun> simulate_ensemble(const SiteGraph& g, const SdeConfig& cfg,
                                      const PairField& initial, const SimulateOptions& options,
                                      Exec exec) {
  cfg.validate();
  std::optional<HeatKernel> kernel;
  if (cfg.scheme == Scheme::kSplit) kernel.emplace(g, cfg.step());
  std::vector<SbmRun> runs(cfg.replicas);
  for_each_index(cfg.replicas, exec, [&](std::size_t i) {
    Rng rng = make_stream(cfg.seed, StreamTag::kSbmFinite, i);
    runs[i] = simulate(g, cfg, initial, options, rng, kernel ? &*kernel : nullptr);
  });
  return runs;
}

NonspatialResult nonspatial_simulate(const SdeConfig& cfg, double u0, double v0, Rng& rng) {
  cfg.validate();
  if (!(u0 >= 0.0 && v0 >= 0.0)) throw std::invalid_argument("start must be nonnegative");
  const double dt = cfg.step();
  const std::size_t steps = cfg.step_count();
  const double orth = std::sqrt(std::max(0.0, 1.0 - cfg.rho * cfg.rho));
  NonspatialResult out{u0, v0, 0.0, false, 0};
  while (out.steps < steps && out.u * out.v > 0.0) {
    const double rate = cfg.gamma * out.u * out.v;
    out.occupation += rate * dt;
    const double sigma = std::sqrt(rate * dt);
    const double z1 = standard_normal(rng);
    const double zp = standard_normal(rng);
    out.u = std::max(0.0, out.u + sigma * z1);
    out.v = std::max(0.0, out.v + sigma * (cfg.rho * z1 + orth * zp));
    ++out.steps;
  }
  out.absorbed = out.u * out.v == 0.0;
  return out;
}

}  // namespace symbranch
