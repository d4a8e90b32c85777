#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "symbranch/lattice.hpp"
#include "symbranch/parallel.hpp"
#include "symbranch/rng.hpp"

namespace symbranch {

/// Population masses of the two types, one pair per site.
struct PairField {
  ScalarField u;
  ScalarField v;

  static PairField constant(std::size_t sites, double u0, double v0);
  std::size_t size() const { return u.size(); }
  double total_u() const;
  double total_v() const;
  /// <u, v>.
  double overlap() const;
};

enum class Scheme { kEuler, kSplit };

struct SdeConfig {
  double gamma = 1.0;
  double rho = 0.0;
  double dt = 0.0;  // 0 selects 1e-3 * min(1, 1/gamma)
  double horizon = 1.0;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::kEuler;

  double step() const;
  std::size_t step_count() const;
  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
  /// True when dt exceeds 0.1 / gamma.
  bool coarse_step() const;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One Euler step with reusable buffers. With Scheme::kSplit the heat part is
/// applied exactly through a cached kernel before the noise.
class EulerStepper {
 public:
  EulerStepper(const SiteGraph& g, const SdeConfig& cfg);
  /// Shares an existing kernel of matching step (kSplit only).
  EulerStepper(const SiteGraph& g, const SdeConfig& cfg, const HeatKernel* kernel);

  /// Advances in place and returns the number of coordinates clamped to 0.
  std::size_t step(PairField& state, Rng& rng);
  double dt() const { return dt_; }

 private:
  const SiteGraph& g_;
  double gamma_;
  double rho_;
  double dt_;
  Scheme scheme_;
  std::optional<HeatKernel> own_kernel_;
  const HeatKernel* kernel_ = nullptr;
  ScalarField du_;
  ScalarField dv_;
};

/// Convenience wrapper around EulerStepper for a single step.
std::size_t step_euler(PairField& state, const SiteGraph& g, const SdeConfig& cfg, Rng& rng);

struct MassSample {
  double time = 0.0;
  double total_u = 0.0;
  double total_v = 0.0;
  double overlap = 0.0;
};

struct Brackets {
  double quad_u = 0.0;
  double quad_v = 0.0;
  double cross = 0.0;
  double clock = 0.0;  // predicted quad: gamma * int <u,v> ds
};

/// Realized brackets from a per-step mass series; the clock uses left points.
Brackets realized_brackets(std::span<const MassSample> series, double gamma);

struct MassObservables {
  double initial_u = 0.0;
  double initial_v = 0.0;
  double total_u = 0.0;
  double total_v = 0.0;
  Brackets brackets;
  std::size_t clamps = 0;
  /// Optional per-step series (see SimulateOptions::record_series).
  std::vector<MassSample> series;
  /// (clock level, total_u, total_v) at the first step the clock reaches
  /// each multiple of SimulateOptions::clock_spacing.
  std::vector<MassSample> clock_samples;
};

struct ProbeRecord {
  double time;
  std::size_t site;
  double u;
  double v;
};

struct SimulateOptions {
  std::vector<std::size_t> probes;
  std::vector<double> times;
  bool record_series = false;
  double clock_spacing = 0.0;
};

struct SbmRun {
  PairField final_state;
  std::vector<ProbeRecord> records;
  MassObservables observables;
};

/// Runs one replica to cfg.horizon.
SbmRun simulate(const SiteGraph& g, const SdeConfig& cfg, const PairField& initial,
                const SimulateOptions& options, Rng& rng, const HeatKernel* kernel = nullptr);

/// Replica i uses make_stream(cfg.seed, kSbmFinite, i); results come back in
/// replica order.
std::vector<SbmRun> simulate_ensemble(const SiteGraph& g, const SdeConfig& cfg,
                                      const PairField& initial, const SimulateOptions& options,
                                      Exec exec = Exec::kParallel);

struct NonspatialResult {
  double u = 0.0;
  double v = 0.0;
  double occupation = 0.0;  // gamma * int u v ds
  bool absorbed = false;
  std::size_t steps = 0;
};

/// Single-site system (A = 0) run until u*v = 0 or the horizon.
NonspatialResult nonspatial_simulate(const SdeConfig& cfg, double u0, double v0, Rng& rng);

}  // namespace symbranch
