#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "symbranch/exitlaw.hpp"
#include "symbranch/lattice.hpp"
#include "symbranch/rng.hpp"
#include "symbranch/sbm_finite.hpp"

namespace symbranch {

/// E-valued field: at most one type present per site.
using BoundaryField = std::vector<BoundaryPoint>;

PairField to_pair(const BoundaryField& field);
/// Throws std::invalid_argument if some site has both coordinates nonzero.
BoundaryField to_boundary(const PairField& field);

struct JumpEvent {
  std::size_t site;
  BoundaryPoint mark;
  double time;
};

/// A recorded instant of a trajectory: the left limit and the value after any
/// jump or resampling at that time.
struct PathPoint {
  double time;
  PairField left;
  PairField right;
};

struct Trajectory {
  /// Fixed-time samples at the requested probe times.
  std::vector<double> times;
  std::vector<BoundaryField> states;
  /// Full path at every step or jump, filled only on request.
  std::vector<PathPoint> path;
  BoundaryField final_state;
};

/// Heat flow over the kernel step, then independent exit-law resampling per site.
PairField trotter_step(const PairField& state, const HeatKernel& kernel,
                       const ExitLawParams& params, Rng& rng);

struct TrotterOptions {
  std::vector<double> times;
  bool record_path = false;
};

/// ceil(horizon / eps) Trotter steps (at least one).
Trajectory trotter_simulate(const SiteGraph& g, const ExitLawParams& params, double eps,
                            double horizon, const BoundaryField& initial, Rng& rng,
                            const TrotterOptions& options = {},
                            const HeatKernel* kernel = nullptr);

/// A V(k)/U(k) on the U-axis, A U(k)/V(k) on the V-axis, 0 at the origin.
double intensity(std::span<const BoundaryPoint> state, const SiteGraph& g, std::size_t k);

/// Same rate for a pair field already on E.
double intensity(const PairField& state, const SiteGraph& g, std::size_t k);

/// Mark (y,0) rescales the magnitude by y; mark (0,y) rescales and swaps axes.
BoundaryPoint apply_jump(BoundaryPoint site_state, BoundaryPoint mark);
void apply_jump(BoundaryField& state, std::size_t k, BoundaryPoint mark);

struct PdmpOptions {
  double flow_substep = 1e-2;
  double safety = 1.5;
  std::vector<double> times;
  bool record_path = false;
  bool record_jumps = false;
  /// Keep the per-site jump rates used by the thinning at each probe time.
  bool check_rates = false;
};

struct PdmpDiagnostics {
  std::size_t jumps = 0;
  std::size_t proposals = 0;
  std::size_t halvings = 0;
  std::size_t substeps = 0;
  /// Total magnitude removed when re-projecting onto E.
  double zeroed_mass = 0.0;
  /// Empty sites that gained both types in one substep and were resolved by
  /// an exit-law draw.
  std::size_t origin_resolutions = 0;
  std::vector<JumpEvent> events;
  /// Sampled (rate, state) pairs when PdmpOptions::check_rates is set.
  std::vector<std::pair<std::vector<double>, BoundaryField>> rate_samples;
};

struct PdmpRun {
  Trajectory trajectory;
  PdmpDiagnostics diagnostics;
};

/// Piecewise-deterministic simulation driven by the truncated jump measure.
PdmpRun pdmp_simulate(const SiteGraph& g, const ExitLawParams& params,
                      const TruncatedJumpMeasure& trunc, double horizon,
                      const BoundaryField& initial, Rng& rng, const PdmpOptions& options = {});

/// M_t = F(X_t, y) - F(X_0, y) - int <<A U, A V, y>> F(X_s, y) ds along a
/// recorded path, the integral by the trapezoid rule between recorded points.
/// y must satisfy y1(k) y2(k) = 0.
std::complex<double> martingale_functional(const Trajectory& trajectory, const SiteGraph& g,
                                           double rho, const PairField& y);

}  // namespace symbranch
