#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "symbranch/lattice.hpp"
#include "symbranch/parallel.hpp"
#include "symbranch/sbm_finite.hpp"
#include "symbranch/stats.hpp"

namespace symbranch {

// ---------------------------------------------------------------------------
// Colored-particle moment dual.

/// Raised when the exponential weights make the estimator unreliable.
class HeavyWeightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MomentDualConfig {
  double gamma = 1.0;
  double rho = 0.0;
  double t = 1.0;
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  /// Skip the gamma * t * pairs <= 10 guard.
  bool force = false;
  /// With false, particles never change color (valid for rho = 1, u0 = v0).
  bool colors = true;
};

struct ColoredParticleSystem {
  std::vector<std::size_t> positions;
  std::vector<std::uint8_t> colors;  // 1 or 2
  /// Co-location time accumulated by each unordered pair since its last
  /// threshold draw, and the Exp(gamma) threshold; indexed by pair_index().
  std::vector<double> accumulators;
  std::vector<double> thresholds;
  double same_time = 0.0;  // L=
  double diff_time = 0.0;  // L!=
  std::size_t flips = 0;

  std::size_t pair_index(std::size_t i, std::size_t j) const;
};

/// Runs one dual path to time t. Particles start at u_sites (color 1) and
/// v_sites (color 2).
ColoredParticleSystem run_colored_particles(const SiteGraph& g, const MomentDualConfig& cfg,
                                            std::span<const std::size_t> u_sites,
                                            std::span<const std::size_t> v_sites, Rng& rng);

/// Weighted product (u0,v0)^(l1,l2) e^{gamma (L= + rho L!=)} of one path.
double moment_dual_weight(const ColoredParticleSystem& path, const PairField& initial,
                          double gamma, double rho);

struct MomentDualResult {
  MeanSe estimate;
  /// Relative SE above 50%.
  bool unstable = false;
};

/// Estimates E[prod u_t(k) prod v_t(l)].
MomentDualResult moment_dual_estimate(const SiteGraph& g, const MomentDualConfig& cfg,
                                      const PairField& initial,
                                      std::span<const std::size_t> u_sites,
                                      std::span<const std::size_t> v_sites,
                                      Exec exec = Exec::kParallel);

// ---------------------------------------------------------------------------
// Coalescing random walks.

struct CoalescingWalkers {
  std::vector<std::size_t> positions;
  std::size_t merges = 0;
};

CoalescingWalkers run_coalescing_walkers(const SiteGraph& g, std::span<const std::size_t> sites,
                                         double t, Rng& rng);

/// Estimates E[U_t(k1) ... U_t(km)] for the voter process started from `opinions`.
MeanSe coalescing_dual_estimate(const SiteGraph& g, std::span<const std::uint8_t> opinions,
                                std::span<const std::size_t> sites, double t,
                                std::size_t replicas, std::uint64_t seed,
                                Exec exec = Exec::kParallel);

// ---------------------------------------------------------------------------
// Self-duality.

/// sum_k [-sqrt(1-rho)(x1+x2)(y1+y2) + i sqrt(1+rho)(x1-x2)(y1-y2)].
std::complex<double> selfdual_inner(std::span<const double> x1, std::span<const double> x2,
                                    std::span<const double> y1, std::span<const double> y2,
                                    double rho);

/// F(x, y) = exp(<<x, y>>_rho).
std::complex<double> selfdual_functional(const PairField& x, const PairField& y, double rho);

struct SelfDualGap {
  ComplexMeanSe forward;   // E F(u_t, v_t, y0)
  ComplexMeanSe backward;  // E F(u0, v0, y_t)
  std::complex<double> gap;
  double se_real = 0.0;
  double se_imag = 0.0;
};

/// forward_states evolve from x0, backward_states from y0 under the same dynamics.
SelfDualGap selfdual_check(std::span<const PairField> forward_states, const PairField& y0,
                           std::span<const PairField> backward_states, const PairField& x0,
                           double rho);

}  // namespace symbranch
