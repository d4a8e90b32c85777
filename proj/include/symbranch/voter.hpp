#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "symbranch/lattice.hpp"
#include "symbranch/parallel.hpp"
#include "symbranch/rng.hpp"
#include "symbranch/sbm_infinite.hpp"
#include "symbranch/stats.hpp"

namespace symbranch {

/// One opinion in {0,1} per site.
using OpinionField = std::vector<std::uint8_t>;

/// sum_j a(k,j) 1{eta(j) != eta(k)}.
double flip_rate(std::span<const std::uint8_t> field, const SiteGraph& g, std::size_t k);

struct VoterTrajectory {
  std::vector<double> times;
  std::vector<OpinionField> states;
  OpinionField final_state;
  std::size_t flips = 0;
  double first_event = 0.0;  // +inf when nothing happened before the horizon
};

/// Exact event-driven simulation up to `horizon`, sampling at `times`.
VoterTrajectory gillespie_simulate(const SiteGraph& g, const OpinionField& initial,
                                   double horizon, Rng& rng, std::span<const double> times = {});

/// Opinion 1 becomes (1,0), opinion 0 becomes (0,1).
BoundaryField embed_opinions(std::span<const std::uint8_t> field);

bool is_consensus(std::span<const std::uint8_t> field);

/// P(consensus by T) for each T, from one set of paths.
std::vector<MeanSe> consensus_probability(const SiteGraph& g, const OpinionField& initial,
                                          std::span<const double> horizons,
                                          std::size_t replicas, std::uint64_t seed,
                                          Exec exec = Exec::kParallel);

struct VoterCompareConfig {
  double t = 1.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t replicas = 10000;
  std::uint64_t seed = 0;
  double trotter_eps = 0.01;
  double flow_substep = 1e-2;
};

struct PointComparison {
  std::size_t site_a = 0;
  std::size_t site_b = 0;  // equal to site_a for one-point functions
  MeanSe voter;
  MeanSe trotter;
  MeanSe pdmp;
  double z_voter_trotter = 0.0;
  double z_voter_pdmp = 0.0;
  double z_trotter_pdmp = 0.0;
};

struct VoterComparison {
  std::vector<PointComparison> one_point;
  std::vector<PointComparison> two_point;
  /// Every PDMP state visited had per-site magnitude exactly 1.
  bool pdmp_unit_magnitudes = true;
  /// Largest |magnitude - 1| seen in the Trotter states.
  double trotter_magnitude_drift = 0.0;
  /// PDMP thinning rates equal the voter flip rates on all sampled states.
  bool pdmp_rates_match = true;
  std::size_t rate_checks = 0;
  std::size_t pdmp_jumps = 0;
};

/// Compares the voter process with SBM_inf(-1) built by Trotter and by PDMP.
/// Throws std::invalid_argument when `initial` has entries outside {0,1}.
VoterComparison voter_vs_sbminf(const SiteGraph& g, const OpinionField& initial,
                                const VoterCompareConfig& cfg, Exec exec = Exec::kParallel);

}  // namespace symbranch
