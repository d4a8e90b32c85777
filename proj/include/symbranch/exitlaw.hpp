#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "symbranch/rng.hpp"

namespace symbranch {

enum class Axis : std::uint8_t { kU = 0, kV = 1 };

/// A point of E = {(y,0)} u {(0,y)}: the nonzero coordinate and its size.
struct BoundaryPoint {
  Axis axis = Axis::kU;
  double magnitude = 0.0;

  /// Zero magnitude is always stored on the U-axis.
  static BoundaryPoint make(Axis axis, double magnitude);
  static BoundaryPoint from_pair(double u, double v);  // requires u*v == 0

  double u() const { return axis == Axis::kU ? magnitude : 0.0; }
  double v() const { return axis == Axis::kV ? magnitude : 0.0; }
  /// +magnitude on the U-axis, -magnitude on the V-axis.
  double signed_magnitude() const { return axis == Axis::kU ? magnitude : -magnitude; }

  friend bool operator==(const BoundaryPoint&, const BoundaryPoint&) = default;
};

/// Raised where a law has no density (start on E, or rho = +-1).
class AtomicLawError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Correlation together with the derived wedge geometry.
struct ExitLawParams {
  double rho = 0.0;
  double theta = 0.0;  // wedge angle pi/2 + arcsin(rho)
  double p = 2.0;      // critical exponent pi/theta (+inf at rho = -1)
  double phi = 0.0;    // rotation angle arcsin(rho)
  double scale = 1.0;  // sqrt(1 - rho^2)

  static ExitLawParams make(double rho);
};

double critical_exponent(double rho);

/// Density of the exit law of rho-correlated Brownian motion from the open
/// quadrant, started at (u, v), at the boundary point `pt` (w.r.t. Lebesgue
/// measure on the axis). Throws AtomicLawError when (u,v) is on E or |rho| = 1.
double exit_density(const ExitLawParams& params, double u, double v, BoundaryPoint pt);

/// Mass the exit law puts on one axis, by quadrature of exit_density.
double exit_axis_mass(const ExitLawParams& params, double u, double v, Axis axis);

/// Sub-distribution function r -> Q(axis, magnitude <= r) evaluated at each
/// entry of `sorted_magnitudes` (ascending) by cumulative quadrature.
std::vector<double> exit_axis_cdf(const ExitLawParams& params, double u, double v,
                                  Axis axis, std::span<const double> sorted_magnitudes);

/// Exact draw from the exit law via the wedge map and the half-plane Cauchy law.
BoundaryPoint sample_exit(const ExitLawParams& params, double u, double v, Rng& rng);

/// Density of nu^rho = nu^rho_(1,0). Throws std::domain_error at the pole (1,0).
double nu_density(double rho, BoundaryPoint pt);

/// Density of nu^rho_(a,0).
double nu_scaled_density(double rho, double a, BoundaryPoint pt);

/// Inverse-CDF table over a bounded interval with linear interpolation,
/// optionally followed by a Pareto tail of index `tail_index` beyond the last knot.
class InverseCdfTable {
 public:
  InverseCdfTable() = default;
  InverseCdfTable(std::vector<double> knots, std::vector<double> cumulative,
                  double tail_mass, double tail_index);

  double sample(double uniform) const;
  std::span<const double> knots() const { return knots_; }
  std::span<const double> cdf() const { return cdf_; }

 private:
  std::vector<double> knots_;
  std::vector<double> cdf_;  // normalized, last entry = 1 - tail fraction
  double tail_index_ = 0.0;
};

/// nu^rho restricted to E minus {(y,0): 1 - eps' <= y <= 1 + eps}, where eps'
/// balances the first moment of y1 - 1. At rho = -1 the measure is the unit
/// atom at (0,1) and no truncation takes place.
class TruncatedJumpMeasure {
 public:
  static constexpr std::size_t kKnots = 4096;

  TruncatedJumpMeasure(double rho, double eps);

  double rho() const { return rho_; }
  double eps() const { return eps_; }
  double eps_prime() const { return eps_prime_; }
  bool is_atom() const { return atom_; }

  double u_lower_mass() const { return u_lower_mass_; }
  double u_upper_mass() const { return u_upper_mass_; }
  double u_mass() const { return u_lower_mass_ + u_upper_mass_; }
  double v_mass() const { return v_mass_; }
  double total_mass() const { return u_mass() + v_mass_; }

  /// Integral of (y1 - 1): zero up to quadrature error when balanced, -1 for the atom.
  double drift_shift() const { return drift_shift_; }
  /// Integral of y2 (the V-branch first moment).
  double v_first_moment() const { return v_first_moment_; }

  const InverseCdfTable& u_lower_table() const { return u_lower_; }
  const InverseCdfTable& u_upper_table() const { return u_upper_; }
  const InverseCdfTable& v_table() const { return v_table_; }

 private:
  double rho_;
  double eps_;
  double eps_prime_ = 0.0;
  bool atom_ = false;
  double u_lower_mass_ = 0.0;
  double u_upper_mass_ = 0.0;
  double v_mass_ = 0.0;
  double drift_shift_ = 0.0;
  double v_first_moment_ = 0.0;
  InverseCdfTable u_lower_;
  InverseCdfTable u_upper_;
  InverseCdfTable v_table_;
};

/// Requires rho in [-1, 1) and eps in (0, 0.5); throws std::runtime_error if
/// the balancing eps' cannot be bracketed.
TruncatedJumpMeasure truncate_nu(double rho, double eps);

/// Draw from the normalized truncated measure.
BoundaryPoint sample_nu_trunc(const TruncatedJumpMeasure& measure, Rng& rng);

/// Balance integrals of the truncated U-branch, exposed for diagnostics:
/// int_{y>1+eps} (y-1) dnu, int_{y<1-eps'} (1-y) dnu and the V-branch mass.
struct BalanceTerms {
  double upper = 0.0;
  double lower = 0.0;
  double v_mass = 0.0;
  double residual() const { return upper - lower - v_mass; }
};
BalanceTerms balance_terms(double rho, double eps, double eps_prime);

// ---------------------------------------------------------------------------
// Brute-force Brownian exit oracle (independent of the conformal sampler).

struct BrownianExitOptions {
  double dt_min = 1e-4;       // step used within sqrt(dt_min / bulk_factor) of E
  double bulk_factor = 0.01;  // dt = max(dt_min, bulk_factor * dist^2)
  double max_time = 1e12;
};

struct BrownianExit {
  BoundaryPoint point;
  double tau = 0.0;
  std::size_t steps = 0;
  bool exited = false;
};

/// Simulates the correlated pair from (u, v) until it leaves the quadrant,
/// with a Brownian-bridge crossing test between grid points.
BrownianExit simulate_brownian_exit(double rho, double u, double v, Rng& rng,
                                    const BrownianExitOptions& options = {});

}  // namespace symbranch
