#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace symbranch {

/// One real per site.
using ScalarField = std::vector<double>;

struct Neighbor {
  std::size_t site;
  double rate;
};

/// Finite site set with a symmetric Q-matrix and unit test weights.
///
/// Invariants (checked at construction): off-diagonal rates are nonnegative,
/// the matrix is symmetric and every row sums to zero. The weight sequence is
/// identically one, for which sum_i beta(i)|a(i,k)| <= M beta(k) holds with
/// M = 2 whenever the total jump rate out of each site is at most one.
class SiteGraph {
 public:
  /// Validates `rates`; throws std::invalid_argument on any violated invariant.
  explicit SiteGraph(Eigen::MatrixXd rates);

  std::size_t size() const { return static_cast<std::size_t>(rates_.rows()); }
  const Eigen::MatrixXd& rates() const { return rates_; }
  double rate(std::size_t i, std::size_t j) const {
    return rates_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  /// Total jump rate out of `i`, i.e. -a(i,i).
  double total_rate(std::size_t i) const { return -rate(i, i); }
  std::span<const Neighbor> neighbors(std::size_t i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  const ScalarField& beta() const { return beta_; }
  double beta_bound() const { return beta_bound_; }

 private:
  Eigen::MatrixXd rates_;
  std::vector<Neighbor> neighbors_;
  std::vector<std::size_t> offsets_;
  ScalarField beta_;
  double beta_bound_ = 2.0;
};

/// Nearest-neighbour torus (Z/L)^d with rates 1/(2d). Requires d >= 1, L >= 3.
SiteGraph build_torus(int dimension, int side);

/// Two sites joined by an edge of the given rate.
SiteGraph build_dumbbell(double rate);

/// One isolated site (A = 0).
SiteGraph build_single_site();

/// (A f)(i) = sum_j a(i,j) f(j).
ScalarField apply_generator(const SiteGraph& g, std::span<const double> f);

/// Single-site value of A f; avoids allocating when only one site is needed.
double apply_generator_at(const SiteGraph& g, std::span<const double> f,
                          std::size_t site);

/// Transition matrix exp(t A).
Eigen::MatrixXd heat_semigroup(const SiteGraph& g, double t);

/// <f, beta>.
double beta_pairing(const SiteGraph& g, std::span<const double> f);

/// Cached exp(t A) for a fixed step; immutable and shareable across threads.
class HeatKernel {
 public:
  HeatKernel(const SiteGraph& g, double t);

  double step() const { return step_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// out = exp(tA) in. `out` must not alias `in`.
  void apply(std::span<const double> in, std::span<double> out) const;
  ScalarField apply(std::span<const double> in) const;

 private:
  double step_;
  Eigen::MatrixXd matrix_;
};

}  // namespace symbranch
