#include "symbranch/lattice.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace symbranch {

namespace {

void require_size(const SiteGraph& g, std::size_t n) {
  if (n != g.size()) {
    throw std::invalid_argument("field has " + std::to_string(n) +
                                " entries, graph has " +
                                std::to_string(g.size()) + " sites");
  }
}

}  // namespace

SiteGraph::SiteGraph(Eigen::MatrixXd rates) : rates_(std::move(rates)) {
  if (rates_.rows() != rates_.cols() || rates_.rows() == 0) {
    throw std::invalid_argument("rate matrix must be square and nonempty");
  }
  const auto n = static_cast<std::size_t>(rates_.rows());
  offsets_.assign(n + 1, 0);
  double max_out = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double a = rate(i, j);
      if (!(a >= 0.0)) throw std::invalid_argument("negative off-diagonal rate");
      if (a != rate(j, i)) throw std::invalid_argument("rate matrix not symmetric");
      if (a > 0.0) neighbors_.push_back({j, a});
      off += a;
    }
    if (std::abs(off + rate(i, i)) > 1e-12 * std::max(1.0, off)) {
      throw std::invalid_argument("row " + std::to_string(i) +
                                  " of the rate matrix does not sum to zero");
    }
    offsets_[i + 1] = neighbors_.size();
    max_out = std::max(max_out, off);
  }
  beta_.assign(n, 1.0);
  // With beta = 1, sum_i |a(i,k)| = 2 * (rate out of k).
  beta_bound_ = std::max(2.0, 2.0 * max_out);
}

SiteGraph build_torus(int dimension, int side) {
  if (dimension < 1) throw std::invalid_argument("torus dimension must be >= 1");
  if (side < 3) {
    throw std::invalid_argument(
        "torus side must be >= 3 (L = 2 would double edges; use a dumbbell)");
  }
  std::size_t n = 1;
  for (int k = 0; k < dimension; ++k) n *= static_cast<std::size_t>(side);
  const double a = 1.0 / (2.0 * dimension);
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
  for (std::size_t site = 0; site < n; ++site) {
    std::size_t stride = 1;
    for (int k = 0; k < dimension; ++k) {
      const std::size_t coord = (site / stride) % static_cast<std::size_t>(side);
      const std::size_t up = site - coord * stride +
                             ((coord + 1) % static_cast<std::size_t>(side)) * stride;
      const auto i = static_cast<Eigen::Index>(site);
      const auto j = static_cast<Eigen::Index>(up);
      rates(i, j) = a;
      rates(j, i) = a;
      stride *= static_cast<std::size_t>(side);
    }
  }
  for (Eigen::Index i = 0; i < rates.rows(); ++i) rates(i, i) = -1.0;
  return SiteGraph(std::move(rates));
}

SiteGraph build_dumbbell(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("dumbbell rate must be positive and finite");
  }
  Eigen::MatrixXd rates(2, 2);
  rates << -rate, rate, rate, -rate;
  return SiteGraph(std::move(rates));
}

SiteGraph build_single_site() { return SiteGraph(Eigen::MatrixXd::Zero(1, 1)); }

double apply_generator_at(const SiteGraph& g, std::span<const double> f,
                          std::size_t site) {
  double acc = 0.0;
  const double here = f[site];
  for (const Neighbor& nb : g.neighbors(site)) acc += nb.rate * (f[nb.site] - here);
  return acc;
}

ScalarField apply_generator(const SiteGraph& g, std::span<const double> f) {
  require_size(g, f.size());
  ScalarField out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = apply_generator_at(g, f, i);
  return out;
}

Eigen::MatrixXd heat_semigroup(const SiteGraph& g, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("semigroup time must be finite and >= 0");
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  if (t == 0.0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.rates());
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition of the rate matrix failed");
  }
  const Eigen::VectorXd decay = (t * eig.eigenvalues().array()).exp().matrix();
  Eigen::MatrixXd p =
      eig.eigenvectors() * decay.asDiagonal() * eig.eigenvectors().transpose();
  // Symmetrize and remove round-off negatives.
  p = 0.5 * (p + p.transpose()).eval();
  return p.cwiseMax(0.0);
}

double beta_pairing(const SiteGraph& g, std::span<const double> f) {
  require_size(g, f.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g.beta()[i];
  return acc;
}

HeatKernel::HeatKernel(const SiteGraph& g, double t)
    : step_(t), matrix_(heat_semigroup(g, t)) {}

void HeatKernel::apply(std::span<const double> in, std::span<double> out) const {
  const auto n = static_cast<Eigen::Index>(in.size());
  if (n != matrix_.rows() || out.size() != in.size()) {
    throw std::invalid_argument("heat kernel size mismatch");
  }
  Eigen::Map<const Eigen::VectorXd> x(in.data(), n);
  Eigen::Map<Eigen::VectorXd> y(out.data(), n);
  y.noalias() = matrix_ * x;
}

ScalarField HeatKernel::apply(std::span<const double> in) const {
  ScalarField out(in.size());
  apply(in, out);
  return out;
}

}  // namespace symbranch
