#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "symbranch/lattice.hpp"

using namespace symbranch;

namespace {

void check_q_matrix(const SiteGraph& g) {
  const auto& a = g.rates();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    CHECK(std::abs(a.row(i).sum()) < 1e-15);
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      CHECK(a(i, j) == a(j, i));
      if (i != j) CHECK(a(i, j) >= 0.0);
    }
  }
}

}  // namespace

TEST_CASE("torus d=1 L=4 has rate 1/2 to each neighbour") {
  const auto g = build_torus(1, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(g.rate(k, (k + 1) % 4) == 0.5);
    CHECK(g.rate(k, (k + 3) % 4) == 0.5);
    CHECK(g.rate(k, (k + 2) % 4) == 0.0);
    CHECK(g.rate(k, k) == -1.0);
  }
}

TEST_CASE("built graphs are symmetric Q-matrices") {
  check_q_matrix(build_torus(1, 4));
  check_q_matrix(build_torus(2, 3));
  check_q_matrix(build_torus(3, 4));
  check_q_matrix(build_dumbbell(0.7));
  check_q_matrix(build_single_site());
}

TEST_CASE("torus with side below 3 is rejected") {
  CHECK_THROWS_AS(build_torus(1, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_torus(0, 4), std::invalid_argument);
}

TEST_CASE("invalid rate matrices are rejected") {
  Eigen::MatrixXd asym(2, 2);
  asym << -1, 1, 0.5, -0.5;
  CHECK_THROWS_AS(SiteGraph{asym}, std::invalid_argument);
  Eigen::MatrixXd rows(2, 2);
  rows << -1, 0.5, 0.5, -1;
  CHECK_THROWS_AS(SiteGraph{rows}, std::invalid_argument);
  Eigen::MatrixXd negative(2, 2);
  negative << 1, -1, -1, 1;
  CHECK_THROWS_AS(SiteGraph{negative}, std::invalid_argument);
}

TEST_CASE("generator on constants and on a point mass") {
  const auto g = build_torus(1, 4);
  const ScalarField c(4, 3.5);
  for (double x : apply_generator(g, c)) CHECK(x == 0.0);
  const auto af = apply_generator(g, ScalarField{4, 0, 0, 0});
  CHECK(af[0] == -4.0);
  CHECK(af[1] == 2.0);
  CHECK(af[2] == 0.0);
  CHECK(af[3] == 2.0);
}

TEST_CASE("generator output sums to zero on a torus") {
  const auto g = build_torus(2, 5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-3, 3);
  ScalarField f(g.size());
  for (auto& x : f) x = unif(rng);
  const auto af = apply_generator(g, f);
  double sum = 0.0;
  for (double x : af) sum += x;
  CHECK(std::abs(sum) < 1e-12);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(apply_generator_at(g, f, k) == af[k]);
}

TEST_CASE("heat semigroup at time zero is the identity") {
  const auto g = build_torus(2, 3);
  CHECK(heat_semigroup(g, 0.0).isApprox(Eigen::MatrixXd::Identity(9, 9), 1e-15));
}

TEST_CASE("dumbbell semigroup matches the closed form and a power series") {
  const double c = 0.8;
  const auto g = build_dumbbell(c);
  for (double t : {0.1, 0.5, 2.0}) {
    const auto p = heat_semigroup(g, t);
    const double closed = (1.0 + std::exp(-2.0 * c * t)) / 2.0;
    CHECK(p(0, 0) == doctest::Approx(closed).epsilon(1e-13));
    // Taylor series of exp(tA), summed directly.
    Eigen::Matrix2d term = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d series = term;
    for (int k = 1; k < 60; ++k) {
      term = term * g.rates() * t / k;
      series += term;
    }
    CHECK(p(0, 0) == doctest::Approx(series(0, 0)).epsilon(1e-13));
    CHECK(p(0, 1) == doctest::Approx(series(0, 1)).epsilon(1e-13));
  }
}

TEST_CASE("heat semigroup is stochastic and a semigroup") {
  const auto g = build_torus(2, 4);
  const auto ps = heat_semigroup(g, 0.3);
  const auto pt = heat_semigroup(g, 0.9);
  const auto pst = heat_semigroup(g, 1.2);
  for (Eigen::Index i = 0; i < pst.rows(); ++i) CHECK(std::abs(pst.row(i).sum() - 1.0) < 1e-12);
  CHECK((ps * pt - pst).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((pst - (g.rates() * 1.2).exp()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("generator is the derivative of the semigroup at zero") {
  const auto g = build_torus(1, 6);
  const ScalarField f{1, 4, 0, 2, 5, 3};
  const auto af = apply_generator(g, f);
  auto error = [&](double h) {
    const HeatKernel kernel(g, h);
    const auto pf = kernel.apply(f);
    double worst = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      worst = std::max(worst, std::abs((pf[k] - f[k]) / h - af[k]));
    }
    return worst;
  };
  const double e3 = error(1e-3);
  const double e4 = error(1e-4);
  CHECK(e4 < e3);
  CHECK(e3 / e4 == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("heat kernel apply matches the matrix product") {
  const auto g = build_torus(2, 3);
  const HeatKernel kernel(g, 0.4);
  ScalarField f(9);
  for (std::size_t i = 0; i < 9; ++i) f[i] = static_cast<double>(i * i % 5);
  const auto out = kernel.apply(f);
  const Eigen::VectorXd expect = heat_semigroup(g, 0.4) * Eigen::Map<const Eigen::VectorXd>(f.data(), 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(out[i] == doctest::Approx(expect(static_cast<Eigen::Index>(i))).epsilon(1e-14));
  CHECK(beta_pairing(g, f) == doctest::Approx(expect.sum()).epsilon(1e-13));
}
