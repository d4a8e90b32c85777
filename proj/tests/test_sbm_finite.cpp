#include <cmath>
#include <vector>

#include <doctest.h>

#include "symbranch/lattice.hpp"
#include "symbranch/sbm_finite.hpp"
#include "symbranch/stats.hpp"

using namespace symbranch;

namespace {

SdeConfig config(double gamma, double rho, double dt, double horizon, std::size_t replicas = 1) {
  SdeConfig c;
  c.gamma = gamma;
  c.rho = rho;
  c.dt = dt;
  c.horizon = horizon;
  c.replicas = replicas;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("gamma=0 Euler step is the deterministic heat step") {
  const auto g = build_torus(1, 5);
  PairField s{{1, 2, 0, 4, 3}, {0, 1, 5, 2, 2}};
  const auto au = apply_generator(g, s.u);
  const auto av = apply_generator(g, s.v);
  const auto before = s;
  Rng rng = make_stream(1, StreamTag::kSbmFinite, 0);
  step_euler(s, g, config(0, 0.3, 0.01, 1), rng);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(s.u[k] == doctest::Approx(before.u[k] + au[k] * 0.01).epsilon(1e-15));
    CHECK(s.v[k] == doctest::Approx(before.v[k] + av[k] * 0.01).epsilon(1e-15));
  }
}

TEST_CASE("zero u stays zero") {
  const auto g = build_torus(1, 4);
  PairField s{{0, 0, 0, 0}, {1, 2, 3, 4}};
  Rng rng = make_stream(2, StreamTag::kSbmFinite, 0);
  EulerStepper stepper(g, config(3, 0.2, 1e-3, 1));
  for (int i = 0; i < 200; ++i) stepper.step(s, rng);
  for (double x : s.u) CHECK(x == 0.0);
}

TEST_CASE("rho=1 with equal fields keeps them equal") {
  const auto g = build_torus(1, 4);
  PairField s{{1, 2, 0.5, 3}, {1, 2, 0.5, 3}};
  Rng rng = make_stream(3, StreamTag::kSbmFinite, 0);
  EulerStepper stepper(g, config(2, 1.0, 1e-3, 1));
  for (int i = 0; i < 500; ++i) {
    stepper.step(s, rng);
    for (std::size_t k = 0; k < 4; ++k) CHECK(s.u[k] == s.v[k]);
  }
}

TEST_CASE("rho=-1 noise cancels in the sum") {
  const auto g = build_torus(1, 4);
  PairField s{{0.5, 0.3, 0.6, 0.9}, {0.5, 0.7, 0.4, 0.1}};
  ScalarField sum(4);
  for (std::size_t k = 0; k < 4; ++k) sum[k] = s.u[k] + s.v[k];
  const auto heat = apply_generator(g, sum);
  Rng rng = make_stream(4, StreamTag::kSbmFinite, 0);
  step_euler(s, g, config(1, -1.0, 1e-3, 1), rng);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(s.u[k] > 0.0);
    CHECK(s.v[k] > 0.0);
    CHECK(s.u[k] + s.v[k] == doctest::Approx(sum[k] + heat[k] * 1e-3).epsilon(1e-14));
  }
}

TEST_CASE("zero horizon returns the initial state") {
  const auto g = build_torus(1, 4);
  const PairField init{{1, 2, 3, 4}, {4, 3, 2, 1}};
  Rng rng = make_stream(5, StreamTag::kSbmFinite, 0);
  const auto run = simulate(g, config(1, 0, 1e-3, 0), init, {}, rng);
  CHECK(run.final_state.u == init.u);
  CHECK(run.final_state.v == init.v);
}

TEST_CASE("gamma=0 point mass follows the heat semigroup") {
  const auto g = build_torus(1, 6);
  PairField init = PairField::constant(6, 0, 0);
  init.u[0] = 1.0;
  const auto row = heat_semigroup(g, 1.0);
  Rng rng = make_stream(6, StreamTag::kSbmFinite, 0);
  SimulateOptions opts;
  opts.probes = {0, 1, 2, 3};
  opts.times = {1.0};
  for (double dt : {1e-2, 1e-3}) {
    auto cfg = config(0, 0, dt, 1.0);
    const auto euler = simulate(g, cfg, init, opts, rng);
    REQUIRE(euler.records.size() == 4);
    for (const auto& r : euler.records) {
      CHECK(std::abs(r.u - row(0, static_cast<Eigen::Index>(r.site))) < 0.5 * dt);
    }
    cfg.scheme = Scheme::kSplit;
    const auto split = simulate(g, cfg, init, opts, rng);
    for (const auto& r : split.records) {
      CHECK(r.u == doctest::Approx(row(0, static_cast<Eigen::Index>(r.site))).epsilon(1e-12));
    }
  }
}

TEST_CASE("total mass is a martingale and states stay nonnegative") {
  const auto g = build_torus(1, 4);
  const PairField init{{1, 0.5, 2, 0}, {0.5, 1, 0, 1}};
  const auto cfg = config(1, -0.3, 1e-2, 0.5, 10000);
  const auto runs = simulate_ensemble(g, cfg, init, {});
  std::vector<double> totals;
  for (const auto& r : runs) {
    totals.push_back(r.final_state.total_u());
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(r.final_state.u[k] >= 0.0);
      CHECK(r.final_state.v[k] >= 0.0);
    }
  }
  const auto m = mean_se(totals);
  CHECK(std::abs(m.mean - init.total_u()) < 3.0 * m.se);
}

TEST_CASE("brackets vanish at gamma=0 and the cross bracket tracks rho") {
  const auto g = build_dumbbell(1.0);
  const PairField init{{1, 1}, {1, 1}};
  for (const auto& r : simulate_ensemble(g, config(0, 0.5, 1e-2, 1, 20), init, {})) {
    CHECK(r.observables.brackets.quad_u == 0.0);
    CHECK(r.observables.brackets.cross == 0.0);
  }
  std::vector<double> cross0;
  for (const auto& r : simulate_ensemble(g, config(1, 0.0, 1e-3, 1, 2000), init, {})) {
    cross0.push_back(r.observables.brackets.cross);
  }
  const auto c0 = mean_se(cross0);
  CHECK(std::abs(c0.mean) < 3.0 * c0.se);
  double cross = 0.0;
  double quad = 0.0;
  for (const auto& r : simulate_ensemble(g, config(1, 0.5, 1e-3, 1, 10000), init, {})) {
    cross += r.observables.brackets.cross;
    quad += r.observables.brackets.quad_u;
  }
  CHECK(cross / quad == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("serial and parallel ensembles are bit-identical") {
  const auto g = build_torus(2, 3);
  const auto init = PairField::constant(9, 1.0, 0.7);
  SimulateOptions opts;
  opts.probes = {0, 4};
  opts.times = {0.25, 0.5};
  const auto cfg = config(2, 0.4, 1e-3, 0.5, 64);
  const auto a = simulate_ensemble(g, cfg, init, opts, Exec::kSerial);
  const auto b = simulate_ensemble(g, cfg, init, opts, Exec::kParallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].final_state.u == b[i].final_state.u);
    CHECK(a[i].final_state.v == b[i].final_state.v);
    REQUIRE(a[i].records.size() == b[i].records.size());
    for (std::size_t j = 0; j < a[i].records.size(); ++j) CHECK(a[i].records[j].u == b[i].records[j].u);
  }
}

TEST_CASE("nonspatial system started on E is absorbed at once") {
  Rng rng = make_stream(7, StreamTag::kNonspatial, 0);
  const auto r = nonspatial_simulate(config(5, 0.2, 1e-3, 2), 0, 5, rng);
  CHECK(r.absorbed);
  CHECK(r.u == 0.0);
  CHECK(r.v == 5.0);
  CHECK(r.occupation == 0.0);
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(config(-1, 0, 0, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(config(1, 1.5, 0, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(config(1, 0, 0, 1, 0).validate(), std::invalid_argument);
  CHECK(config(10, 0, 0, 1).step() == doctest::Approx(1e-4));
  CHECK(config(1, 0, 0.5, 1).coarse_step());
}
