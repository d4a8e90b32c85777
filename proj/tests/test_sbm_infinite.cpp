#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "symbranch/sbm_infinite.hpp"
#include "symbranch/stats.hpp"

using namespace symbranch;

namespace {

BoundaryPoint U(double y) { return BoundaryPoint::make(Axis::kU, y); }
BoundaryPoint V(double y) { return BoundaryPoint::make(Axis::kV, y); }

void check_on_e(const BoundaryField& f) {
  const auto p = to_pair(f);
  for (std::size_t k = 0; k < p.size(); ++k) CHECK(p.u[k] * p.v[k] == 0.0);
}

}  // namespace

TEST_CASE("jump marks rescale and swap") {
  CHECK(apply_jump(U(3), U(2)) == U(6));
  CHECK(apply_jump(U(3), V(0.5)) == V(1.5));
  CHECK(apply_jump(V(2), V(0.5)) == U(1));
  CHECK(apply_jump(U(0), V(4)) == U(0));
}

TEST_CASE("jump intensity") {
  const auto g = build_torus(1, 4);
  const BoundaryField state{U(2), V(4), U(1), V(0)};
  CHECK(intensity(state, g, 0) == doctest::Approx(1.0));
  const BoundaryField island{U(2), U(1), U(3), U(5)};
  CHECK(intensity(island, g, 0) == 0.0);
  const BoundaryField origin{U(0), V(3), U(1), V(2)};
  CHECK(intensity(origin, g, 0) == 0.0);
  CHECK(intensity(to_pair(state), g, 0) == doctest::Approx(1.0));
}

TEST_CASE("pair conversions enforce E") {
  PairField both{{1, 0}, {1, 2}};
  CHECK_THROWS_AS(to_boundary(both), std::invalid_argument);
  const auto f = to_boundary(PairField{{0, 3}, {2, 0}});
  CHECK(f[0] == V(2));
  CHECK(f[1] == U(3));
}

TEST_CASE("Trotter keeps the origin and a frozen single site") {
  const auto params = ExitLawParams::make(0.2);
  Rng rng = make_stream(1, StreamTag::kTrotter, 0);
  const auto g = build_torus(1, 4);
  const BoundaryField zero(4, U(0));
  CHECK(trotter_simulate(g, params, 0.1, 1.0, zero, rng).final_state == zero);
  const auto single = build_single_site();
  const BoundaryField one{V(2.5)};
  CHECK(trotter_simulate(single, params, 0.1, 1.0, one, rng).final_state == one);
}

TEST_CASE("one Trotter step at rho=-1 flips with the mixed opposite mass") {
  const auto g = build_dumbbell(1.0);
  const double eps = 0.3;
  const HeatKernel kernel(g, eps);
  const auto params = ExitLawParams::make(-1.0);
  const PairField start = to_pair(BoundaryField{U(1), V(1)});
  const double flip = heat_semigroup(g, eps)(0, 1);
  const std::size_t n = 100000;
  std::size_t flips = 0;
  Rng rng = make_stream(2, StreamTag::kTrotter, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto next = trotter_step(start, kernel, params, rng);
    CHECK(next.u[0] + next.v[0] == doctest::Approx(1.0));
    flips += next.v[0] > 0.0;
  }
  CHECK(std::abs(static_cast<double>(flips) / n - flip) < 3.0 * std::sqrt(flip * (1 - flip) / n));
}

TEST_CASE("Trotter horizon below eps takes one step and stays on E") {
  const auto g = build_torus(1, 6);
  const auto params = ExitLawParams::make(0.3);
  Rng rng = make_stream(3, StreamTag::kTrotter, 0);
  const BoundaryField init{U(1), V(1), U(2), V(0.5), U(1), V(3)};
  TrotterOptions opts;
  opts.record_path = true;
  const auto short_run = trotter_simulate(g, params, 0.1, 0.05, init, rng, opts);
  CHECK(short_run.path.size() == 2);
  opts.times = {0.5, 1.0};
  const auto run = trotter_simulate(g, params, 0.05, 1.0, init, rng, opts);
  CHECK(run.states.size() == 2);
  for (const auto& s : run.states) check_on_e(s);
  for (const auto& p : run.path) {
    for (std::size_t k = 0; k < 6; ++k) CHECK(p.right.u[k] * p.right.v[k] == 0.0);
  }
}

TEST_CASE("PDMP fixes the zero state and a single site") {
  const auto params = ExitLawParams::make(-0.3);
  const auto trunc = truncate_nu(-0.3, 0.1);
  Rng rng = make_stream(4, StreamTag::kPdmp, 0);
  const auto g = build_torus(1, 4);
  const BoundaryField zero(4, U(0));
  const auto run = pdmp_simulate(g, params, trunc, 1.0, zero, rng);
  CHECK(run.trajectory.final_state == zero);
  CHECK(run.diagnostics.jumps == 0);
  const BoundaryField one{U(1.5)};
  CHECK(pdmp_simulate(build_single_site(), params, trunc, 1.0, one, rng).trajectory.final_state == one);
}

TEST_CASE("PDMP paths stay on E") {
  const auto g = build_torus(1, 6);
  const auto params = ExitLawParams::make(-0.3);
  const auto trunc = truncate_nu(-0.3, 0.1);
  const BoundaryField init{U(1), V(1), U(2), V(0.5), U(1), V(3)};
  PdmpOptions opts;
  opts.record_path = true;
  std::size_t jumps = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    Rng rng = make_stream(5, StreamTag::kPdmp, i);
    const auto run = pdmp_simulate(g, params, trunc, 0.5, init, rng, opts);
    jumps += run.diagnostics.jumps;
    for (const auto& p : run.trajectory.path) {
      for (std::size_t k = 0; k < 6; ++k) {
        CHECK(p.left.u[k] * p.left.v[k] == 0.0);
        CHECK(p.right.u[k] * p.right.v[k] == 0.0);
      }
    }
  }
  CHECK(jumps > 0);
}

TEST_CASE("PDMP at rho=-1 keeps unit magnitudes") {
  const auto g = build_torus(1, 8);
  const auto params = ExitLawParams::make(-1.0);
  const auto trunc = truncate_nu(-1.0, 0.1);
  BoundaryField init;
  for (std::size_t k = 0; k < 8; ++k) init.push_back(k < 4 ? U(1) : V(1));
  PdmpOptions opts;
  opts.record_path = true;
  Rng rng = make_stream(6, StreamTag::kPdmp, 0);
  const auto run = pdmp_simulate(g, params, trunc, 2.0, init, rng, opts);
  CHECK(run.diagnostics.jumps > 0);
  for (const auto& p : run.trajectory.path) {
    for (std::size_t k = 0; k < 8; ++k) CHECK(p.right.u[k] + p.right.v[k] == 1.0);
  }
}

TEST_CASE("martingale functional vanishes at time zero and for y=0") {
  const auto g = build_torus(1, 4);
  const auto params = ExitLawParams::make(0.3);
  const BoundaryField init{U(1), V(1), U(0.5), V(2)};
  TrotterOptions opts;
  opts.record_path = true;
  Rng rng = make_stream(7, StreamTag::kTrotter, 0);
  const auto zero_time = trotter_simulate(g, params, 0.1, 0.0, init, rng, opts);
  PairField y{{0.5, 0, 0, 0}, {0, 0.5, 0, 0}};
  if (!zero_time.path.empty()) {
    Trajectory first = zero_time;
    first.path.resize(1);
    CHECK(martingale_functional(first, g, 0.3, y) == std::complex<double>(0.0, 0.0));
  }
  const auto run = trotter_simulate(g, params, 0.1, 0.5, init, rng, opts);
  CHECK(martingale_functional(run, g, 0.3, PairField::constant(4, 0, 0)) ==
        std::complex<double>(0.0, 0.0));
}
