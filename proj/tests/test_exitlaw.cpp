#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <doctest.h>

#include "symbranch/exitlaw.hpp"
#include "symbranch/stats.hpp"

using namespace symbranch;
using std::numbers::pi;

namespace {

// Probability of leaving through the U-axis: whiten the pair so the quadrant
// becomes a wedge, then use that harmonic measure in a wedge is linear in angle.
double wedge_u_mass(double rho, double u, double v) {
  const double s = std::sqrt(1.0 - rho * rho);
  const double lower = std::atan2(-rho, s);
  const double theta = pi / 2.0 - lower;
  const double psi = std::atan2((v - rho * u) / s, u) - lower;
  return 1.0 - psi / theta;
}

double half_line(const std::function<double(double)>& f) {
  boost::math::quadrature::exp_sinh<double> integrator;
  // Far out the densities are 0/0 in floating point; their true value is negligible.
  auto safe = [&](double y) {
    const double value = f(y);
    return std::isfinite(value) ? value : 0.0;
  };
  return integrator.integrate(safe, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST_CASE("critical exponent at the special correlations") {
  CHECK(critical_exponent(0.0) == 2.0);
  CHECK(critical_exponent(1.0) == 1.0);
  CHECK(critical_exponent(-0.5) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(critical_exponent(0.5) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std::isinf(critical_exponent(-1.0)));
}

TEST_CASE("exit density is symmetric under axis swap at rho=0") {
  const auto params = ExitLawParams::make(0.0);
  for (double r : {0.01, 0.3, 1.0, 2.5, 40.0}) {
    CHECK(exit_density(params, 1, 1, BoundaryPoint::make(Axis::kU, r)) ==
          doctest::Approx(exit_density(params, 1, 1, BoundaryPoint::make(Axis::kV, r))).epsilon(1e-14));
  }
}

TEST_CASE("exit law masses match harmonic measure of the wedge") {
  for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
    const auto params = ExitLawParams::make(rho);
    for (auto [u, v] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
      CAPTURE(rho);
      CAPTURE(u);
      const double mu = exit_axis_mass(params, u, v, Axis::kU);
      const double mv = exit_axis_mass(params, u, v, Axis::kV);
      CHECK(std::abs(mu + mv - 1.0) < 1e-6);
      CHECK(mu == doctest::Approx(wedge_u_mass(rho, u, v)).epsilon(1e-7));
      const double independent = half_line([&](double r) {
        return r > 0 ? exit_density(params, u, v, BoundaryPoint::make(Axis::kV, r)) : 0.0;
      });
      CHECK(mv == doctest::Approx(independent).epsilon(1e-7));
    }
  }
}

TEST_CASE("exit density has no density on E or at rho=+-1") {
  CHECK_THROWS_AS(exit_density(ExitLawParams::make(0.0), 3, 0, BoundaryPoint::make(Axis::kU, 3)),
                  AtomicLawError);
  CHECK_THROWS_AS(exit_density(ExitLawParams::make(-1.0), 1, 1, BoundaryPoint::make(Axis::kU, 2)),
                  AtomicLawError);
}

TEST_CASE("exit CDF reaches the axis mass") {
  const auto params = ExitLawParams::make(0.3);
  const std::vector<double> grid{0.1, 1.0, 10.0, 1e6};
  const auto cdf = exit_axis_cdf(params, 2, 1, Axis::kU, grid);
  CHECK(std::is_sorted(cdf.begin(), cdf.end()));
  CHECK(cdf.back() == doctest::Approx(exit_axis_mass(params, 2, 1, Axis::kU)).epsilon(1e-5));
}

TEST_CASE("sampler from a boundary start is the start itself") {
  Rng rng = make_stream(1, StreamTag::kExitLaw, 0);
  for (double rho : {-1.0, -0.3, 0.0, 0.7}) {
    const auto pt = sample_exit(ExitLawParams::make(rho), 3, 0, rng);
    CHECK(pt == BoundaryPoint::make(Axis::kU, 3));
  }
}

TEST_CASE("sampler at rho=-1 picks the two atoms by mass fractions") {
  Rng rng = make_stream(2, StreamTag::kExitLaw, 0);
  const auto params = ExitLawParams::make(-1.0);
  const std::size_t n = 100000;
  std::size_t on_u = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pt = sample_exit(params, 1, 1, rng);
    CHECK_EQ(pt.magnitude, 2.0);
    on_u += pt.axis == Axis::kU;
  }
  const double f = static_cast<double>(on_u) / n;
  CHECK(std::abs(f - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("sampler axis frequency at rho=0 from (1,1)") {
  Rng rng = make_stream(3, StreamTag::kExitLaw, 0);
  const auto params = ExitLawParams::make(0.0);
  const std::size_t n = 100000;
  std::size_t on_u = 0;
  for (std::size_t i = 0; i < n; ++i) on_u += sample_exit(params, 1, 1, rng).axis == Axis::kU;
  const double f = static_cast<double>(on_u) / n;
  CHECK(std::abs(f - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("sampler matches the density by KS and the first coordinate is a martingale") {
  Rng rng = make_stream(4, StreamTag::kExitLaw, 0);
  const double rho = 0.3;
  const auto params = ExitLawParams::make(rho);
  const std::size_t n = 100000;
  std::vector<double> us, vs, first;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pt = sample_exit(params, 2, 1, rng);
    (pt.axis == Axis::kU ? us : vs).push_back(pt.magnitude);
    first.push_back(pt.u());
  }
  std::sort(us.begin(), us.end());
  std::sort(vs.begin(), vs.end());
  const double du = ks_statistic_partial(us, n, exit_axis_cdf(params, 2, 1, Axis::kU, us),
                                         exit_axis_mass(params, 2, 1, Axis::kU));
  const double dv = ks_statistic_partial(vs, n, exit_axis_cdf(params, 2, 1, Axis::kV, vs),
                                         exit_axis_mass(params, 2, 1, Axis::kV));
  CHECK(du < 0.02);
  CHECK(dv < 0.02);
  const auto m = mean_se(first);
  CHECK(std::abs(m.mean - 2.0) < 3.0 * m.se);
}

TEST_CASE("sampler agrees with a brute-force Brownian histogram") {
  const double rho = 0.5;
  const auto params = ExitLawParams::make(rho);
  const double lo = 0.75;
  const double hi = 1.25;
  const std::size_t n = 4000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(5, StreamTag::kBrownianOracle, i);
    const auto exit = simulate_brownian_exit(rho, 1, 1, rng);
    REQUIRE(exit.exited);
    hits += exit.point.axis == Axis::kV && exit.point.magnitude > lo && exit.point.magnitude <= hi;
  }
  const double f = static_cast<double>(hits) / n;
  boost::math::quadrature::tanh_sinh<double> ts;
  const double expect = ts.integrate(
      [&](double r) { return exit_density(params, 1, 1, BoundaryPoint::make(Axis::kV, r)); }, lo, hi);
  CHECK(std::abs(f - expect) < 3.0 * std::sqrt(expect * (1 - expect) / n));
}

TEST_CASE("nu V-branch mass, first moment and divergent U-branch") {
  for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
    CAPTURE(rho);
    const double p = critical_exponent(rho);
    auto dv = [rho](double y) { return y > 0 ? nu_density(rho, BoundaryPoint::make(Axis::kV, y)) : 0.0; };
    CHECK(half_line(dv) == doctest::Approx(p * std::sqrt(1 - rho * rho) / pi).epsilon(1e-8));
    CHECK(half_line([&](double y) { return y * dv(y); }) == doctest::Approx(1.0).epsilon(1e-7));
    for (double a : {0.5, 2.0, 3.0}) {
      const double scaled = half_line([&](double y) {
        return y > 0 ? nu_scaled_density(rho, a, BoundaryPoint::make(Axis::kV, y)) : 0.0;
      });
      CHECK(scaled == doctest::Approx(half_line(dv) / a).epsilon(1e-8));
    }
  }
  CHECK(half_line([](double y) { return y > 0 ? nu_density(0.0, BoundaryPoint::make(Axis::kV, y)) : 0.0; }) ==
        doctest::Approx(2.0 / pi).epsilon(1e-10));
  // Mass of the U-branch near the pole grows without bound.
  boost::math::quadrature::tanh_sinh<double> ts;
  double previous = 0.0;
  for (double e : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double m = ts.integrate(
        [](double y) { return nu_density(0.0, BoundaryPoint::make(Axis::kU, y)); }, 1 + e, 2.0);
    CHECK(m > 5.0 * previous);
    previous = m;
  }
  CHECK_THROWS_AS(nu_density(0.0, BoundaryPoint::make(Axis::kU, 1.0)), std::domain_error);
}

TEST_CASE("nu_scaled_density at a=1 is nu_density") {
  for (double y : {0.2, 0.9, 1.1, 7.0}) {
    for (Axis ax : {Axis::kU, Axis::kV}) {
      const auto pt = BoundaryPoint::make(ax, y);
      CHECK(nu_scaled_density(-0.4, 1.0, pt) == nu_density(-0.4, pt));
    }
  }
}

TEST_CASE("truncated measure is balanced and grows as eps shrinks") {
  double previous = 0.0;
  for (double eps : {0.2, 0.1, 0.05, 0.02}) {
    const auto m = truncate_nu(-0.3, eps);
    CHECK(std::abs(m.drift_shift()) < 1e-8);
    CHECK(std::abs(balance_terms(-0.3, eps, m.eps_prime()).residual()) < 1e-8);
    CHECK(std::isfinite(m.total_mass()));
    CHECK(m.total_mass() > previous);
    previous = m.total_mass();
  }
  const auto atom = truncate_nu(-1.0, 0.1);
  CHECK(atom.is_atom());
}

TEST_CASE("balancing eps' at rho=0 matches the closed-form integrals") {
  // At p=2 the U-density is (4/pi) y / (y^2 - 1)^2.
  const double eps = 0.1;
  const double upper = 4.0 / pi * (-0.25 * std::log(eps / (2 + eps)) + 0.5 / (2 + eps));
  auto lower = [](double ep) {
    const double b = 1.0 - ep;
    return 4.0 / pi * (-0.25 * std::log(1 - b) + 0.25 * std::log(1 + b) + 0.5 * (1 / (1 + b) - 1));
  };
  const double v_mass = 2.0 / pi;
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::bisect(
      [&](double ep) { return upper - lower(ep) - v_mass; }, 1e-6, 0.999, tol, iters);
  const double oracle = 0.5 * (a + b);
  const auto m = truncate_nu(0.0, eps);
  CHECK(m.eps_prime() == doctest::Approx(oracle).epsilon(1e-8));
  const auto terms = balance_terms(0.0, eps, m.eps_prime());
  CHECK(terms.upper == doctest::Approx(upper).epsilon(1e-10));
  CHECK(terms.v_mass == doctest::Approx(v_mass).epsilon(1e-10));
}

TEST_CASE("truncated sampler branch frequencies and drift") {
  const auto m = truncate_nu(-0.5, 0.01);
  Rng rng = make_stream(6, StreamTag::kJumpMeasure, 0);
  const std::size_t n = 100000;
  std::size_t on_v = 0;
  std::vector<double> shift(n);
  std::vector<double> vs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pt = sample_nu_trunc(m, rng);
    if (pt.axis == Axis::kV) {
      ++on_v;
      vs.push_back(pt.magnitude);
    } else {
      CHECK((pt.magnitude < 1 - m.eps_prime() || pt.magnitude > 1 + m.eps()));
      shift[i] = pt.magnitude - 1.0;
    }
  }
  const double fv = m.v_mass() / m.total_mass();
  CHECK(std::abs(static_cast<double>(on_v) / n - fv) < 3.0 * std::sqrt(fv * (1 - fv) / n));
  const auto s = mean_se(shift);
  CHECK(std::abs(s.mean - fv) < 3.0 * s.se);
  while (vs.size() < 100000) {
    const auto pt = sample_nu_trunc(m, rng);
    if (pt.axis == Axis::kV) vs.push_back(pt.magnitude);
  }
  // Normalized V-branch CDF in closed form: r^p / (1 + r^p).
  const double p = critical_exponent(-0.5);
  const double d = ks_statistic(vs, [p](double r) { return std::pow(r, p) / (1 + std::pow(r, p)); });
  CHECK(d < 0.01);
}
