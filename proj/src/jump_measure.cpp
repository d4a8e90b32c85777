#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "symbranch/exitlaw.hpp"
#include "symbranch/quadrature.hpp"

namespace symbranch {

namespace {

constexpr double kPi = std::numbers::pi;

// Distance 1 - x from the pole of the U-branch in the variable x = y^p, for
// y = 1 + d (d > 0 gives the image under t = 1/x instead). Computed without
// cancellation for small d.
double pole_gap_below(double p, double eps_prime) {
  return -std::expm1(p * std::log1p(-eps_prime));
}
double pole_gap_above(double p, double eps) { return -std::expm1(-p * std::log1p(eps)); }

struct Branch {
  double p;
  double s;
  double coef() const { return p * s / kPi; }
};

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

// x - 1 for x = y^p, accurate near the pole.
double x_minus_one(double p, double y) { return std::expm1(p * std::log(y)); }

// Primitives of the branch densities in y; in x = y^p both are c/(x -+ 1)^2.
double primitive_u_lower(const Branch& b, double y) { return b.coef() / -x_minus_one(b.p, y); }
double primitive_u_upper(const Branch& b, double y) { return -b.coef() / x_minus_one(b.p, y); }
double primitive_v(const Branch& b, double y) {
  return -b.coef() / (1.0 + std::pow(y, b.p));
}

template <class Primitive>
InverseCdfTable build_table(Primitive primitive, std::vector<double> knots, double tail_mass,
                            double tail_index) {
  std::vector<double> cumulative(knots.size(), 0.0);
  for (std::size_t i = 1; i < knots.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + (primitive(knots[i]) - primitive(knots[i - 1]));
  }
  return InverseCdfTable(std::move(knots), std::move(cumulative), tail_mass, tail_index);
}

}  // namespace

InverseCdfTable::InverseCdfTable(std::vector<double> knots, std::vector<double> cumulative,
                                 double tail_mass, double tail_index)
    : knots_(std::move(knots)), cdf_(std::move(cumulative)), tail_index_(tail_index) {
  if (knots_.size() < 2 || knots_.size() != cdf_.size()) {
    throw std::invalid_argument("inverse CDF table needs matching knots and masses");
  }
  const double total = cdf_.back() + tail_mass;
  if (!(total > 0.0)) throw std::invalid_argument("inverse CDF table has no mass");
  for (double& c : cdf_) c /= total;
}

double InverseCdfTable::sample(double uniform) const {
  const double body = cdf_.back();
  if (uniform >= body && tail_index_ > 0.0 && body < 1.0) {
    const double w = (uniform - body) / (1.0 - body);
    return knots_.back() * std::pow(1.0 - w, -1.0 / tail_index_);
  }
  const double target = std::min(uniform, body);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  if (it == cdf_.begin()) return knots_.front();
  if (it == cdf_.end()) return knots_.back();
  const auto hi = static_cast<std::size_t>(it - cdf_.begin());
  const std::size_t lo = hi - 1;
  const double width = cdf_[hi] - cdf_[lo];
  const double frac = width > 0.0 ? (target - cdf_[lo]) / width : 0.0;
  return knots_[lo] + frac * (knots_[hi] - knots_[lo]);
}

BalanceTerms balance_terms(double rho, double eps, double eps_prime) {
  const Branch b{critical_exponent(rho), std::sqrt(1.0 - rho * rho)};
  const double p = b.p;
  const double c = b.coef();
  BalanceTerms out;
  // Above the pole: t = 1/x. Near the pole use w = 1 - t in [gap, 1/2]; the
  // integrable singularity at t = 0 is left in t itself so that tanh-sinh sees
  // it without cancellation.
  out.upper = quad::integrate_singular(
                  [&](double w) { return (std::pow(1.0 - w, -1.0 / p) - 1.0) * c / (w * w); },
                  std::min(pole_gap_above(p, eps), 0.5), 0.5) +
              quad::integrate_singular(
                  [&](double t) {
                    return (std::pow(t, -1.0 / p) - 1.0) * c / ((1.0 - t) * (1.0 - t));
                  },
                  0.0, std::min(1.0 - pole_gap_above(p, eps), 0.5));
  // Below the pole: w = 1 - x in [gap, 1].
  out.lower = quad::integrate_singular(
      [&](double w) { return (1.0 - std::pow(1.0 - w, 1.0 / p)) * c / (w * w); },
      pole_gap_below(p, eps_prime), 1.0);
  // V-branch mass: x and 1/x halves of int_0^inf c/(1+x)^2 dx.
  const double half = quad::integrate([&](double x) { return c / ((1.0 + x) * (1.0 + x)); },
                                      0.0, 1.0);
  out.v_mass = 2.0 * half;
  return out;
}

TruncatedJumpMeasure::TruncatedJumpMeasure(double rho, double eps) : rho_(rho), eps_(eps) {
  if (!(rho >= -1.0 && rho < 1.0)) {
    throw std::invalid_argument("truncated jump measure needs rho in [-1, 1)");
  }
  if (rho == -1.0) {
    atom_ = true;
    v_mass_ = 1.0;
    drift_shift_ = -1.0;
    v_first_moment_ = 1.0;
    return;
  }
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("eps must lie in (0, 0.5)");

  const Branch b{critical_exponent(rho), std::sqrt(1.0 - rho * rho)};
  const double p = b.p;
  const double c = b.coef();

  const BalanceTerms at_top = balance_terms(rho, eps, 1.0);
  const double upper = at_top.upper;
  const double v_mass = at_top.v_mass;
  auto residual = [&](double ep) {
    const double lower = quad::integrate_singular(
        [&](double w) { return (1.0 - std::pow(1.0 - w, 1.0 / p)) * c / (w * w); },
        pole_gap_below(p, ep), 1.0);
    return upper - lower - v_mass;
  };
  const double lo = 1e-14;
  const double hi = 1.0 - 1e-12;
  const double f_lo = residual(lo);
  const double f_hi = residual(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    throw std::runtime_error("balancing eps' not bracketed; eps is too large for this rho");
  }
  std::uintmax_t iterations = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      residual, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), iterations);
  eps_prime_ = 0.5 * (bracket.first + bracket.second);
  drift_shift_ = residual(eps_prime_);

  // Piece masses in closed form.
  u_upper_mass_ = c / pole_gap_above(p, eps) - c;
  u_lower_mass_ = c / pole_gap_below(p, eps_prime_) - c;
  v_mass_ = v_mass;
  v_first_moment_ =
      quad::integrate_singular(
          [&](double x) { return std::pow(x, 1.0 / p) * c / ((1.0 + x) * (1.0 + x)); }, 0.0,
          1.0) +
      quad::integrate_singular(
          [&](double t) { return std::pow(t, -1.0 / p) * c / ((1.0 + t) * (1.0 + t)); }, 0.0,
          1.0);

  // Lower U piece: y = 1 - d, d log-spaced in [eps', 1].
  {
    auto gaps = log_spaced(eps_prime_, 1.0, kKnots);
    std::vector<double> knots(kKnots);
    for (std::size_t i = 0; i < kKnots; ++i) knots[i] = 1.0 - gaps[kKnots - 1 - i];
    knots.front() = 0.0;
    knots.back() = 1.0 - eps_prime_;
    u_lower_ = build_table([&](double y) { return primitive_u_lower(b, y); }, std::move(knots),
                           0.0, 0.0);
  }
  // Upper U piece: y = 1 + d, d log-spaced in [eps, d_max], Pareto tail beyond.
  {
    const double d_max = 10.0 * std::pow(1e6, 1.0 / p);
    auto gaps = log_spaced(eps, d_max, kKnots);
    std::vector<double> knots(kKnots);
    for (std::size_t i = 0; i < kKnots; ++i) knots[i] = 1.0 + gaps[i];
    const double tail = c / x_minus_one(p, knots.back());
    u_upper_ = build_table([&](double y) { return primitive_u_upper(b, y); }, std::move(knots),
                           tail, p);
  }
  // V branch: [0, y_min] as one bin, log-spaced up to y_max, Pareto tail.
  {
    const double y_min = 0.1 * std::pow(1e-6, 1.0 / p);
    const double y_max = 10.0 * std::pow(1e6, 1.0 / p);
    std::vector<double> knots = log_spaced(y_min, y_max, kKnots - 1);
    knots.insert(knots.begin(), 0.0);
    const double tail = c / (1.0 + std::pow(y_max, p));
    v_table_ = build_table([&](double y) { return primitive_v(b, y); }, std::move(knots), tail,
                           p);
  }
}

TruncatedJumpMeasure truncate_nu(double rho, double eps) { return {rho, eps}; }

BoundaryPoint sample_nu_trunc(const TruncatedJumpMeasure& measure, Rng& rng) {
  if (measure.is_atom()) return BoundaryPoint::make(Axis::kV, 1.0);
  const double pick = uniform_open(rng) * measure.total_mass();
  const double within = uniform_open(rng);
  if (pick < measure.v_mass()) {
    return BoundaryPoint::make(Axis::kV, measure.v_table().sample(within));
  }
  if (pick < measure.v_mass() + measure.u_lower_mass()) {
    return BoundaryPoint::make(Axis::kU, measure.u_lower_table().sample(within));
  }
  return BoundaryPoint::make(Axis::kU, measure.u_upper_table().sample(within));
}

}  // namespace symbranch
