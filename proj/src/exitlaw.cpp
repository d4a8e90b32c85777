#include "symbranch/exitlaw.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "symbranch/quadrature.hpp"

namespace symbranch {

namespace {

constexpr double kPi = std::numbers::pi;

void require_rho(double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw std::invalid_argument("correlation must lie in [-1, 1]");
  }
}

void require_interior_rho(double rho, const char* what) {
  require_rho(rho);
  if (rho == -1.0 || rho == 1.0) {
    throw AtomicLawError(std::string(what) + " has no density at rho = +-1");
  }
}

// Image of the start point in the upper half-plane after the linear map,
// the rotation by arcsin(rho) and the power map z -> z^p.
struct HalfPlanePoint {
  double x = 0.0;
  double y = 0.0;
};

HalfPlanePoint half_plane_image(const ExitLawParams& params, double u, double v) {
  const double s = params.scale;
  const double w = (v - params.rho * u) / s;
  const double radius_sq = u * u + w * w;
  const double angle = std::atan2(w, u) + params.phi;  // in [0, theta]
  const double modulus = std::pow(radius_sq, 0.5 * params.p);
  return {modulus * std::cos(params.p * angle), modulus * std::sin(params.p * angle)};
}

double density_from_image(const ExitLawParams& params, HalfPlanePoint z, Axis axis,
                          double r) {
  const double s = params.scale;
  const double p = params.p;
  const double x = std::pow(r / s, p);
  const double shift = axis == Axis::kU ? x - z.x : x + z.x;
  const double jacobian = p * std::pow(r, p - 1.0) / std::pow(s, p);
  return z.y * jacobian / (kPi * (z.y * z.y + shift * shift));
}

void require_start(double u, double v) {
  if (!(u >= 0.0 && v >= 0.0) || !std::isfinite(u) || !std::isfinite(v)) {
    throw std::invalid_argument("exit law start must be a finite point of the closed quadrant");
  }
}

}  // namespace

BoundaryPoint BoundaryPoint::make(Axis axis, double magnitude) {
  if (!(magnitude >= 0.0)) throw std::invalid_argument("boundary magnitude must be >= 0");
  return {magnitude == 0.0 ? Axis::kU : axis, magnitude};
}

BoundaryPoint BoundaryPoint::from_pair(double u, double v) {
  if (u != 0.0 && v != 0.0) throw std::invalid_argument("pair is not on E");
  return v > 0.0 ? make(Axis::kV, v) : make(Axis::kU, u);
}

ExitLawParams ExitLawParams::make(double rho) {
  require_rho(rho);
  ExitLawParams params;
  params.rho = rho;
  params.phi = std::asin(rho);
  params.theta = 0.5 * kPi + params.phi;
  params.p = critical_exponent(rho);
  params.scale = std::sqrt(1.0 - rho * rho);
  return params;
}

double critical_exponent(double rho) {
  require_rho(rho);
  if (rho == -1.0) return std::numeric_limits<double>::infinity();
  // arctan(rho / sqrt(1 - rho^2)) == arcsin(rho) on (-1, 1].
  return kPi / (0.5 * kPi + std::asin(rho));
}

double exit_density(const ExitLawParams& params, double u, double v, BoundaryPoint pt) {
  require_interior_rho(params.rho, "exit law");
  require_start(u, v);
  if (u == 0.0 || v == 0.0) throw AtomicLawError("start lies on E: exit law is a point mass");
  if (!(pt.magnitude > 0.0)) throw std::invalid_argument("density needs magnitude > 0");
  return density_from_image(params, half_plane_image(params, u, v), pt.axis, pt.magnitude);
}

double exit_axis_mass(const ExitLawParams& params, double u, double v, Axis axis) {
  require_interior_rho(params.rho, "exit law");
  require_start(u, v);
  if (u == 0.0 || v == 0.0) throw AtomicLawError("start lies on E: exit law is a point mass");
  const HalfPlanePoint z = half_plane_image(params, u, v);
  const double s = params.scale;
  const double p = params.p;
  // Integrate in x = (r/s)^p, where the integrand is smooth and has a single
  // bump at |z.x| of width z.y.
  auto integrand = [&](double x) {
    if (x <= 0.0) return 0.0;
    const double r = s * std::pow(x, 1.0 / p);
    const double dr_dx = r / (p * x);
    return density_from_image(params, z, axis, r) * dr_dx;
  };
  const double centre = std::max(axis == Axis::kU ? z.x : -z.x, 0.0);
  const double width = std::max(z.y, 1e-300);
  const double inner = centre + 20.0 * width + 1.0;
  double total = 0.0;
  if (centre > 0.0) total += quad::integrate(integrand, 0.0, centre);
  total += quad::integrate(integrand, centre, inner);
  total += quad::integrate_tail(integrand, inner);
  return total;
}

std::vector<double> exit_axis_cdf(const ExitLawParams& params, double u, double v,
                                  Axis axis, std::span<const double> sorted_magnitudes) {
  require_interior_rho(params.rho, "exit law");
  require_start(u, v);
  if (u == 0.0 || v == 0.0) throw AtomicLawError("start lies on E: exit law is a point mass");
  const HalfPlanePoint z = half_plane_image(params, u, v);
  const double s = params.scale;
  const double p = params.p;
  auto integrand = [&](double x) {
    if (x <= 0.0) return 0.0;
    const double r = s * std::pow(x, 1.0 / p);
    return density_from_image(params, z, axis, r) * r / (p * x);
  };
  const double centre = std::max(axis == Axis::kU ? z.x : -z.x, 0.0);
  const double inner = centre + 20.0 * std::max(z.y, 1e-300) + 1.0;
  auto segment = [&](double a, double b) {
    // Short gaps get the plain 15-point rule; refining them only chases round-off.
    if (b - a < 1e-2 * z.y) {
      return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, a, b, 0);
    }
    if (b <= inner) return quad::integrate(integrand, a, b, 1e-12);
    // Beyond the bump the integrand decays like 1/x^2; integrate in t = 1/x.
    const double mid = std::max(a, inner);
    double part = a < mid ? quad::integrate(integrand, a, mid, 1e-12) : 0.0;
    part += quad::integrate_singular(
        [&](double t) { return t > 0.0 ? integrand(1.0 / t) / (t * t) : 0.0; }, 1.0 / b,
        1.0 / mid, 1e-12);
    return part;
  };
  std::vector<double> out(sorted_magnitudes.size());
  double acc = 0.0;
  double prev_x = 0.0;
  for (std::size_t i = 0; i < sorted_magnitudes.size(); ++i) {
    const double r = sorted_magnitudes[i];
    if (r < 0.0 || (i > 0 && r < sorted_magnitudes[i - 1])) {
      throw std::invalid_argument("exit_axis_cdf: magnitudes must be sorted and >= 0");
    }
    const double x = std::pow(r / s, p);
    if (x > prev_x) {
      acc += segment(prev_x, x);
      prev_x = x;
    }
    out[i] = acc;
  }
  return out;
}

BoundaryPoint sample_exit(const ExitLawParams& params, double u, double v, Rng& rng) {
  require_start(u, v);
  if (u == 0.0 || v == 0.0) return BoundaryPoint::from_pair(u, v);
  if (params.rho == 1.0) return {};  // the pair moves on the diagonal to (0,0)
  if (params.rho == -1.0) {
    // u + v is conserved: two-atom law.
    const double total = u + v;
    return uniform_open(rng) * total < u ? BoundaryPoint::make(Axis::kU, total)
                                         : BoundaryPoint::make(Axis::kV, total);
  }
  const HalfPlanePoint z = half_plane_image(params, u, v);
  const double cauchy = z.x + z.y * std::tan(kPi * (uniform_open(rng) - 0.5));
  // Positive reals are the image of {v = 0}, negative reals of {u = 0}.
  const double magnitude = params.scale * std::pow(std::abs(cauchy), 1.0 / params.p);
  return BoundaryPoint::make(cauchy >= 0.0 ? Axis::kU : Axis::kV, magnitude);
}

double nu_scaled_density(double rho, double a, BoundaryPoint pt) {
  require_interior_rho(rho, "jump measure");
  if (!(a > 0.0)) throw std::invalid_argument("scale a must be > 0");
  if (!(pt.magnitude > 0.0)) throw std::invalid_argument("density needs magnitude > 0");
  const double p = critical_exponent(rho);
  const double s = std::sqrt(1.0 - rho * rho);
  const double y = pt.magnitude;
  const double yp = std::pow(y, p);
  const double ap = std::pow(a, p);
  if (pt.axis == Axis::kU && y == a) {
    throw std::domain_error("jump measure density is infinite at its pole");
  }
  const double denom = pt.axis == Axis::kU ? yp - ap : yp + ap;
  return p * p * std::pow(a, p - 1.0) * s * std::pow(y, p - 1.0) / (kPi * denom * denom);
}

double nu_density(double rho, BoundaryPoint pt) { return nu_scaled_density(rho, 1.0, pt); }

}  // namespace symbranch
