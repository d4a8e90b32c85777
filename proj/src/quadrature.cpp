#include "symbranch/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace symbranch::quad {

double integrate(const Integrand& f, double a, double b, double tolerance) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15,
                                                                        tolerance);
}

double integrate_singular(const Integrand& f, double a, double b, double tolerance) {
  if (a == b) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  return integrator.integrate(f, a, b, tolerance);
}

double integrate_tail(const Integrand& f, double a, double tolerance) {
  if (!(a > 0.0)) throw std::invalid_argument("integrate_tail: need a > 0");
  auto g = [&f](double t) {
    if (t <= 0.0) return 0.0;
    const double v = f(1.0 / t) / (t * t);
    // Evaluations pinned against t = 0 can overflow in both factors.
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate_singular(g, 0.0, 1.0 / a, tolerance);
}

double integrate_half_line(const Integrand& f, double split, double tolerance) {
  return integrate_singular(f, 0.0, split, tolerance) + integrate_tail(f, split, tolerance);
}

}  // namespace symbranch::quad
