#pragma once

#include <functional>

namespace symbranch::quad {

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (61 points) on a finite interval.
double integrate(const Integrand& f, double a, double b, double tolerance = 1e-13);

/// Double-exponential quadrature on a finite interval; tolerates integrable
/// endpoint singularities.
double integrate_singular(const Integrand& f, double a, double b,
                          double tolerance = 1e-13);

/// Integral over [a, infinity) via t = 1/x on [0, 1/a] for a > 0, which turns
/// algebraic tails into endpoint behaviour handled by integrate_singular.
double integrate_tail(const Integrand& f, double a, double tolerance = 1e-13);

/// Integral over [0, infinity), split at `split` > 0.
double integrate_half_line(const Integrand& f, double split, double tolerance = 1e-13);

}  // namespace symbranch::quad
