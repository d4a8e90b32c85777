#include <cmath>
#include <stdexcept>

#include "symbranch/exitlaw.hpp"

namespace symbranch {

BrownianExit simulate_brownian_exit(double rho, double u, double v, Rng& rng,
                                    const BrownianExitOptions& options) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [-1, 1]");
  if (!(u >= 0.0 && v >= 0.0)) throw std::invalid_argument("start must be in the quadrant");
  BrownianExit out;
  if (u == 0.0 || v == 0.0) {
    out.point = BoundaryPoint::from_pair(u, v);
    out.exited = true;
    return out;
  }
  const double s = std::sqrt(1.0 - rho * rho);
  while (out.tau < options.max_time) {
    // u and v are the distances to the two boundary lines in the frame where
    // the motion is isotropic, so min(u, v) bounds the distance to E.
    const double dist = std::min(u, v);
    const double dt = std::max(options.dt_min, options.bulk_factor * dist * dist);
    const double root = std::sqrt(dt);
    const double z1 = standard_normal(rng);
    const double z2 = rho * z1 + s * standard_normal(rng);
    const double du = root * z1;
    const double dv = root * z2;
    const double u1 = u + du;
    const double v1 = v + dv;
    ++out.steps;
    if (u1 <= 0.0 || v1 <= 0.0) {
      const double lu = u1 <= 0.0 ? u / (u - u1) : 2.0;
      const double lv = v1 <= 0.0 ? v / (v - v1) : 2.0;
      const double frac = std::min(lu, lv);
      out.tau += frac * dt;
      out.point = lu <= lv ? BoundaryPoint::make(Axis::kV, v + frac * dv)
                           : BoundaryPoint::make(Axis::kU, u + frac * du);
      out.exited = true;
      return out;
    }
    // Each coordinate has unit diffusivity; bridge crossing probability of a
    // line at distances a, b over time dt is exp(-2ab/dt).
    const double pu = std::exp(-2.0 * u * u1 / dt);
    const double pv = std::exp(-2.0 * v * v1 / dt);
    const double p_cross = 1.0 - (1.0 - pu) * (1.0 - pv);
    if (p_cross > 1e-300 && uniform_open(rng) < p_cross) {
      out.tau += 0.5 * dt;
      out.point = uniform_open(rng) * (pu + pv) < pu
                      ? BoundaryPoint::make(Axis::kV, 0.5 * (v + v1))
                      : BoundaryPoint::make(Axis::kU, 0.5 * (u + u1));
      out.exited = true;
      return out;
    }
    u = u1;
    v = v1;
    out.tau += dt;
  }
  out.point = BoundaryPoint::make(u >= v ? Axis::kU : Axis::kV, std::max(u, v));
  return out;
}

}  // namespace symbranch
