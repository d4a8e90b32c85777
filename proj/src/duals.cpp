#include "symbranch/duals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symbranch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Picks a neighbour of `site` with probability proportional to its rate.
std::size_t jump_target(const SiteGraph& g, std::size_t site, Rng& rng) {
  const auto nbrs = g.neighbors(site);
  double pick = uniform_open(rng) * g.total_rate(site);
  for (const Neighbor& n : nbrs) {
    pick -= n.rate;
    if (pick < 0.0) return n.site;
  }
  return nbrs.back().site;
}

// Picks an index with probability proportional to the rate of its site.
std::size_t pick_walker(const SiteGraph& g, std::span<const std::size_t> positions,
                        double total, Rng& rng) {
  double pick = uniform_open(rng) * total;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    pick -= g.total_rate(positions[i]);
    if (pick < 0.0) return i;
  }
  return positions.size() - 1;
}

double total_walk_rate(const SiteGraph& g, std::span<const std::size_t> positions) {
  double r = 0.0;
  for (std::size_t p : positions) r += g.total_rate(p);
  return r;
}

void check_sites(const SiteGraph& g, std::span<const std::size_t> sites) {
  for (std::size_t s : sites) {
    if (s >= g.size()) throw std::invalid_argument("site index out of range");
  }
}

}  // namespace

std::size_t ColoredParticleSystem::pair_index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle without the diagonal.
  const std::size_t n = positions.size();
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

ColoredParticleSystem run_colored_particles(const SiteGraph& g, const MomentDualConfig& cfg,
                                            std::span<const std::size_t> u_sites,
                                            std::span<const std::size_t> v_sites, Rng& rng) {
  check_sites(g, u_sites);
  check_sites(g, v_sites);
  ColoredParticleSystem sys;
  sys.positions.assign(u_sites.begin(), u_sites.end());
  sys.positions.insert(sys.positions.end(), v_sites.begin(), v_sites.end());
  sys.colors.assign(u_sites.size(), 1);
  sys.colors.insert(sys.colors.end(), v_sites.size(), 2);
  const std::size_t n = sys.positions.size();
  const std::size_t pairs = n * (n > 0 ? n - 1 : 0) / 2;
  auto draw_threshold = [&]() { return cfg.gamma > 0.0 ? exponential(rng, cfg.gamma) : kInf; };
  sys.accumulators.assign(pairs, 0.0);
  sys.thresholds.resize(pairs);
  for (double& th : sys.thresholds) th = draw_threshold();

  double time = 0.0;
  while (time < cfg.t) {
    const double rate = total_walk_rate(g, sys.positions);
    const double next_move = rate > 0.0 ? exponential(rng, rate) : kInf;
    double next_flip = kInf;
    std::size_t flip_i = 0;
    std::size_t flip_j = 0;
    if (cfg.colors) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (sys.positions[i] != sys.positions[j] || sys.colors[i] != sys.colors[j]) continue;
          const std::size_t p = sys.pair_index(i, j);
          const double left = sys.thresholds[p] - sys.accumulators[p];
          if (left < next_flip) {
            next_flip = left;
            flip_i = i;
            flip_j = j;
          }
        }
      }
    }
    const double remaining = cfg.t - time;
    const double dt = std::min({next_move, next_flip, remaining});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (sys.positions[i] != sys.positions[j]) continue;
        if (sys.colors[i] == sys.colors[j]) {
          sys.same_time += dt;
          sys.accumulators[sys.pair_index(i, j)] += dt;
        } else {
          sys.diff_time += dt;
        }
      }
    }
    if (dt == remaining) break;
    time += dt;
    if (next_flip <= next_move) {
      const std::size_t f = uniform_open(rng) < 0.5 ? flip_i : flip_j;
      sys.colors[f] = static_cast<std::uint8_t>(3 - sys.colors[f]);
      ++sys.flips;
      for (std::size_t other = 0; other < n; ++other) {
        if (other == f) continue;
        const std::size_t p = sys.pair_index(f, other);
        sys.accumulators[p] = 0.0;
        sys.thresholds[p] = draw_threshold();
      }
    } else {
      const std::size_t w = pick_walker(g, sys.positions, rate, rng);
      sys.positions[w] = jump_target(g, sys.positions[w], rng);
    }
  }
  return sys;
}

double moment_dual_weight(const ColoredParticleSystem& path, const PairField& initial,
                          double gamma, double rho) {
  double product = 1.0;
  for (std::size_t i = 0; i < path.positions.size(); ++i) {
    const std::size_t k = path.positions[i];
    product *= path.colors[i] == 1 ? initial.u[k] : initial.v[k];
  }
  if (product == 0.0) return 0.0;
  return product * std::exp(gamma * (path.same_time + rho * path.diff_time));
}

MomentDualResult moment_dual_estimate(const SiteGraph& g, const MomentDualConfig& cfg,
                                      const PairField& initial,
                                      std::span<const std::size_t> u_sites,
                                      std::span<const std::size_t> v_sites, Exec exec) {
  if (initial.size() != g.size()) throw std::invalid_argument("initial field size mismatch");
  if (cfg.replicas == 0) throw std::invalid_argument("replicas must be >= 1");
  if (!(cfg.t >= 0.0)) throw std::invalid_argument("t must be >= 0");
  const std::size_t n = u_sites.size() + v_sites.size();
  const double pairs = static_cast<double>(n * (n > 0 ? n - 1 : 0) / 2);
  if (!cfg.force && cfg.gamma * cfg.t * pairs > 10.0) {
    throw HeavyWeightError("gamma * t * pairs exceeds 10; exponential weights unreliable");
  }
  std::vector<double> weights(cfg.replicas);
  for_each_index(cfg.replicas, exec, [&](std::size_t i) {
    Rng rng = make_stream(cfg.seed, StreamTag::kMomentDual, i);
    const auto path = run_colored_particles(g, cfg, u_sites, v_sites, rng);
    weights[i] = moment_dual_weight(path, initial, cfg.gamma, cfg.rho);
  });
  MomentDualResult out;
  out.estimate = mean_se(weights);
  out.unstable = out.estimate.mean != 0.0 &&
                 out.estimate.se > 0.5 * std::abs(out.estimate.mean);
  return out;
}

CoalescingWalkers run_coalescing_walkers(const SiteGraph& g, std::span<const std::size_t> sites,
                                         double t, Rng& rng) {
  check_sites(g, sites);
  CoalescingWalkers w;
  for (std::size_t s : sites) {
    if (std::find(w.positions.begin(), w.positions.end(), s) == w.positions.end()) {
      w.positions.push_back(s);
    } else {
      ++w.merges;
    }
  }
  double time = 0.0;
  while (true) {
    const double rate = total_walk_rate(g, w.positions);
    if (!(rate > 0.0)) break;
    time += exponential(rng, rate);
    if (time >= t) break;
    const std::size_t i = pick_walker(g, w.positions, rate, rng);
    const std::size_t to = jump_target(g, w.positions[i], rng);
    if (std::find(w.positions.begin(), w.positions.end(), to) != w.positions.end()) {
      w.positions.erase(w.positions.begin() + static_cast<std::ptrdiff_t>(i));
      ++w.merges;
    } else {
      w.positions[i] = to;
    }
  }
  return w;
}

MeanSe coalescing_dual_estimate(const SiteGraph& g, std::span<const std::uint8_t> opinions,
                                std::span<const std::size_t> sites, double t,
                                std::size_t replicas, std::uint64_t seed, Exec exec) {
  if (opinions.size() != g.size()) throw std::invalid_argument("opinion field size mismatch");
  if (replicas == 0) throw std::invalid_argument("replicas must be >= 1");
  std::vector<double> values(replicas);
  for_each_index(replicas, exec, [&](std::size_t i) {
    Rng rng = make_stream(seed, StreamTag::kCoalescingDual, i);
    const auto w = run_coalescing_walkers(g, sites, t, rng);
    double product = 1.0;
    for (std::size_t p : w.positions) product *= opinions[p];
    values[i] = product;
  });
  return mean_se(values);
}

std::complex<double> selfdual_inner(std::span<const double> x1, std::span<const double> x2,
                                    std::span<const double> y1, std::span<const double> y2,
                                    double rho) {
  const std::size_t n = x1.size();
  if (x2.size() != n || y1.size() != n || y2.size() != n) {
    throw std::invalid_argument("self-duality fields differ in size");
  }
  const double a = std::sqrt(1.0 - rho);
  const double b = std::sqrt(1.0 + rho);
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double ys = y1[k] + y2[k];
    const double yd = y1[k] - y2[k];
    if (ys == 0.0 && yd == 0.0) continue;
    re -= a * (x1[k] + x2[k]) * ys;
    im += b * (x1[k] - x2[k]) * yd;
  }
  return {re, im};
}

std::complex<double> selfdual_functional(const PairField& x, const PairField& y, double rho) {
  return std::exp(selfdual_inner(x.u, x.v, y.u, y.v, rho));
}

SelfDualGap selfdual_check(std::span<const PairField> forward_states, const PairField& y0,
                           std::span<const PairField> backward_states, const PairField& x0,
                           double rho) {
  std::vector<std::complex<double>> fwd;
  fwd.reserve(forward_states.size());
  for (const PairField& s : forward_states) fwd.push_back(selfdual_functional(s, y0, rho));
  std::vector<std::complex<double>> bwd;
  bwd.reserve(backward_states.size());
  for (const PairField& s : backward_states) bwd.push_back(selfdual_functional(x0, s, rho));
  SelfDualGap out;
  out.forward = mean_se(fwd);
  out.backward = mean_se(bwd);
  out.gap = out.forward.mean - out.backward.mean;
  out.se_real = std::hypot(out.forward.se_real, out.backward.se_real);
  out.se_imag = std::hypot(out.forward.se_imag, out.backward.se_imag);
  return out;
}

}  // namespace symbranch
