#include "symbranch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace symbranch {

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double delta = other.mean_ - mean_;
  const double total = na + nb;
  mean_ += delta * nb / total;
  m2_ += other.m2_ + delta * delta * na * nb / total;
  n_ += other.n_;
}

double RunningStats::variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::standard_error() const {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

MeanSe mean_se(std::span<const double> samples) {
  RunningStats s;
  for (double x : samples) s.add(x);
  return {s.mean(), s.standard_error(), s.count()};
}

ComplexMeanSe mean_se(std::span<const std::complex<double>> samples) {
  RunningStats re, im;
  for (const auto& z : samples) {
    re.add(z.real());
    im.add(z.imag());
  }
  return {{re.mean(), im.mean()}, re.standard_error(), im.standard_error(), re.count()};
}

MeanSe pooled_mean_se(std::span<const RunningStats> streams) {
  RunningStats all;
  for (const auto& s : streams) all.merge(s);
  return {all.mean(), all.standard_error(), all.count()};
}

double ks_statistic_sorted(std::span<const double> sorted,
                           std::span<const double> cdf_at_sorted) {
  if (sorted.size() != cdf_at_sorted.size()) {
    throw std::invalid_argument("ks_statistic_sorted: size mismatch");
  }
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf_at_sorted[i];
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f,
                  f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_statistic_partial(std::span<const double> sorted, std::size_t total,
                            std::span<const double> cdf_at_sorted, double mass) {
  if (sorted.size() != cdf_at_sorted.size()) {
    throw std::invalid_argument("ks_statistic_partial: size mismatch");
  }
  if (total == 0 || sorted.size() > total) {
    throw std::invalid_argument("ks_statistic_partial: bad total");
  }
  const double n = static_cast<double>(total);
  double d = std::abs(static_cast<double>(sorted.size()) / n - mass);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf_at_sorted[i];
    d = std::max({d, std::abs((static_cast<double>(i) + 1.0) / n - f),
                  std::abs(f - static_cast<double>(i) / n)});
  }
  return d;
}

double ks_statistic(std::span<const double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> f(sorted.size());
  std::transform(sorted.begin(), sorted.end(), f.begin(), cdf);
  return ks_statistic_sorted(sorted, f);
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(double statistic, double n_eff) {
  const double root = std::sqrt(n_eff);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * statistic);
}

double hill_exponent(std::span<const double> samples, std::size_t k) {
  if (k == 0 || k >= samples.size()) {
    throw std::invalid_argument("hill_exponent: need 0 < k < n");
  }
  std::vector<double> x(samples.begin(), samples.end());
  const auto pivot = x.end() - static_cast<std::ptrdiff_t>(k) - 1;
  std::nth_element(x.begin(), pivot, x.end());
  const double threshold = *pivot;
  if (!(threshold > 0.0)) throw std::invalid_argument("hill_exponent: nonpositive threshold");
  double acc = 0.0;
  for (auto it = pivot + 1; it != x.end(); ++it) acc += std::log(*it / threshold);
  return static_cast<double>(k) / acc;
}

std::size_t default_hill_k(std::size_t n) {
  if (n < 2) throw std::invalid_argument("default_hill_k: need at least two samples");
  return std::min(std::max<std::size_t>(1000, n / 100), n - 1);
}

double quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(samples.begin(), samples.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

double z_gap(const MeanSe& a, const MeanSe& b) {
  const double se = std::hypot(a.se, b.se);
  const double gap = std::abs(a.mean - b.mean);
  if (se == 0.0) return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return gap / se;
}

}  // namespace symbranch
