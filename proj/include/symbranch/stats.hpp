#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace symbranch {

/// Welford accumulator; merge() is Chan's parallel update.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased; 0 for fewer than two samples
  double standard_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

struct ComplexMeanSe {
  std::complex<double> mean;
  double se_real = 0.0;
  double se_imag = 0.0;
  std::size_t count = 0;
};

MeanSe mean_se(std::span<const double> samples);
ComplexMeanSe mean_se(std::span<const std::complex<double>> samples);

/// Pools independent streams into one mean with its standard error. The
/// merge runs in stream order so the result does not depend on scheduling.
MeanSe pooled_mean_se(std::span<const RunningStats> streams);

/// One-sample two-sided Kolmogorov-Smirnov statistic sup |F_n - F|.
double ks_statistic(std::span<const double> samples,
                    const std::function<double(double)>& cdf);

/// Same statistic when the model CDF is already evaluated at the sorted samples.
double ks_statistic_sorted(std::span<const double> sorted,
                           std::span<const double> cdf_at_sorted);

/// KS distance for one component of a sub-probability law. `sorted` holds the
/// samples that landed in the component, `total` is the overall sample size,
/// `cdf_at_sorted` the model sub-distribution function there and `mass` its
/// total mass (the supremum also covers the point at infinity).
double ks_statistic_partial(std::span<const double> sorted, std::size_t total,
                            std::span<const double> cdf_at_sorted, double mass);

/// Two-sample statistic sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
double kolmogorov_survival(double lambda);

/// p-value of a KS statistic with effective sample size n_eff (Stephens' correction).
double ks_p_value(double statistic, double n_eff);

/// Hill estimator of the tail index from the k largest order statistics.
double hill_exponent(std::span<const double> samples, std::size_t k);

/// k = max(1000, 1% of n), capped at n - 1.
std::size_t default_hill_k(std::size_t n);

/// Empirical quantile with linear interpolation, q in [0,1].
double quantile(std::vector<double> samples, double q);

/// |a - b| / sqrt(se_a^2 + se_b^2); 0 when both SEs vanish and a == b.
double z_gap(const MeanSe& a, const MeanSe& b);

}  // namespace symbranch
