#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "symbranch/rng.hpp"
#include "symbranch/stats.hpp"

using namespace symbranch;

TEST_CASE("KS statistic on hand-computed samples") {
  const auto uniform = [](double x) { return x; };
  const std::vector<double> even{0.9, 0.1, 0.5, 0.3, 0.7};
  CHECK(ks_statistic(even, uniform) == doctest::Approx(0.1).epsilon(1e-14));
  const std::vector<double> skewed{0.05, 0.1, 0.15, 0.2, 0.95};
  CHECK(ks_statistic(skewed, uniform) == doctest::Approx(0.6).epsilon(1e-14));
  const std::vector<double> sorted{0.05, 0.1, 0.15, 0.2, 0.95};
  CHECK(ks_statistic_sorted(sorted, sorted) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("partial KS includes the gap at infinity") {
  const std::vector<double> sorted{1.0, 2.0};
  const std::vector<double> cdf{0.2, 0.4};
  CHECK(ks_statistic_partial(sorted, 4, cdf, 0.5) == doctest::Approx(0.2));
  const std::vector<double> tight{0.25, 0.5};
  CHECK(ks_statistic_partial(sorted, 4, tight, 0.9) == doctest::Approx(0.4));
}

TEST_CASE("two-sample KS on hand-computed samples") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{2.5, 3.5, 4.5};
  CHECK(ks_two_sample(a, b) == doctest::Approx(2.0 / 3.0));
  CHECK(ks_two_sample(a, a) == 0.0);
}

TEST_CASE("Kolmogorov distribution at its 5% point") {
  CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(ks_p_value(0.0, 100) == 1.0);
}

TEST_CASE("uniform samples give a KS statistic of order 1/sqrt(n)") {
  Rng rng = make_stream(3, StreamTag::kHarness, 0);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = uniform_open(rng);
  const double d = ks_statistic(xs, [](double x) { return x; });
  CHECK(d < 1.63 / std::sqrt(100000.0));
  CHECK(ks_p_value(d, 100000.0) > 0.01);
}

TEST_CASE("Hill estimator recovers a Pareto index") {
  Rng rng = make_stream(5, StreamTag::kHarness, 1);
  const double alpha = 2.5;
  std::vector<double> xs(1000000);
  for (auto& x : xs) x = std::pow(uniform_open(rng), -1.0 / alpha);
  CHECK(hill_exponent(xs, default_hill_k(xs.size())) == doctest::Approx(alpha).epsilon(0.05));
  CHECK(default_hill_k(50) == 49);
  CHECK(default_hill_k(1000000) == 10000);
}

TEST_CASE("quantile interpolates linearly") {
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
}

TEST_CASE("mean and standard error") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto m = mean_se(xs);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  const std::vector<std::complex<double>> zs{{1, 0}, {3, 2}};
  const auto c = mean_se(zs);
  CHECK(c.mean.real() == doctest::Approx(2.0));
  CHECK(c.mean.imag() == doctest::Approx(1.0));
  CHECK(c.se_real == doctest::Approx(1.0));
  CHECK(c.se_imag == doctest::Approx(1.0));
}

TEST_CASE("pooled streams equal the concatenated sample") {
  Rng rng = make_stream(9, StreamTag::kHarness, 2);
  std::vector<double> all;
  std::vector<RunningStats> streams(7);
  for (std::size_t s = 0; s < streams.size(); ++s) {
    for (std::size_t i = 0; i < 100 + 13 * s; ++i) {
      const double x = standard_normal(rng) * 3.0 + 1.0;
      streams[s].add(x);
      all.push_back(x);
    }
  }
  const auto pooled = pooled_mean_se(streams);
  const auto direct = mean_se(all);
  CHECK(pooled.count == all.size());
  CHECK(pooled.mean == doctest::Approx(direct.mean).epsilon(1e-12));
  CHECK(pooled.se == doctest::Approx(direct.se).epsilon(1e-12));
}

TEST_CASE("z gap") {
  CHECK(z_gap({1.0, 0.3, 10}, {2.0, 0.4, 10}) == doctest::Approx(2.0));
  CHECK(z_gap({1.0, 0.0, 10}, {1.0, 0.0, 10}) == 0.0);
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a = make_stream(42, StreamTag::kSbmFinite, 3);
  Rng b = make_stream(42, StreamTag::kSbmFinite, 3);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  Rng c = make_stream(42, StreamTag::kSbmFinite, 3, 1);
  Rng d = make_stream(42, StreamTag::kTrotter, 3);
  Rng e = make_stream(42, StreamTag::kSbmFinite, 3);
  const auto x = e();
  CHECK(c() != x);
  CHECK(d() != x);
}

TEST_CASE("paired draws from neighbouring streams are uncorrelated") {
  const std::size_t n = 100000;
  const double bound = 3.0 / std::sqrt(static_cast<double>(n));
  auto correlation = [&](Rng a, Rng b) {
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = uniform_open(a);
      const double y = uniform_open(b);
      sa += x;
      sb += y;
      sab += x * y;
      saa += x * x;
      sbb += y * y;
    }
    const double m = static_cast<double>(n);
    const double cov = sab / m - sa / m * sb / m;
    return cov / std::sqrt((saa / m - sa * sa / m / m) * (sbb / m - sb * sb / m / m));
  };
  CHECK(std::abs(correlation(make_stream(1, StreamTag::kTrotter, 0),
                             make_stream(1, StreamTag::kTrotter, 1))) < bound);
  CHECK(std::abs(correlation(make_stream(1, StreamTag::kTrotter, 0),
                             make_stream(1, StreamTag::kPdmp, 0))) < bound);
  CHECK(std::abs(correlation(make_stream(1, StreamTag::kTrotter, 0),
                             make_stream(2, StreamTag::kTrotter, 0))) < bound);
  CHECK(std::abs(correlation(make_stream(1, StreamTag::kTrotter, 0),
                             make_stream(1, StreamTag::kTrotter, 0, 1))) < bound);
}
