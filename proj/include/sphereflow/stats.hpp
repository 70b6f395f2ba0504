#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sphereflow {

// Welford accumulator; merge() combines partial results from workers.
struct RunningStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  void merge(const RunningStats& o);
  double variance() const;  // unbiased
  double stderr_mean() const;
};

// z = (estimate - target) / se, with se = 0 mapped to 0 when equal, inf otherwise.
double z_score(double estimate, double target, double se);

struct TestResult {
  double statistic = 0.0;
  double p_value = 0.0;
  int dof = 0;
};

// Pearson chi-square against expected counts (same length as observed).
TestResult chi_square(std::span<const double> observed, std::span<const double> expected);

// Two-sample Kolmogorov-Smirnov with the asymptotic Q_KS tail.
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);
double kolmogorov_q(double lambda);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace sphereflow
