#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace liftcut::stats {

double mean(std::span<const double> xs);
/// Unbiased sample variance (n - 1 denominator); 0 for fewer than 2 samples.
double variance(std::span<const double> xs);
double lag1_autocorrelation(std::span<const double> xs);

/// Inverse of the standard normal CDF.
double normal_quantile(double p);
/// Inverse of the standard normal upper tail: returns z with P(N > z) = p.
double normal_upper_quantile(double p);
double student_t_quantile(double p, double dof);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r_squared = 0.0;
  /// Half-width of the two-sided 95% confidence interval on the slope.
  double slope_ci95 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace liftcut::stats
