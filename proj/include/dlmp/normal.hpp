#pragma once

namespace dlmp {

/// Standard normal cumulative distribution function.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Inverse of the standard normal CDF for p in (0,1). Rational
/// approximation refined by one Halley step.
double normal_quantile(double p);

/// (1-eps)-quantile of the standard normal distribution, eps in (0, 0.5).
/// Absolute error well below 1e-9 over the admissible range.
/// Throws std::invalid_argument outside (0, 0.5).
double gaussian_quantile(double eps);

} // namespace dlmp
