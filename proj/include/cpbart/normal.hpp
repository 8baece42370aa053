#pragma once

#include <cmath>

namespace cpbart {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

/// Standard normal density.
double std_normal_pdf(double z);

inline double std_normal_log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

/// Standard normal distribution function, accurate in both tails.
double std_normal_cdf(double z);

/// Inverse of std_normal_cdf. Throws std::invalid_argument unless 0 < u < 1.
double std_normal_quantile(double u);

/// log density of N(mean, var) at x.
inline double normal_log_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

}  // namespace cpbart
