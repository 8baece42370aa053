#pragma once

#include <span>
#include <vector>

namespace cpbart {

/// Gaussian-kernel density estimate of the response marginal F_Y.
///
/// Immutable after construction. The CDF is clipped to [1e-12, 1 - 1e-12] so that
/// normal scores Phi^{-1}(F_Y(y)) stay finite for any y. Kernels further than
/// 12 bandwidths away contribute at most Phi(-12) ~ 1e-33 and are summed in
/// closed form (0 or 1).
class MarginalModel {
 public:
  static constexpr double kClip = 1e-12;

  MarginalModel(std::vector<double> centers, double bandwidth);

  /// Clipped distribution function.
  double cdf(double y) const;
  /// Kernel mixture CDF without clipping.
  double raw_cdf(double y) const;
  double pdf(double y) const;
  /// y with |cdf(y) - u| < 1e-10. Throws std::invalid_argument unless 0 < u < 1.
  double quantile(double u) const;

  /// F_Y^{-1}(Phi(z)) through a cubic Hermite table on the normal-score scale.
  /// Arguments outside the clip range are clamped to its ends.
  double quantile_of_normal_score(double z) const;

  std::span<const double> centers() const { return centers_; }
  double bandwidth() const { return bandwidth_; }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }

 private:
  void cdf_pdf(double y, double& cdf, double& pdf) const;
  double solve_quantile(double u, double lo, double hi, double guess) const;
  void build_tables();

  std::vector<double> centers_;  // sorted
  double bandwidth_;
  double support_lo_;
  double support_hi_;

  // Bracketing table over [support_lo, support_hi].
  std::vector<double> grid_y_;
  std::vector<double> grid_cdf_;

  // Normal-score transport table: z -> y = F^{-1}(Phi(z)) with exact slopes dy/dz.
  double score_lo_ = 0.0;
  double score_step_ = 0.0;
  std::vector<double> score_y_;
  std::vector<double> score_dy_;
};

/// Silverman-bandwidth KDE of the sample. Throws DataError("degenerate marginal
/// sample") when n < 2 or all values are identical.
MarginalModel fit_kde(std::span<const double> y);

}  // namespace cpbart
