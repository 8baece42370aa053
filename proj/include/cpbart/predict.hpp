#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cpbart/sampler.hpp"

namespace cpbart {

/// plugin evaluates the predictive law once at posterior means (s from the mean of c,
/// mean f(x)); full averages the per-draw laws.
enum class PredictMode { Plugin, Full };

struct PredictionConfig {
  PredictMode mode = PredictMode::Plugin;
  std::vector<double> y_grid;  // empty: default_density_grid
  int u_grid_size = 801;
  double u_bound = 8.0;
  std::vector<double> quantile_levels{0.25, 0.5, 0.75};
  void validate() const;
};

inline constexpr int kMinIntervalDraws = 40;

/// Interpolated empirical quantile (linear between order statistics) of `values`,
/// which is reordered in place.
double empirical_quantile(std::vector<double>& values, double p);

/// Predictive law at one standardized point, with per-draw regression values cached.
class PointPredictor {
 public:
  /// x must already be standardized with fit.scaling. Throws std::invalid_argument
  /// when the fit holds no draws.
  PointPredictor(const FitResult& fit, std::span<const double> x);

  std::vector<double> density(std::span<const double> y_grid, PredictMode mode) const;
  /// Density of every draw on the grid: result[k][g].
  std::vector<std::vector<double>> draw_densities(std::span<const double> y_grid) const;
  double mean(PredictMode mode, int u_grid_size = 801, double u_bound = 8.0) const;
  double quantile(double alpha, PredictMode mode) const;
  std::vector<double> draw_quantiles(double alpha) const;

  std::span<const double> draw_f() const { return f_; }
  double mean_f() const { return f_bar_; }
  double plugin_s() const { return s_bar_; }

 private:
  // Per-law primitives; `f`, `s`, `sigma` are on the internal scale.
  double law_log_density(double y, double z, double log_py, double f, double s,
                         double sigma) const;
  double law_mean(double f, double s, double sigma, int u_grid_size, double u_bound) const;
  double law_quantile(double alpha, double f, double s, double sigma) const;

  const FitResult& fit_;
  std::vector<double> f_;
  double f_bar_ = 0.0;
  double s_bar_ = 1.0;
  double sigma_bar_ = 1.0;
};

std::vector<double> predictive_density(const FitResult& fit, std::span<const double> x,
                                       std::span<const double> y_grid, PredictMode mode);
double predictive_mean(const FitResult& fit, std::span<const double> x, PredictMode mode,
                       int u_grid_size = 801, double u_bound = 8.0);
/// Throws std::invalid_argument("quantile level out of range") unless 0 < alpha < 1.
double predictive_quantile(const FitResult& fit, std::span<const double> x, double alpha,
                           PredictMode mode);

/// Central `level` interval of the per-draw alpha-quantiles. Needs kMinIntervalDraws draws.
std::pair<double, double> quantile_posterior_interval(const FitResult& fit,
                                                      std::span<const double> x, double alpha,
                                                      double level = 0.95);

struct DensityBand {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Pointwise central `level` band of the per-draw densities.
DensityBand density_posterior_band(const FitResult& fit, std::span<const double> x,
                                   std::span<const double> y_grid, double level = 0.90);

/// `points` equally spaced values over [min y - 3h, max y + 3h] of the training
/// marginal (baseline fits: the training range widened by 10%).
std::vector<double> default_density_grid(const FitResult& fit, int points = 512);

}  // namespace cpbart
