#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "cpbart/predict.hpp"
#include "cpbart/sampler.hpp"

namespace cpbart {

inline constexpr double kDensityFloor = 1e-300;

struct ScoreReport {
  double rmse = 0.0;
  double log_score = 0.0;
  int floored = 0;  // densities raised to kDensityFloor
  std::map<double, double> qrmse;
  std::map<double, double> coverage;
  std::map<double, double> pinball;
  double crps = 0.0;
  int n_test = 0;
};

/// Throws std::invalid_argument on empty input or length mismatch.
double rmse(std::span<const double> predictions, std::span<const double> truths);

struct LogScore {
  double value;
  int floored;
};
/// Negative mean log density (lower is better).
LogScore mean_log_score(std::span<const double> densities);

double qrmse(std::span<const double> pred_quantiles, std::span<const double> true_quantiles);

/// (1{y < q} - alpha)(q - y).
double pinball(double y, double q_hat, double alpha);
double mean_pinball(std::span<const double> y, std::span<const double> q_hat, double alpha);

/// 2 x trapezoid integral over `levels` of pinball(y, quantile(alpha), alpha).
double crps_from_quantiles(double y, std::span<const double> quantiles,
                           std::span<const double> levels);

/// 0.01, 0.02, ..., 0.99.
std::vector<double> default_crps_levels(int count = 99);

double quantile_coverage(std::span<const std::pair<double, double>> intervals,
                         std::span<const double> true_quantiles);

struct EvalConfig {
  PredictMode mean_mode = PredictMode::Plugin;
  PredictMode density_mode = PredictMode::Full;
  PredictMode quantile_mode = PredictMode::Full;
  PredictMode crps_mode = PredictMode::Plugin;
  std::vector<double> levels{0.25, 0.5, 0.75};
  double interval_level = 0.95;
  bool intervals = true;
  int crps_levels = 99;
};

/// Per-observation predictive summaries.
struct ObservationScore {
  double y = 0.0;
  double mean = 0.0;
  double density = 0.0;
  double crps = 0.0;
  std::vector<double> quantiles;                        // at EvalConfig::levels
  std::vector<std::pair<double, double>> intervals;     // same order, if requested
};

/// X rows must be standardized with fit.scaling.
std::vector<ObservationScore> score_observations(const FitResult& fit, const Matrix& X,
                                                 std::span<const double> y,
                                                 const EvalConfig& cfg, int threads = 0);

/// Oracle quantiles: values[l][i] is the true levels[l]-quantile at observation i.
struct QuantileTruth {
  std::vector<double> levels;
  std::vector<std::vector<double>> values;
};

/// Pools the observations; QRMSE and coverage only for levels present in `truth`.
ScoreReport summarize_scores(std::span<const ObservationScore> obs,
                             std::span<const double> levels, const QuantileTruth* truth);

/// Disjoint folds of 0..n-1 from a seeded permutation; sizes differ by at most one.
std::vector<std::vector<int>> cv_folds(int n, int k, std::uint64_t seed);

struct CVResult {
  ScoreReport report;
  std::vector<std::vector<int>> folds;
  std::vector<ObservationScore> observations;  // indexed by original row
};

/// k-fold cross-validation; every fold refits scaling, marginal and sampler from the
/// raw training rows. Throws DataError when n < k.
CVResult cross_validate(const RawData& data, int k, Method method, const SamplerConfig& cfg,
                        std::uint64_t seed, const EvalConfig& eval = {}, int threads = 0);

}  // namespace cpbart
