#include "cpbart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cpbart/errors.hpp"
#include "cpbart/parallel.hpp"

namespace cpbart {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("length mismatch");
  if (a == 0) throw std::invalid_argument("empty input");
}

}  // namespace

double rmse(std::span<const double> predictions, std::span<const double> truths) {
  check_lengths(predictions.size(), truths.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double d = predictions[i] - truths[i];
    ss += d * d;
  }
  return std::sqrt(ss / truths.size());
}

LogScore mean_log_score(std::span<const double> densities) {
  if (densities.empty()) throw std::invalid_argument("empty input");
  LogScore out{0.0, 0};
  for (double p : densities) {
    if (!(p >= kDensityFloor)) {
      p = kDensityFloor;
      ++out.floored;
    }
    out.value -= std::log(p);
  }
  out.value /= densities.size();
  return out;
}

double qrmse(std::span<const double> pred_quantiles, std::span<const double> true_quantiles) {
  return rmse(pred_quantiles, true_quantiles);
}

double pinball(double y, double q_hat, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quantile level out of range");
  return ((y < q_hat ? 1.0 : 0.0) - alpha) * (q_hat - y);
}

double mean_pinball(std::span<const double> y, std::span<const double> q_hat, double alpha) {
  check_lengths(y.size(), q_hat.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += pinball(y[i], q_hat[i], alpha);
  return acc / y.size();
}

double crps_from_quantiles(double y, std::span<const double> quantiles,
                           std::span<const double> levels) {
  check_lengths(quantiles.size(), levels.size());
  double acc = 0.0;
  double prev = pinball(y, quantiles[0], levels[0]);
  for (std::size_t l = 1; l < levels.size(); ++l) {
    if (!(levels[l] > levels[l - 1])) throw std::invalid_argument("levels must increase");
    const double cur = pinball(y, quantiles[l], levels[l]);
    acc += 0.5 * (prev + cur) * (levels[l] - levels[l - 1]);
    prev = cur;
  }
  return 2.0 * acc;
}

std::vector<double> default_crps_levels(int count) {
  if (count < 2) throw std::invalid_argument("need at least two levels");
  std::vector<double> levels(count);
  for (int l = 0; l < count; ++l) levels[l] = (l + 1.0) / (count + 1.0);
  return levels;
}

double quantile_coverage(std::span<const std::pair<double, double>> intervals,
                         std::span<const double> true_quantiles) {
  check_lengths(intervals.size(), true_quantiles.size());
  int hits = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i)
    if (intervals[i].first <= true_quantiles[i] && true_quantiles[i] <= intervals[i].second)
      ++hits;
  return static_cast<double>(hits) / intervals.size();
}

std::vector<ObservationScore> score_observations(const FitResult& fit, const Matrix& X,
                                                 std::span<const double> y,
                                                 const EvalConfig& cfg, int threads) {
  if (X.rows() != y.size()) throw std::invalid_argument("length mismatch");
  const auto crps_levels = default_crps_levels(cfg.crps_levels);
  const bool intervals =
      cfg.intervals && fit.draws.size() >= static_cast<std::size_t>(kMinIntervalDraws);
  std::vector<ObservationScore> out(y.size());
  parallel_for(
      static_cast<int>(y.size()),
      [&](int i) {
        const PointPredictor pp(fit, X.row(i));
        auto& o = out[i];
        o.y = y[i];
        o.mean = pp.mean(cfg.mean_mode);
        const double yi[] = {y[i]};
        o.density = pp.density(yi, cfg.density_mode)[0];
        for (double a : cfg.levels) {
          o.quantiles.push_back(pp.quantile(a, cfg.quantile_mode));
          if (intervals) {
            auto q = pp.draw_quantiles(a);
            const double lo = empirical_quantile(q, 0.5 * (1.0 - cfg.interval_level));
            const double hi = empirical_quantile(q, 0.5 * (1.0 + cfg.interval_level));
            o.intervals.emplace_back(lo, hi);
          }
        }
        std::vector<double> qs(crps_levels.size());
        for (std::size_t l = 0; l < crps_levels.size(); ++l)
          qs[l] = pp.quantile(crps_levels[l], cfg.crps_mode);
        o.crps = crps_from_quantiles(y[i], qs, crps_levels);
      },
      threads);
  return out;
}

ScoreReport summarize_scores(std::span<const ObservationScore> obs,
                             std::span<const double> levels, const QuantileTruth* truth) {
  if (obs.empty()) throw std::invalid_argument("empty input");
  const std::size_t n = obs.size();
  ScoreReport r;
  r.n_test = static_cast<int>(n);
  std::vector<double> ys(n), means(n), dens(n);
  double crps = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = obs[i].y;
    means[i] = obs[i].mean;
    dens[i] = obs[i].density;
    crps += obs[i].crps;
  }
  r.rmse = rmse(means, ys);
  const auto ls = mean_log_score(dens);
  r.log_score = ls.value;
  r.floored = ls.floored;
  r.crps = crps / n;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = obs[i].quantiles.at(l);
    r.pinball[levels[l]] = mean_pinball(ys, q, levels[l]);
    if (!truth) continue;
    const auto it = std::find_if(truth->levels.begin(), truth->levels.end(),
                                 [&](double a) { return std::abs(a - levels[l]) < 1e-12; });
    if (it == truth->levels.end()) continue;
    const auto& tq = truth->values[it - truth->levels.begin()];
    r.qrmse[levels[l]] = qrmse(q, tq);
    if (obs[0].intervals.size() == levels.size()) {
      std::vector<std::pair<double, double>> iv(n);
      for (std::size_t i = 0; i < n; ++i) iv[i] = obs[i].intervals[l];
      r.coverage[levels[l]] = quantile_coverage(iv, tq);
    }
  }
  return r;
}

std::vector<std::vector<int>> cv_folds(int n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least two folds");
  if (n < k) throw DataError("fewer rows (" + std::to_string(n) + ") than folds");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed, 0x6366);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> folds(k);
  for (int r = 0; r < n; ++r) folds[r % k].push_back(perm[r]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CVResult cross_validate(const RawData& data, int k, Method method, const SamplerConfig& cfg,
                        std::uint64_t seed, const EvalConfig& eval, int threads) {
  const int n = static_cast<int>(data.y.size());
  CVResult out;
  out.folds = cv_folds(n, k, seed);
  out.observations.resize(n);
  parallel_for(
      k,
      [&](int f) {
        const auto& test = out.folds[f];
        std::vector<int> train;
        train.reserve(n - test.size());
        std::size_t t = 0;
        for (int i = 0; i < n; ++i) {
          if (t < test.size() && test[t] == i) {
            ++t;
            continue;
          }
          train.push_back(i);
        }
        const Dataset train_data = make_dataset(data.subset(train));
        SamplerConfig fold_cfg = cfg;
        fold_cfg.seed = cfg.seed + 1000003ULL * static_cast<std::uint64_t>(f + 1);
        const FitResult fitted = fit(train_data, fold_cfg, method);
        const RawData test_raw = data.subset(test);
        const Matrix X = standardize_columns(fitted.scaling, test_raw.X, test_raw.covariate_names);
        const auto scores = score_observations(fitted, X, test_raw.y, eval, 1);
        for (std::size_t j = 0; j < test.size(); ++j) out.observations[test[j]] = scores[j];
      },
      threads);
  out.report = summarize_scores(out.observations, eval.levels, nullptr);
  return out;
}

}  // namespace cpbart
