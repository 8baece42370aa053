#include "cpbart/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cpbart/copula.hpp"
#include "cpbart/errors.hpp"
#include "cpbart/hmc.hpp"

namespace cpbart {

namespace {

constexpr double kBaselineK = 2.0;
constexpr double kBaselineSigmaNu = 3.0;

void check_data(const Dataset& data) {
  if (data.n() < kMinTrainingRows)
    throw DataError("need at least " + std::to_string(kMinTrainingRows) + " rows, got " +
                    std::to_string(data.n()));
  if (data.X.rows() != data.y.size()) throw DataError("covariate and response lengths differ");
  for (double v : data.y)
    if (!std::isfinite(v)) throw DataError("non-finite response value");
}

// Backfitting state of a sum of trees over fixed covariates.
class Backfit {
 public:
  Backfit(const Matrix& X, int m) : X_(X), n_(static_cast<int>(X.rows())), fit_(n_, 0.0) {
    ens_.trees.assign(m, Tree());
    ens_.leaf_values.assign(m, std::vector<double>{0.0});
    assign_.assign(m, std::vector<int>(n_, 0));
  }

  // One pass over the trees against `target`. Leaf variance is c on the scale of
  // target / noise_sd; values are stored on the target's scale.
  void sweep(std::span<const double> target, double c, double noise_sd,
             const SamplerConfig& cfg, Rng& rng) {
    std::vector<double> resid(n_);
    for (int j = 0; j < ens_.size(); ++j) {
      const auto& old_vals = ens_.leaf_values[j];
      const auto& old_assign = assign_[j];
      for (int i = 0; i < n_; ++i)
        resid[i] = (target[i] - fit_[i] + old_vals[old_assign[i]]) / noise_sd;
      auto step = mh_tree_step(ens_.trees[j], old_assign, resid, c, X_, cfg, rng);
      ++proposals_;
      if (step.accepted) ++accepts_;
      auto vals = sample_leaf_values(step.tree, resid, step.assignment, c, rng);
      for (double& v : vals) v *= noise_sd;
      for (int i = 0; i < n_; ++i)
        fit_[i] += vals[step.assignment[i]] - old_vals[old_assign[i]];
      ens_.trees[j] = std::move(step.tree);
      ens_.leaf_values[j] = std::move(vals);
      assign_[j] = std::move(step.assignment);
    }
  }

  const Ensemble& ensemble() const { return ens_; }
  std::span<const double> fit() const { return fit_; }
  double accept_rate() const { return proposals_ ? double(accepts_) / proposals_ : 0.0; }

 private:
  const Matrix& X_;
  int n_;
  Ensemble ens_;
  std::vector<std::vector<int>> assign_;
  std::vector<double> fit_;
  long proposals_ = 0;
  long accepts_ = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const char* method_name(Method m) {
  return m == Method::CPBart ? "cpbart" : "bart";
}

FitResult fit_cpbart(const Dataset& data, const SamplerConfig& cfg) {
  cfg.validate();
  check_data(data);
  const auto t0 = std::chrono::steady_clock::now();
  const int n = data.n();
  const int m = cfg.m;

  FitResult out;
  out.method = Method::CPBart;
  out.scaling = data.scaling;
  out.response_name = data.response_name;
  out.config = cfg;
  out.warnings = data.warnings;
  out.marginal = fit_kde(data.y);
  const auto z = normal_scores(data.y, *out.marginal);
  double sum_z2 = 0.0;
  for (double v : z) {
    if (!std::isfinite(v)) throw NumericError("non-finite pseudo-response");
    sum_z2 += v * v;
  }

  Rng rng = make_rng(cfg.seed);
  Backfit bf(data.X, m);
  double c = 9.0 / (7.0 * m);
  double s = scale_s(c, m);
  std::vector<double> zt(n);
  for (int i = 0; i < n; ++i) zt[i] = z[i] / s;

  HMCConfig hmc = cfg.hmc;
  hmc.adapt_iters = std::min(hmc.adapt_iters, cfg.burnin);
  auto da = DualAveragingState::start(hmc);
  double step = hmc.init_step;
  long hmc_accepts = 0;

  const int sweeps = cfg.burnin + cfg.iters;
  out.diagnostics.c_trace.reserve(sweeps);
  out.draws.reserve(cfg.iters);
  for (int it = 1; it <= sweeps; ++it) {
    bf.sweep(zt, c, 1.0, cfg, rng);
    if (cfg.update_c) {
      const auto& ens = bf.ensemble();
      const auto f = bf.fit();
      CStats st{n, sum_z2, 0.0, ens.total_leaves(), ens.sum_squared_leaves(), m, cfg.a,
                cfg.resolved_b()};
      for (int i = 0; i < n; ++i) st.sum_zf += z[i] * f[i];
      const auto res = hmc_step(std::log(c), st, hmc, step, rng);
      if (res.accepted) ++hmc_accepts;
      c = std::exp(res.ctilde);
      if (it <= hmc.adapt_iters) step = dual_averaging_update(da, res.accept_prob, it);
      s = scale_s(c, m);
      for (int i = 0; i < n; ++i) zt[i] = z[i] / s;
    }
    out.diagnostics.c_trace.push_back(c);
    if (it > cfg.burnin) out.draws.push_back({bf.ensemble(), c, s, 1.0});
  }

  out.diagnostics.tree_accept_rate = bf.accept_rate();
  out.diagnostics.hmc_accept_rate = cfg.update_c ? double(hmc_accepts) / sweeps : 0.0;
  out.diagnostics.step_size = step;
  out.diagnostics.seconds = seconds_since(t0);
  return out;
}

FitResult fit_gaussian_bart(const Dataset& data, const SamplerConfig& cfg) {
  cfg.validate();
  check_data(data);
  const auto t0 = std::chrono::steady_clock::now();
  const int n = data.n();
  const int m = cfg.m;

  FitResult out;
  out.method = Method::GaussianBart;
  out.scaling = data.scaling;
  out.response_name = data.response_name;
  out.config = cfg;
  out.warnings = data.warnings;

  const auto [lo_it, hi_it] = std::minmax_element(data.y.begin(), data.y.end());
  const double range = *hi_it - *lo_it;
  if (!(range > 0.0)) throw DataError("degenerate response");
  out.response = {*lo_it + 0.5 * range, range};
  std::vector<double> ys(n);
  for (int i = 0; i < n; ++i) ys[i] = (data.y[i] - out.response.center) / range;

  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : ys) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  const double lambda = baseline_sigma_lambda(sd, kBaselineSigmaNu);
  const double tau = 0.5 / (kBaselineK * std::sqrt(static_cast<double>(m)));

  Rng rng = make_rng(cfg.seed);
  Backfit bf(data.X, m);
  double sigma = sd;
  std::vector<double> resid(n);

  const int sweeps = cfg.burnin + cfg.iters;
  out.diagnostics.c_trace.reserve(sweeps);
  out.diagnostics.sigma_trace.reserve(sweeps);
  out.draws.reserve(cfg.iters);
  for (int it = 1; it <= sweeps; ++it) {
    const double c = tau * tau / (sigma * sigma);
    bf.sweep(ys, c, sigma, cfg, rng);
    const auto f = bf.fit();
    for (int i = 0; i < n; ++i) resid[i] = ys[i] - f[i];
    sigma = std::sqrt(baseline_sigma_draw(resid, kBaselineSigmaNu, lambda, rng));
    out.diagnostics.c_trace.push_back(tau * tau / (sigma * sigma));
    out.diagnostics.sigma_trace.push_back(sigma);
    if (it > cfg.burnin)
      out.draws.push_back({bf.ensemble(), tau * tau / (sigma * sigma), 1.0, sigma});
  }

  out.diagnostics.tree_accept_rate = bf.accept_rate();
  out.diagnostics.seconds = seconds_since(t0);
  return out;
}

FitResult fit(const Dataset& data, const SamplerConfig& cfg, Method method) {
  return method == Method::CPBart ? fit_cpbart(data, cfg) : fit_gaussian_bart(data, cfg);
}

}  // namespace cpbart
