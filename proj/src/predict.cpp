#include "cpbart/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cpbart/copula.hpp"
#include "cpbart/normal.hpp"

namespace cpbart {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quantile level out of range");
}

void check_level(double level) {
  if (!(level >= 0.0 && level < 1.0)) throw std::invalid_argument("interval level out of range");
}

void check_grid(std::span<const double> grid) {
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (!(grid[g] > grid[g - 1])) throw std::invalid_argument("grid must be strictly increasing");
}

}  // namespace

void PredictionConfig::validate() const {
  check_grid(y_grid);
  if (u_grid_size < 2) throw std::invalid_argument("u grid needs at least two points");
  if (!(u_bound > 0.0)) throw std::invalid_argument("u bound must be positive");
  for (double a : quantile_levels) check_alpha(a);
}

double empirical_quantile(std::vector<double>& values, double p) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  const double h = (values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double x_lo = values[lo];
  if (lo + 1 >= values.size()) return x_lo;
  const double x_hi = *std::min_element(values.begin() + lo + 1, values.end());
  return x_lo + (h - lo) * (x_hi - x_lo);
}

PointPredictor::PointPredictor(const FitResult& fit, std::span<const double> x) : fit_(fit) {
  if (fit.draws.empty()) throw std::invalid_argument("fit holds no posterior draws");
  f_.reserve(fit.draws.size());
  double c_bar = 0.0;
  double sigma_bar = 0.0;
  for (const auto& d : fit.draws) {
    f_.push_back(evaluate_ensemble(d.ensemble, x));
    f_bar_ += f_.back();
    c_bar += d.c;
    sigma_bar += d.sigma;
  }
  const double k = static_cast<double>(fit.draws.size());
  f_bar_ /= k;
  sigma_bar_ = sigma_bar / k;
  if (fit.method == Method::CPBart) s_bar_ = scale_s(c_bar / k, fit.config.m);
}

double PointPredictor::law_log_density(double y, double z, double log_py, double f, double s,
                                       double sigma) const {
  if (fit_.method == Method::GaussianBart) {
    const auto& r = fit_.response;
    return normal_log_pdf(y, r.center + r.scale * f, r.scale * r.scale * sigma * sigma);
  }
  return std_normal_log_pdf(z / s - f) + log_py - std::log(s) - std_normal_log_pdf(z);
}

double PointPredictor::law_mean(double f, double s, double sigma, int u_grid_size,
                                double u_bound) const {
  if (fit_.method == Method::GaussianBart) return fit_.response.center + fit_.response.scale * f;
  (void)sigma;
  const double du = 2.0 * u_bound / (u_grid_size - 1);
  double acc = 0.0;
  for (int g = 0; g < u_grid_size; ++g) {
    const double u = -u_bound + g * du;
    const double w = (g == 0 || g == u_grid_size - 1) ? 0.5 : 1.0;
    acc += w * fit_.marginal->quantile_of_normal_score(s * (u + f)) * std_normal_pdf(u);
  }
  return acc * du;
}

double PointPredictor::law_quantile(double alpha, double f, double s, double sigma) const {
  const double za = std_normal_quantile(alpha);
  if (fit_.method == Method::GaussianBart)
    return fit_.response.center + fit_.response.scale * (f + sigma * za);
  return fit_.marginal->quantile_of_normal_score(s * (f + za));
}

std::vector<double> PointPredictor::density(std::span<const double> y_grid,
                                            PredictMode mode) const {
  check_grid(y_grid);
  const bool copula = fit_.method == Method::CPBart;
  std::vector<double> out(y_grid.size(), 0.0);
  for (std::size_t g = 0; g < y_grid.size(); ++g) {
    const double y = y_grid[g];
    double z = 0.0;
    double log_py = 0.0;
    if (copula) {
      const double py = fit_.marginal->pdf(y);
      if (!(py > 0.0)) continue;
      z = std_normal_quantile(fit_.marginal->cdf(y));
      log_py = std::log(py);
    }
    if (mode == PredictMode::Plugin) {
      out[g] = std::exp(law_log_density(y, z, log_py, f_bar_, s_bar_, sigma_bar_));
      continue;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < f_.size(); ++k) {
      const auto& d = fit_.draws[k];
      acc += std::exp(law_log_density(y, z, log_py, f_[k], d.s, d.sigma));
    }
    out[g] = acc / static_cast<double>(f_.size());
  }
  return out;
}

std::vector<std::vector<double>> PointPredictor::draw_densities(
    std::span<const double> y_grid) const {
  check_grid(y_grid);
  const bool copula = fit_.method == Method::CPBart;
  std::vector<double> zs(y_grid.size(), 0.0);
  std::vector<double> log_pys(y_grid.size(), 0.0);
  if (copula) {
    for (std::size_t g = 0; g < y_grid.size(); ++g) {
      const double py = fit_.marginal->pdf(y_grid[g]);
      log_pys[g] = py > 0.0 ? std::log(py) : -std::numeric_limits<double>::infinity();
      zs[g] = std_normal_quantile(fit_.marginal->cdf(y_grid[g]));
    }
  }
  std::vector<std::vector<double>> out(f_.size(), std::vector<double>(y_grid.size()));
  for (std::size_t k = 0; k < f_.size(); ++k) {
    const auto& d = fit_.draws[k];
    for (std::size_t g = 0; g < y_grid.size(); ++g)
      out[k][g] = std::exp(law_log_density(y_grid[g], zs[g], log_pys[g], f_[k], d.s, d.sigma));
  }
  return out;
}

double PointPredictor::mean(PredictMode mode, int u_grid_size, double u_bound) const {
  if (u_grid_size < 2 || !(u_bound > 0.0)) throw std::invalid_argument("invalid mean quadrature");
  if (mode == PredictMode::Plugin) return law_mean(f_bar_, s_bar_, sigma_bar_, u_grid_size, u_bound);
  double acc = 0.0;
  for (std::size_t k = 0; k < f_.size(); ++k) {
    const auto& d = fit_.draws[k];
    acc += law_mean(f_[k], d.s, d.sigma, u_grid_size, u_bound);
  }
  return acc / static_cast<double>(f_.size());
}

double PointPredictor::quantile(double alpha, PredictMode mode) const {
  check_alpha(alpha);
  if (mode == PredictMode::Plugin) return law_quantile(alpha, f_bar_, s_bar_, sigma_bar_);
  double acc = 0.0;
  for (std::size_t k = 0; k < f_.size(); ++k) {
    const auto& d = fit_.draws[k];
    acc += law_quantile(alpha, f_[k], d.s, d.sigma);
  }
  return acc / static_cast<double>(f_.size());
}

std::vector<double> PointPredictor::draw_quantiles(double alpha) const {
  check_alpha(alpha);
  std::vector<double> out(f_.size());
  for (std::size_t k = 0; k < f_.size(); ++k) {
    const auto& d = fit_.draws[k];
    out[k] = law_quantile(alpha, f_[k], d.s, d.sigma);
  }
  return out;
}

std::vector<double> predictive_density(const FitResult& fit, std::span<const double> x,
                                       std::span<const double> y_grid, PredictMode mode) {
  return PointPredictor(fit, x).density(y_grid, mode);
}

double predictive_mean(const FitResult& fit, std::span<const double> x, PredictMode mode,
                       int u_grid_size, double u_bound) {
  return PointPredictor(fit, x).mean(mode, u_grid_size, u_bound);
}

double predictive_quantile(const FitResult& fit, std::span<const double> x, double alpha,
                           PredictMode mode) {
  check_alpha(alpha);
  return PointPredictor(fit, x).quantile(alpha, mode);
}

std::pair<double, double> quantile_posterior_interval(const FitResult& fit,
                                                      std::span<const double> x, double alpha,
                                                      double level) {
  check_level(level);
  if (fit.draws.size() < static_cast<std::size_t>(kMinIntervalDraws))
    throw std::invalid_argument("too few posterior draws for an interval");
  auto q = PointPredictor(fit, x).draw_quantiles(alpha);
  const double lo = empirical_quantile(q, 0.5 * (1.0 - level));
  const double hi = empirical_quantile(q, 0.5 * (1.0 + level));
  return {lo, hi};
}

DensityBand density_posterior_band(const FitResult& fit, std::span<const double> x,
                                   std::span<const double> y_grid, double level) {
  check_level(level);
  if (fit.draws.size() < static_cast<std::size_t>(kMinIntervalDraws))
    throw std::invalid_argument("too few posterior draws for a band");
  const auto dens = PointPredictor(fit, x).draw_densities(y_grid);
  DensityBand band{std::vector<double>(y_grid.size()), std::vector<double>(y_grid.size())};
  std::vector<double> column(dens.size());
  for (std::size_t g = 0; g < y_grid.size(); ++g) {
    for (std::size_t k = 0; k < dens.size(); ++k) column[k] = dens[k][g];
    band.lo[g] = empirical_quantile(column, 0.5 * (1.0 - level));
    band.hi[g] = empirical_quantile(column, 0.5 * (1.0 + level));
  }
  return band;
}

std::vector<double> default_density_grid(const FitResult& fit, int points) {
  if (points < 2) throw std::invalid_argument("density grid needs at least two points");
  double lo = 0.0;
  double hi = 0.0;
  if (fit.marginal) {
    const auto c = fit.marginal->centers();
    const double h = fit.marginal->bandwidth();
    lo = c.front() - 3.0 * h;
    hi = c.back() + 3.0 * h;
  } else {
    const auto& r = fit.response;
    lo = r.center - 0.6 * r.scale;
    hi = r.center + 0.6 * r.scale;
  }
  std::vector<double> grid(points);
  for (int g = 0; g < points; ++g) grid[g] = lo + (hi - lo) * g / (points - 1);
  return grid;
}

}  // namespace cpbart
