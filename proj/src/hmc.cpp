#include "cpbart/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cpbart {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// x * exp(-ctilde) with 0 * inf treated as 0.
double scaled_inverse(double x, double ctilde) { return x == 0.0 ? 0.0 : x * std::exp(-ctilde); }

}  // namespace

void HMCConfig::validate() const {
  if (leapfrog_steps < 1) throw std::invalid_argument("leapfrog_steps must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("target_accept must lie in (0, 1)");
  if (!(init_step > 0.0)) throw std::invalid_argument("init_step must be positive");
  if (adapt_iters < 0) throw std::invalid_argument("adapt_iters must be nonnegative");
}

double log_posterior_ctilde(double ctilde, const CStats& s) {
  if (!std::isfinite(ctilde)) return kNegInf;
  const double e = std::exp(ctilde);
  const double q = 1.0 + s.m * e;
  if (!std::isfinite(q)) return kNegInf;
  const double l = 0.5 * s.n * std::log(q) - 0.5 * q * s.sum_z2 + std::sqrt(q) * s.sum_zf -
                   0.5 * s.K * ctilde - 0.5 * scaled_inverse(s.mu, ctilde) - s.a * ctilde -
                   ctilde - scaled_inverse(s.b, ctilde);
  return std::isnan(l) ? kNegInf : l;
}

double grad_log_posterior_ctilde(double ctilde, const CStats& s) {
  const double me = s.m * std::exp(ctilde);
  const double q = 1.0 + me;
  return 0.5 * s.n * me / q - 0.5 * me * s.sum_z2 + 0.5 * me / std::sqrt(q) * s.sum_zf -
         0.5 * s.K + 0.5 * scaled_inverse(s.mu, ctilde) - s.a - 1.0 +
         scaled_inverse(s.b, ctilde);
}

bool leapfrog(double& ctilde, double& momentum, const CStats& s, double step_size, int steps) {
  momentum += 0.5 * step_size * grad_log_posterior_ctilde(ctilde, s);
  for (int k = 0; k < steps; ++k) {
    ctilde += step_size * momentum;
    const double g = grad_log_posterior_ctilde(ctilde, s);
    momentum += (k + 1 < steps ? 1.0 : 0.5) * step_size * g;
    if (!std::isfinite(ctilde) || !std::isfinite(momentum)) return false;
  }
  return true;
}

HMCResult hmc_step(double ctilde, const CStats& s, const HMCConfig& cfg, double step_size,
                   Rng& rng) {
  if (!(step_size > 0.0)) throw std::invalid_argument("step size must be positive");
  const double p0 = std_normal_draw(rng);
  const double h0 = -log_posterior_ctilde(ctilde, s) + 0.5 * p0 * p0;
  double x = ctilde;
  double p = p0;
  const bool finite = leapfrog(x, p, s, step_size, cfg.leapfrog_steps);
  const double h1 = -log_posterior_ctilde(x, s) + 0.5 * p * p;
  if (!finite || !std::isfinite(h0) || !std::isfinite(h1)) return {ctilde, false, 0.0};
  const double accept_prob = std::min(1.0, std::exp(h0 - h1));
  if (uniform01(rng) < accept_prob) return {x, true, accept_prob};
  return {ctilde, false, accept_prob};
}

DualAveragingState DualAveragingState::start(const HMCConfig& cfg) {
  DualAveragingState st;
  st.mu = std::log(10.0 * cfg.init_step);
  st.log_step = std::log(cfg.init_step);
  st.log_step_bar = st.log_step;
  st.target_accept = cfg.target_accept;
  st.adapt_iters = cfg.adapt_iters;
  return st;
}

double DualAveragingState::step_size() const { return std::exp(log_step); }
double DualAveragingState::averaged_step_size() const { return std::exp(log_step_bar); }

double dual_averaging_update(DualAveragingState& st, double accept_prob, int iter) {
  if (iter < 1) throw std::invalid_argument("dual averaging iterations are 1-based");
  if (iter > st.adapt_iters) return st.averaged_step_size();
  const double t = iter;
  const double w = 1.0 / (t + st.t0);
  st.h_bar = (1.0 - w) * st.h_bar + w * (st.target_accept - accept_prob);
  st.log_step = st.mu - std::sqrt(t) / st.gamma * st.h_bar;
  const double eta = std::pow(t, -st.kappa);
  st.log_step_bar = eta * st.log_step + (1.0 - eta) * st.log_step_bar;
  return iter == st.adapt_iters ? st.averaged_step_size() : st.step_size();
}

}  // namespace cpbart
