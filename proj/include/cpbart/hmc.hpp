#pragma once

#include "cpbart/random.hpp"

namespace cpbart {

/// Sufficient statistics of the conditional posterior of log c.
struct CStats {
  int n = 0;
  double sum_z2 = 0.0;  // sum of squared standardized pseudo-responses z_i
  double sum_zf = 0.0;  // sum of z_i * f(x_i)
  int K = 0;            // total number of leaves
  double mu = 0.0;      // sum of squared leaf values
  int m = 1;
  double a = 1.0;
  double b = 1.0;
};

struct HMCConfig {
  int leapfrog_steps = 10;
  double target_accept = 0.8;
  double init_step = 0.1;
  int adapt_iters = 1000;  // normally the burn-in length

  void validate() const;
};

/// Log conditional posterior of ctilde = log c, up to an additive constant.
/// Returns -infinity instead of NaN when the terms overflow.
double log_posterior_ctilde(double ctilde, const CStats& s);
double grad_log_posterior_ctilde(double ctilde, const CStats& s);

struct HMCResult {
  double ctilde;
  bool accepted;
  double accept_prob;
};

/// Leapfrog integration with unit mass; updates position and momentum in place.
/// Returns false if the trajectory leaves the finite range.
bool leapfrog(double& ctilde, double& momentum, const CStats& s, double step_size, int steps);

/// One HMC transition with a fresh standard-normal momentum.
HMCResult hmc_step(double ctilde, const CStats& s, const HMCConfig& cfg, double step_size,
                   Rng& rng);

/// Nesterov dual-averaging state for the HMC step size.
struct DualAveragingState {
  double mu = 0.0;  // shrinkage target, log(10 * init_step)
  double log_step = 0.0;
  double log_step_bar = 0.0;
  double h_bar = 0.0;
  double target_accept = 0.8;
  int adapt_iters = 0;
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;

  static DualAveragingState start(const HMCConfig& cfg);
  double step_size() const;
  double averaged_step_size() const;
};

/// Advances the recursion for iteration `iter` (1-based) and returns the step size to
/// use next. Once iter exceeds adapt_iters the state is left untouched and the
/// averaged step size is returned.
double dual_averaging_update(DualAveragingState& state, double accept_prob, int iter);

}  // namespace cpbart
