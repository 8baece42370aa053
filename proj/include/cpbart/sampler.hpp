#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpbart/marginal.hpp"
#include "cpbart/tree.hpp"
#include "cpbart/tree_mcmc.hpp"

namespace cpbart {

enum class Method { CPBart, GaussianBart };

const char* method_name(Method m);

/// One retained posterior state. For the Gaussian baseline `ensemble` predicts on
/// the internal response scale and `sigma` is the noise sd on that scale.
struct PosteriorDraw {
  Ensemble ensemble;
  double c = 0.0;
  double s = 1.0;
  double sigma = 1.0;
};

/// Affine map between the baseline's internal response scale and y:
/// y = center + scale * y_internal.
struct ResponseScaling {
  double center = 0.0;
  double scale = 1.0;
};

struct Diagnostics {
  std::vector<double> c_trace;      // every sweep, burn-in included
  std::vector<double> sigma_trace;  // baseline only
  double tree_accept_rate = 0.0;
  double hmc_accept_rate = 0.0;
  double step_size = 0.0;  // HMC step size after adaptation
  double seconds = 0.0;
};

struct FitResult {
  Method method = Method::CPBart;
  std::vector<PosteriorDraw> draws;  // one per retained sweep
  std::optional<MarginalModel> marginal;
  CovariateScaling scaling;
  std::string response_name = "y";
  ResponseScaling response;
  SamplerConfig config;
  Diagnostics diagnostics;
  std::vector<std::string> warnings;
};

inline constexpr int kMinTrainingRows = 10;

/// Copula-process BART. Deterministic given cfg.seed.
FitResult fit_cpbart(const Dataset& data, const SamplerConfig& cfg);

/// Gaussian-error BART on the min-max scaled response, for comparison.
FitResult fit_gaussian_bart(const Dataset& data, const SamplerConfig& cfg);

FitResult fit(const Dataset& data, const SamplerConfig& cfg, Method method);

}  // namespace cpbart
