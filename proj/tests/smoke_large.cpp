#include <chrono>
#include <cmath>
#include <cstdio>

#include "cpbart/predict.hpp"
#include "cpbart/sampler.hpp"
#include "cpbart/sim.hpp"

using namespace cpbart;

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sim = gen_case({2, 50000, 0.3, 4242});
  SamplerConfig cfg;
  cfg.iters = 400;
  cfg.burnin = 100;  // 500 sweeps in total
  cfg.seed = 5;
  const auto fit = fit_cpbart(sim.data, cfg);
  bool finite = true;
  for (int i = 0; i < 100; ++i) {
    const auto x = sim.data.X.row(i * 500);
    finite = finite && std::isfinite(predictive_mean(fit, x, PredictMode::Plugin)) &&
             std::isfinite(predictive_quantile(fit, x, 0.9, PredictMode::Full));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = finite && fit.draws.size() == 400 && secs < 1800.0;
  std::printf("%s n=50000 fit of 500 sweeps: %.0f s (need < 1800), sampler %.0f s, predictions %s\n",
              pass ? "PASS" : "FAIL", secs, fit.diagnostics.seconds, finite ? "finite" : "non-finite");
  return pass ? 0 : 1;
}
