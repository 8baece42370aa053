#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "cpbart/io.hpp"
#include "cpbart/metrics.hpp"
#include "cpbart/predict.hpp"
#include "cpbart/sampler.hpp"
#include "cpbart/sim.hpp"
#include "cpbart/tree_mcmc.hpp"
#include "enumerate.hpp"
#include "support.hpp"

using namespace cpbart;

namespace {

constexpr int kReplicates = 3;
constexpr int kTrain = 250;
constexpr int kTest = 250;
constexpr int kTrees = 75;
constexpr int kRetained = 1500;  // 2000 sweeps in total
constexpr int kBurnin = 500;
const std::vector<double> kLevels{0.25, 0.5, 0.75};

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("%s #%d %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SamplerConfig study_config(std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.m = kTrees;
  cfg.iters = kRetained;
  cfg.burnin = kBurnin;
  cfg.seed = seed;
  return cfg;
}

struct MethodScores {
  double log_score = 0.0;
  std::map<double, double> qrmse;
  int covered = 0;
  int intervals = 0;
};

struct Replicate {
  MethodScores cp;
  MethodScores bart;
  FitResult cp_fit;
  Matrix test_X;
};

MethodScores score(const FitResult& fit, const Matrix& X, const SimData& test, bool intervals) {
  EvalConfig eval;
  eval.levels = kLevels;
  eval.intervals = intervals;
  const auto obs = score_observations(fit, X, test.raw.y, eval);
  QuantileTruth truth{kLevels, {}};
  for (double a : kLevels) {
    std::vector<double> q;
    for (int i = 0; i < kTest; ++i) q.push_back(test.oracle.quantile(test.raw.X.row(i), a));
    truth.values.push_back(q);
  }
  const auto rep = summarize_scores(obs, kLevels, &truth);
  MethodScores s;
  s.log_score = rep.log_score;
  s.qrmse = rep.qrmse;
  if (intervals)
    for (std::size_t l = 0; l < kLevels.size(); ++l)
      for (int i = 0; i < kTest; ++i) {
        const auto [lo, hi] = obs[i].intervals[l];
        s.covered += (truth.values[l][i] >= lo && truth.values[l][i] <= hi);
        ++s.intervals;
      }
  return s;
}

std::vector<Replicate> run_study(int case_id, bool intervals) {
  std::vector<Replicate> out;
  for (int r = 0; r < kReplicates; ++r) {
    const auto train = gen_case({case_id, kTrain, 0.3, 1000u + r});
    const auto test = gen_case({case_id, kTest, 0.3, 2000u + r});
    const auto cfg = study_config(r + 1);
    Replicate rep;
    rep.cp_fit = fit_cpbart(train.data, cfg);
    const auto bart_fit = fit_gaussian_bart(train.data, cfg);
    rep.test_X = standardize_columns(rep.cp_fit.scaling, test.raw.X, test.raw.covariate_names);
    rep.cp = score(rep.cp_fit, rep.test_X, test, intervals);
    rep.bart = score(bart_fit, rep.test_X, test, false);
    std::printf("  case %d replicate %d: LS cp %.4f bart %.4f; QRMSE cp %.3f/%.3f/%.3f bart %.3f/%.3f/%.3f\n",
                case_id, r, rep.cp.log_score, rep.bart.log_score, rep.cp.qrmse[0.25],
                rep.cp.qrmse[0.5], rep.cp.qrmse[0.75], rep.bart.qrmse[0.25], rep.bart.qrmse[0.5],
                rep.bart.qrmse[0.75]);
    std::fflush(stdout);
    out.push_back(std::move(rep));
  }
  return out;
}

double mean_ls(const std::vector<Replicate>& reps, bool cp) {
  double s = 0.0;
  for (const auto& r : reps) s += (cp ? r.cp : r.bart).log_score / reps.size();
  return s;
}

// Pooled QRMSE: root of the mean squared error over all replicates.
double pooled_qrmse(const std::vector<Replicate>& reps, bool cp, double a) {
  double s = 0.0;
  for (const auto& r : reps) s += std::pow((cp ? r.cp : r.bart).qrmse.at(a), 2) / reps.size();
  return std::sqrt(s);
}

void criterion_1_2_3_4() {
  const auto case2 = run_study(2, true);
  const double cp2 = mean_ls(case2, true), bart2 = mean_ls(case2, false);
  report(1, bart2 - cp2 >= 0.20,
         fmt("Case 2 log-score: CP-BART %.4f, BART %.4f, gap %.4f (need >= 0.20)", cp2, bart2, bart2 - cp2));

  const auto case1 = run_study(1, false);
  const double cp1 = mean_ls(case1, true), bart1 = mean_ls(case1, false);
  report(2, std::abs(cp1 - bart1) <= 0.15,
         fmt("Case 1 log-score: CP-BART %.4f, BART %.4f, |diff| %.4f (need <= 0.15)", cp1, bart1,
             std::abs(cp1 - bart1)));

  int covered = 0, total = 0;
  for (const auto& r : case2) {
    covered += r.cp.covered;
    total += r.cp.intervals;
  }
  const double rate = double(covered) / total;
  report(3, rate >= 0.85 && rate <= 1.0,
         fmt("Case 2 95%% quantile-interval coverage %.4f over %d intervals (need [0.85, 1.00])", rate, total));

  const auto case3 = run_study(3, false);
  bool all = true;
  std::string detail;
  for (double a : kLevels) {
    const double c = pooled_qrmse(case3, true, a), b = pooled_qrmse(case3, false, a);
    all = all && c < b;
    detail += fmt(" a=%.2f: %.4f vs %.4f;", a, c, b);
  }
  report(4, all, "Case 3 QRMSE CP-BART vs BART (need CP < BART at every level):" + detail);

  // #9 uses fitted states from the Case 2 study.
  Rng rng = make_rng(99);
  double worst_norm = 0.0, worst_moment = 0.0, worst_mc = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto& rep = case2[k % kReplicates];
    const auto& fit = rep.cp_fit;
    const auto x = rep.test_X.row(std::uniform_int_distribution<int>(0, kTest - 1)(rng));
    const PointPredictor pp(fit, x);
    const auto& marg = *fit.marginal;
    const int g = 8001;
    std::vector<double> grid(g);
    for (int i = 0; i < g; ++i) grid[i] = marg.support_lo() + (marg.support_hi() - marg.support_lo()) * i / (g - 1);
    const auto dens = pp.density(grid, PredictMode::Full);
    double mass = 0.0, moment = 0.0;
    for (int i = 1; i < g; ++i) {
      const double dy = grid[i] - grid[i - 1];
      mass += 0.5 * (dens[i] + dens[i - 1]) * dy;
      moment += 0.5 * (grid[i] * dens[i] + grid[i - 1] * dens[i - 1]) * dy;
    }
    const double mean = pp.mean(PredictMode::Full);
    worst_norm = std::max(worst_norm, std::abs(mass - 1.0));
    worst_moment = std::max(worst_moment, std::abs(mean - moment) / std::abs(moment));
    // Monte Carlo oracle: pick a draw, then push a N(f, 1) pseudo-response through it.
    const auto f = pp.draw_f();
    const int N = 100000;
    std::vector<double> ys(N);
    for (int i = 0; i < N; ++i) {
      const auto d = std::uniform_int_distribution<int>(0, int(f.size()) - 1)(rng);
      ys[i] = marg.quantile_of_normal_score(fit.draws[d].s * (f[d] + std_normal_draw(rng)));
    }
    const double se = std::sqrt(testing::var_of(ys) / N);
    worst_mc = std::max(worst_mc, std::abs(mean - testing::mean_of(ys)) / se);
  }
  report(9, worst_norm <= 1e-3 && worst_moment <= 1e-3 && worst_mc <= 3.0,
         fmt("predictive normalization over 20 fitted states: max |mass-1| %.2e (<= 1e-3), max mean vs "
             "moment rel %.2e (<= 1e-3), max |mean - MC| %.2f SE (<= 3)",
             worst_norm, worst_moment, worst_mc));
}

void criterion_5() {
  Rng rng = make_rng(5);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + rep % 8;
    const int m = 1 + rep % 5;
    std::vector<double> ys(40);
    for (double& v : ys) v = std::gamma_distribution<double>(2.0, 1.3)(rng);
    const auto marg = fit_kde(ys);
    const auto ens = testing::random_ensemble(m, 4, 2, rng, 0.2);
    const Matrix X = testing::uniform_matrix(n, 2, rng);
    std::vector<double> y(n);
    for (double& v : y) v = marg.quantile(std::uniform_real_distribution<double>(0.02, 0.98)(rng));
    const double c = std::exp(std::uniform_real_distribution<double>(-4, 1)(rng));
    const auto st = CopulaState::make(c, m);
    // Closed form: N(z~; 0, c E E' + I) times the change of variables to y.
    const double closed = log_integrated_pseudo_density(transport_inverse(y, st, marg),
                                                        ensemble_assignments(ens, X), c) -
                          log_jacobian(normal_scores(y, marg), y, st, marg);
    worst = std::max(worst, std::abs(closed - testing::integrated_extended_loglik(y, ens, X, c, marg)));
  }
  report(5, worst < 1e-8, fmt("marginalization over 200 states with n <= 8: max abs error %.2e (need < 1e-8)", worst));
}

void criterion_6() {
  Rng rng = make_rng(6);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto s = testing::random_cstats(rng);
    const double ct = std::uniform_real_distribution<double>(-7.0, 1.0)(rng);
    const double h = 1e-6;
    const double fd = (log_posterior_ctilde(ct + h, s) - log_posterior_ctilde(ct - h, s)) / (2 * h);
    const double g = grad_log_posterior_ctilde(ct, s);
    worst = std::max(worst, std::abs(fd - g) / std::abs(g));
  }
  report(6, worst < 1e-5, fmt("gradient vs central differences on 100 states: max rel error %.2e (need < 1e-5)", worst));
}

void criterion_7() {
  Rng rng = make_rng(7);
  double worst_diag = 0.0, min_eig = INFINITY;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + rep % 49;
    const auto ens = testing::random_ensemble(1 + rep % 9, 6, 3, rng);
    const Matrix X = testing::uniform_matrix(n, 3, rng);
    const double c = std::exp(std::uniform_real_distribution<double>(-5, 2)(rng));
    const auto om = omega(ensemble_assignments(ens, X), c);
    worst_diag = std::max(worst_diag, (om.diagonal().array() - 1.0).abs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(om).eigenvalues().minCoeff());
  }
  report(7, worst_diag < 1e-12 && min_eig > 0.0,
         fmt("Omega on 100 ensembles (n <= 50): max |diag-1| %.2e (< 1e-12), min eigenvalue %.3e (> 0)",
             worst_diag, min_eig));
}

void criterion_8() {
  Rng rng = make_rng(8);
  std::vector<double> y(250);
  for (double& v : y) v = std::gamma_distribution<double>(2.0, 1.3)(rng);
  const auto marg = fit_kde(y);
  const auto st = CopulaState::make(9.0 / (7.0 * kTrees), kTrees);
  const double f = 0.8;
  std::vector<double> zt(100000);
  for (double& v : zt) v = f + std_normal_draw(rng);
  const auto out = transport_forward(zt, st, marg);
  const double ks = testing::ks_statistic(
      out, [&](double v) { return testing::Phi(std_normal_quantile(marg.cdf(v)) / st.s - f); });
  report(8, ks < 0.01, fmt("pushforward of 1e5 samples: KS %.5f (need < 0.01)", ks));
}

void criterion_10() {
  Rng rng = make_rng(10);
  Matrix X(10, 1);
  for (int i = 0; i < 10; ++i) X(i, 0) = (i + 0.5) / 10.0;
  std::vector<double> r(10);
  for (int i = 0; i < 10; ++i) r[i] = (i < 4 ? -1.0 : 0.8) + 0.6 * std_normal_draw(rng);
  SamplerConfig cfg;
  cfg.m = 1;
  cfg.min_leaf = 2;  // bounds the topologies to a few hundred trees
  const double c = 1.5;
  const auto exact = testing::TreeEnumerator(X, r, cfg.min_leaf, cfg.nu, c).posterior();
  std::map<std::string, double> freq;
  Tree cur;
  std::vector<int> a(10, 0);
  const int steps = 1000000;
  for (int k = 0; k < steps; ++k) {
    auto s = mh_tree_step(cur, a, r, c, X, cfg, rng);
    cur = std::move(s.tree);
    a = std::move(s.assignment);
    freq[cur.key()] += 1.0 / steps;
  }
  double tv = 0.0;
  for (const auto& [k, p] : exact) tv += 0.5 * std::abs(p - (freq.count(k) ? freq[k] : 0.0));
  for (const auto& [k, p] : freq)
    if (!exact.count(k)) tv += 0.5 * p;
  report(10, tv <= 0.05, fmt("tree chain vs enumerated posterior (%zu trees, 1e6 steps): TV %.4f (need <= 0.05)",
                             exact.size(), tv));
}

void criterion_11() {
  const auto levels = default_crps_levels();
  std::vector<double> q;
  for (double a : levels) q.push_back(std_normal_quantile(a));
  const double crps = crps_from_quantiles(0.0, q, levels);
  const double exact = (std::sqrt(2.0) - 1.0) / std::sqrt(std::numbers::pi);
  report(11, std::abs(crps - exact) <= 1e-2,
         fmt("CRPS of N(0,1) at 0: %.5f vs %.5f (need within 1e-2)", crps, exact));
}

void criterion_12() {
  const auto train = gen_case({2, kTrain, 0.3, 3000});
  auto cfg = study_config(12);
  cfg.iters = 300;
  cfg.burnin = 100;
  const auto a = fit_cpbart(train.data, cfg);
  const auto b = fit_cpbart(train.data, cfg);
  const bool same_trace = a.diagnostics.c_trace == b.diagnostics.c_trace;
  const auto path = (std::filesystem::temp_directory_path() / "cpbart_acceptance_model.json").string();
  save_model(a, path);
  const auto back = load_model(path);
  std::remove(path.c_str());
  const auto grid = default_density_grid(a, 128);
  bool same_pred = default_density_grid(back, 128) == grid;
  for (int i = 0; i < 20; ++i) {
    const auto x = train.data.X.row(i);
    for (auto mode : {PredictMode::Plugin, PredictMode::Full}) {
      same_pred = same_pred && predictive_density(a, x, grid, mode) == predictive_density(back, x, grid, mode);
      same_pred = same_pred && predictive_mean(a, x, mode) == predictive_mean(back, x, mode);
      same_pred = same_pred && predictive_quantile(a, x, 0.3, mode) == predictive_quantile(back, x, 0.3, mode);
    }
  }
  report(12, same_trace && same_pred,
         fmt("determinism: c traces %s; save/load predictions %s", same_trace ? "bitwise equal" : "differ",
             same_pred ? "bitwise equal" : "differ"));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_1_2_3_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_10();
  criterion_11();
  criterion_12();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d of 12 criteria failed, %.0f s\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
