#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/gamma.hpp>

#include "cpbart/errors.hpp"
#include "cpbart/metrics.hpp"
#include "cpbart/sim.hpp"
#include "support.hpp"

using namespace cpbart;

namespace {

std::vector<double> random_values(int n, Rng& rng, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = std::uniform_real_distribution<double>(lo, hi)(rng);
  return v;
}

}  // namespace

TEST_CASE("rmse and qrmse") {
  const std::vector<double> a{1.0, -2.0, 3.5};
  CHECK(rmse(a, a) == 0.0);
  std::vector<double> b = a;
  for (double& v : b) v += 1.0;
  CHECK(rmse(b, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(qrmse(b, a) == doctest::Approx(1.0).epsilon(1e-15));
  Rng rng = make_rng(1);
  const auto p = random_values(57, rng, -3, 3), t = random_values(57, rng, -3, 3);
  double ss = 0.0;
  for (int i = 0; i < 57; ++i) ss += (p[i] - t[i]) * (p[i] - t[i]);
  CHECK(rmse(p, t) == doctest::Approx(std::sqrt(ss / 57)).epsilon(1e-14));
  CHECK(qrmse(p, t) == rmse(p, t));
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("mean_log_score") {
  CHECK(mean_log_score(std::vector<double>(5, 1.0)).value == 0.0);
  CHECK(mean_log_score(std::vector<double>(5, std::exp(-1.0))).value == doctest::Approx(1.0).epsilon(1e-15));
  Rng rng = make_rng(2);
  const auto d = random_values(40, rng, 0.01, 2.0);
  double s = 0.0;
  for (double v : d) s -= std::log(v) / 40;
  CHECK(mean_log_score(d).value == doctest::Approx(s).epsilon(1e-14));
  const auto ls = mean_log_score(std::vector<double>{1.0, 0.0});
  CHECK(ls.floored == 1);
  CHECK(ls.value == doctest::Approx(-std::log(kDensityFloor) / 2).epsilon(1e-14));
}

TEST_CASE("pinball") {
  CHECK(pinball(2.0, 2.0, 0.3) == 0.0);
  CHECK(pinball(1.0, 0.0, 0.5) == 0.5);
  CHECK(pinball(0.0, 1.0, 0.9) == doctest::Approx(0.1).epsilon(1e-14));
  Rng rng = make_rng(3);
  for (int k = 0; k < 1000; ++k) {
    const double y = std_normal_draw(rng), q = std_normal_draw(rng), a = uniform01(rng);
    CHECK(pinball(y, q, a) >= 0.0);
  }
  CHECK(mean_pinball(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}, 0.5) == 0.5);
  CHECK_THROWS_AS(pinball(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("crps from a quantile grid") {
  const auto levels = default_crps_levels();
  CHECK(levels.size() == 99);
  CHECK(levels.front() == doctest::Approx(0.01));
  CHECK(levels.back() == doctest::Approx(0.99));
  CHECK(crps_from_quantiles(1.7, std::vector<double>(99, 1.7), levels) == 0.0);

  std::vector<double> q(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) q[l] = std_normal_quantile(levels[l]);
  const double exact = (std::sqrt(2.0) - 1.0) / std::sqrt(std::numbers::pi);
  CHECK(exact == doctest::Approx(0.23370).epsilon(1e-4));
  CHECK(std::abs(crps_from_quantiles(0.0, q, levels) - exact) < 1e-2);
}

TEST_CASE("crps matches the energy form") {
  Rng rng = make_rng(4);
  const auto levels = default_crps_levels();
  const boost::math::gamma_distribution<double> gam(2.0, 1.5);
  struct Forecast {
    std::function<double(double)> quantile;
    std::function<double(Rng&)> draw;
  };
  const std::vector<std::pair<Forecast, double>> cases{
      {{[](double a) { return 1.0 + 2.0 * std_normal_quantile(a); },
        [](Rng& r) { return 1.0 + 2.0 * std_normal_draw(r); }},
       0.3},
      {{[&](double a) { return boost::math::quantile(gam, a); },
        [](Rng& r) { return std::gamma_distribution<double>(2.0, 1.5)(r); }},
       4.0}};
  for (const auto& [fc, y] : cases) {
    std::vector<double> q;
    for (double a : levels) q.push_back(fc.quantile(a));
    const int N = 1000000;
    std::vector<double> term(N);
    for (int k = 0; k < N; ++k) {
      const double x = fc.draw(rng), x2 = fc.draw(rng);
      term[k] = std::abs(x - y) - 0.5 * std::abs(x - x2);
    }
    const double mc = testing::mean_of(term);
    const double se = std::sqrt(testing::var_of(term) / N);
    const double grid = crps_from_quantiles(y, q, levels);
    MESSAGE("grid " << grid << " energy " << mc << " se " << se);
    CHECK(std::abs(grid - mc) / mc < 0.02);
  }
}

TEST_CASE("quantile_coverage") {
  const std::vector<double> t{0.1, 5.0, -3.0};
  const std::vector<std::pair<double, double>> wide(3, {-1e300, 1e300});
  CHECK(quantile_coverage(wide, t) == 1.0);
  const std::vector<std::pair<double, double>> none(3, {1e6, 1e6 + 1});
  CHECK(quantile_coverage(none, t) == 0.0);
  Rng rng = make_rng(5);
  std::vector<std::pair<double, double>> iv;
  std::vector<double> truth;
  int inside = 0;
  for (int i = 0; i < 300; ++i) {
    const double a = std_normal_draw(rng), b = a + std::abs(std_normal_draw(rng));
    const double v = std_normal_draw(rng);
    iv.push_back({a, b});
    truth.push_back(v);
    inside += (v >= a && v <= b);
  }
  CHECK(quantile_coverage(iv, truth) == doctest::Approx(inside / 300.0).epsilon(1e-15));
  CHECK_THROWS_AS(quantile_coverage(iv, t), std::invalid_argument);
}

TEST_CASE("metrics are invariant to observation order") {
  Rng rng = make_rng(6);
  auto p = random_values(30, rng, -1, 1), t = random_values(30, rng, -1, 1);
  const double r = rmse(p, t);
  const double pl = mean_pinball(t, p, 0.3);
  std::vector<int> idx(30);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<double> p2, t2;
  for (int i : idx) {
    p2.push_back(p[i]);
    t2.push_back(t[i]);
  }
  CHECK(rmse(p2, t2) == doctest::Approx(r).epsilon(1e-14));
  CHECK(mean_pinball(t2, p2, 0.3) == doctest::Approx(pl).epsilon(1e-14));
}

TEST_CASE("cv folds") {
  for (auto [n, k] : {std::pair{100, 10}, std::pair{37, 10}, std::pair{10, 10}, std::pair{53, 4}}) {
    const auto folds = cv_folds(n, k, 9);
    CHECK(folds.size() == std::size_t(k));
    std::set<int> all;
    std::size_t lo = n, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (int i : f) CHECK(all.insert(i).second);
    }
    CHECK(hi - lo <= 1);
    CHECK(all.size() == std::size_t(n));
    CHECK(*all.begin() == 0);
    CHECK(*all.rbegin() == n - 1);
    CHECK(cv_folds(n, k, 9) == folds);
  }
  CHECK(cv_folds(100, 10, 1) != cv_folds(100, 10, 2));
}

TEST_CASE("cross_validate pools the fold predictions") {
  const auto sim = gen_case({1, 60, 0.3, 7});
  SamplerConfig cfg;
  cfg.m = 10;
  cfg.iters = 60;
  cfg.burnin = 40;
  EvalConfig eval;
  eval.intervals = false;
  const auto cv = cross_validate(sim.raw, 5, Method::CPBart, cfg, 3, eval, 1);
  CHECK(cv.folds == cv_folds(60, 5, 3));
  CHECK(cv.observations.size() == 60);
  std::vector<double> means, ys;
  double ls = 0.0, crps = 0.0;
  for (const auto& f : cv.folds)
    for (int i : f) {
      means.push_back(cv.observations[i].mean);
      ys.push_back(cv.observations[i].y);
      CHECK(cv.observations[i].y == sim.raw.y[i]);
      ls -= std::log(cv.observations[i].density) / 60;
      crps += cv.observations[i].crps / 60;
    }
  CHECK(cv.report.rmse == doctest::Approx(rmse(means, ys)).epsilon(1e-12));
  CHECK(cv.report.log_score == doctest::Approx(ls).epsilon(1e-12));
  CHECK(cv.report.crps == doctest::Approx(crps).epsilon(1e-12));
  CHECK(cv.report.n_test == 60);
  CHECK(std::isfinite(cv.report.pinball.at(0.5)));

  const auto again = cross_validate(sim.raw, 5, Method::CPBart, cfg, 3, eval, 1);
  CHECK(again.report.log_score == cv.report.log_score);
  CHECK_THROWS_AS(cross_validate(sim.raw.subset(std::vector<int>{0, 1, 2}), 5, Method::CPBart, cfg, 3), DataError);
}

TEST_CASE("summarize_scores uses the oracle quantiles") {
  std::vector<ObservationScore> obs(4);
  for (int i = 0; i < 4; ++i) {
    obs[i].y = i;
    obs[i].mean = i + 0.5;
    obs[i].density = 0.25;
    obs[i].crps = 0.1 * i;
    obs[i].quantiles = {i - 1.0, double(i), i + 1.0};
    obs[i].intervals = {{i - 2.0, i - 0.5}, {i - 0.5, i + 0.5}, {i + 0.5, i + 2.0}};
  }
  const std::vector<double> levels{0.25, 0.5, 0.75};
  QuantileTruth truth{{0.25, 0.5, 0.75}, {{-1, 0, 1, 2}, {0.2, 1.2, 2.2, 3.2}, {1, 2, 3, 4}}};
  const auto r = summarize_scores(obs, levels, &truth);
  CHECK(r.rmse == doctest::Approx(0.5));
  CHECK(r.log_score == doctest::Approx(std::log(4.0)));
  CHECK(r.crps == doctest::Approx(0.15));
  CHECK(r.qrmse.at(0.25) == doctest::Approx(0.0));
  CHECK(r.qrmse.at(0.5) == doctest::Approx(0.2));
  CHECK(r.coverage.at(0.5) == 1.0);
  CHECK(r.coverage.at(0.25) == 1.0);
  CHECK(r.pinball.at(0.5) == doctest::Approx(0.0));
  const auto no_truth = summarize_scores(obs, levels, nullptr);
  CHECK(no_truth.qrmse.empty());
  CHECK(no_truth.coverage.empty());
}
