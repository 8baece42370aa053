#include "cpbart/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/gamma.hpp>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cpbart/normal.hpp"

namespace cpbart {

namespace {

constexpr int kSimDims = 5;
constexpr double kMinShape = 1e-8;
const double kFriedmanScale = 2.0 * std::sqrt(5.5);

// Integrates g(u) phi(u) over [-8, 8] with the trapezoid rule.
template <class G>
double normal_expectation(G g) {
  constexpr int kPoints = 801;
  constexpr double kBound = 8.0;
  const double du = 2.0 * kBound / (kPoints - 1);
  double acc = 0.0;
  for (int k = 0; k < kPoints; ++k) {
    const double u = -kBound + k * du;
    const double w = (k == 0 || k == kPoints - 1) ? 0.5 : 1.0;
    acc += w * g(u) * std_normal_pdf(u);
  }
  return acc * du;
}

double gamma_quantile(double shape, double scale, double u) {
  u = std::clamp(u, DBL_MIN, 1.0 - DBL_EPSILON / 2);
  const boost::math::gamma_distribution<double> g(shape, scale);
  return std::max(boost::math::quantile(g, u), DBL_MIN);
}

}  // namespace

void SimSpec::validate() const {
  if (case_id < 1 || case_id > 3) throw std::invalid_argument("unknown case");
  if (n < 2) throw std::invalid_argument("simulation needs n >= 2");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("rho must lie in (-1, 1)");
}

double friedman(std::span<const double> x) {
  if (x.size() < kSimDims) throw std::invalid_argument("friedman needs five coordinates");
  const double t = x[2] - 0.5;
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * t * t + 10.0 * x[3] +
         5.0 * x[4];
}

double friedman_star(std::span<const double> x) { return (friedman(x) - 15.0) / kFriedmanScale; }

Matrix gen_covariates(int n, double rho, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("simulation needs n >= 2");
  Eigen::MatrixXd sigma(kSimDims, kSimDims);
  for (int l = 0; l < kSimDims; ++l)
    for (int j = 0; j < kSimDims; ++j) sigma(l, j) = std::pow(rho, std::abs(l - j));
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();

  Rng rng = make_rng(seed, 0);
  Matrix X(n, kSimDims);
  Eigen::VectorXd e(kSimDims);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kSimDims; ++j) e[j] = std_normal_draw(rng);
    const Eigen::VectorXd v = L * e;
    for (int j = 0; j < kSimDims; ++j) X(i, j) = v[j];
  }
  for (int j = 0; j < kSimDims; ++j) {
    double lo = X(0, j), hi = X(0, j);
    for (int i = 1; i < n; ++i) {
      lo = std::min(lo, X(i, j));
      hi = std::max(hi, X(i, j));
    }
    for (int i = 0; i < n; ++i) X(i, j) = (X(i, j) - lo) / (hi - lo);
  }
  return X;
}

CaseOracle::CaseOracle(int case_id, GammaParam gamma) : case_id_(case_id), gamma_(gamma) {
  if (case_id < 1 || case_id > 3) throw std::invalid_argument("unknown case");
}

double CaseOracle::gamma_second(double v) const {
  return gamma_ == GammaParam::ShapeScale ? v : 1.0 / v;
}

double CaseOracle::quantile(std::span<const double> x, double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quantile level out of range");
  switch (case_id_) {
    case 1:
      return friedman_star(x) + std::sqrt(kCase1NoiseVar) * std_normal_quantile(alpha);
    case 2: {
      const double z = friedman_star(x) + std::sqrt(kCase2NoiseVar) * std_normal_quantile(alpha);
      return gamma_quantile(3.0, gamma_second(2.0), std_normal_cdf(z));
    }
    default: {
      const double shape = std::max(friedman(x) / std::sqrt(5.5), kMinShape);
      return gamma_quantile(shape, gamma_second(kCase3Scale), alpha);
    }
  }
}

double CaseOracle::density(std::span<const double> x, double y) const {
  switch (case_id_) {
    case 1:
      return std::exp(normal_log_pdf(y, friedman_star(x), kCase1NoiseVar));
    case 2: {
      if (!(y > 0.0)) return 0.0;
      const boost::math::gamma_distribution<double> g(3.0, gamma_second(2.0));
      const double u = boost::math::cdf(g, y);
      if (!(u > 0.0 && u < 1.0)) return 0.0;
      const double z = std_normal_quantile(u);
      const double r = std::sqrt(kCase2NoiseVar);
      return std::exp(std_normal_log_pdf((z - friedman_star(x)) / r) - std::log(r) +
                      std::log(boost::math::pdf(g, y)) - std_normal_log_pdf(z));
    }
    default: {
      if (!(y > 0.0)) return 0.0;
      const double shape = std::max(friedman(x) / std::sqrt(5.5), kMinShape);
      return boost::math::pdf(
          boost::math::gamma_distribution<double>(shape, gamma_second(kCase3Scale)), y);
    }
  }
}

double CaseOracle::mean(std::span<const double> x) const {
  switch (case_id_) {
    case 1:
      return friedman_star(x);
    case 2: {
      const double f = friedman_star(x);
      const double r = std::sqrt(kCase2NoiseVar);
      const double sc = gamma_second(2.0);
      return normal_expectation([&](double u) {
        return gamma_quantile(3.0, sc, std_normal_cdf(f + r * u));
      });
    }
    default: {
      const double shape = std::max(friedman(x) / std::sqrt(5.5), kMinShape);
      return shape * gamma_second(kCase3Scale);
    }
  }
}

double CaseOracle::variance(std::span<const double> x) const {
  switch (case_id_) {
    case 1:
      return kCase1NoiseVar;
    case 2: {
      const double f = friedman_star(x);
      const double r = std::sqrt(kCase2NoiseVar);
      const double sc = gamma_second(2.0);
      const double mu = mean(x);
      return normal_expectation([&](double u) {
        const double d = gamma_quantile(3.0, sc, std_normal_cdf(f + r * u)) - mu;
        return d * d;
      });
    }
    default: {
      const double shape = std::max(friedman(x) / std::sqrt(5.5), kMinShape);
      const double sc = gamma_second(kCase3Scale);
      return shape * sc * sc;
    }
  }
}

double CaseOracle::draw(std::span<const double> x, Rng& rng) const {
  switch (case_id_) {
    case 1:
      return friedman_star(x) + std::sqrt(kCase1NoiseVar) * std_normal_draw(rng);
    case 2: {
      const double z = friedman_star(x) + std::sqrt(kCase2NoiseVar) * std_normal_draw(rng);
      return gamma_quantile(3.0, gamma_second(2.0), std_normal_cdf(z));
    }
    default: {
      const double shape = std::max(friedman(x) / std::sqrt(5.5), kMinShape);
      double u = uniform01(rng);
      while (u <= 0.0) u = uniform01(rng);
      return gamma_quantile(shape, gamma_second(kCase3Scale), u);
    }
  }
}

SimData gen_case(const SimSpec& spec) {
  spec.validate();
  CaseOracle oracle(spec.case_id, spec.gamma);
  RawData raw;
  raw.X = gen_covariates(spec.n, spec.rho, spec.seed);
  raw.covariate_names = {"x1", "x2", "x3", "x4", "x5"};
  raw.response_name = "y";
  Rng rng = make_rng(spec.seed, 1);
  raw.y.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) raw.y[i] = oracle.draw(raw.X.row(i), rng);
  Dataset data = make_dataset(raw);
  return {std::move(raw), std::move(data), oracle};
}

double monte_carlo_snr(int case_id, int points, std::uint64_t seed, GammaParam gamma,
                       double rho, int design_n) {
  if (points < 2 || design_n < 2) throw std::invalid_argument("too few SNR points");
  const CaseOracle oracle(case_id, gamma);
  // Stack independent simulated designs, each scaled on its own as in a study.
  Matrix X(points, 5);
  Rng seeds = make_rng(seed, 2);
  for (int start = 0; start < points; start += design_n) {
    const int rows = std::min(design_n, points - start);
    const Matrix B = gen_covariates(std::max(rows, 2), rho, seeds());
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < 5; ++j) X(start + i, j) = B(i, j);
  }
  if (case_id != 2) {
    double lo = INFINITY, hi = -INFINITY, var = 0.0;
    for (int i = 0; i < points; ++i) {
      const double mu = oracle.mean(X.row(i));
      lo = std::min(lo, mu);
      hi = std::max(hi, mu);
      var += oracle.variance(X.row(i));
    }
    return (hi - lo) / std::sqrt(var / points);
  }
  // Case 2 moments depend on x only through f*(x), and the mean increases with it:
  // the range comes from the extreme points and the variance from a fine table in f*.
  std::vector<double> fs(points);
  int arg_lo = 0, arg_hi = 0;
  for (int i = 0; i < points; ++i) {
    fs[i] = friedman_star(X.row(i));
    if (fs[i] < fs[arg_lo]) arg_lo = i;
    if (fs[i] > fs[arg_hi]) arg_hi = i;
  }
  const double range = oracle.mean(X.row(arg_hi)) - oracle.mean(X.row(arg_lo));
  constexpr int kTable = 257;
  const double f_lo = fs[arg_lo], f_hi = fs[arg_hi];
  const double df = (f_hi - f_lo) / (kTable - 1);
  const double r = std::sqrt(kCase2NoiseVar);
  const double sc = gamma == GammaParam::ShapeScale ? 2.0 : 0.5;
  std::vector<double> table(kTable);
  for (int k = 0; k < kTable; ++k) {
    const double f = f_lo + k * df;
    const auto y = [&](double u) { return gamma_quantile(3.0, sc, std_normal_cdf(f + r * u)); };
    const double mu = normal_expectation(y);
    table[k] = normal_expectation([&](double u) { return (y(u) - mu) * (y(u) - mu); });
  }
  double var = 0.0;
  for (double f : fs) {
    const double t = df > 0.0 ? (f - f_lo) / df : 0.0;
    const int k = std::min(static_cast<int>(t), kTable - 2);
    var += table[k] + (t - k) * (table[k + 1] - table[k]);
  }
  return range / std::sqrt(var / points);
}

}  // namespace cpbart
