#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cpbart/copula.hpp"
#include "cpbart/hmc.hpp"
#include "cpbart/marginal.hpp"
#include "cpbart/matrix.hpp"
#include "cpbart/normal.hpp"
#include "cpbart/random.hpp"
#include "cpbart/tree.hpp"

namespace testing {

using cpbart::Ensemble;
using cpbart::Matrix;
using cpbart::Rng;
using cpbart::Tree;

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double Phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline Matrix uniform_matrix(int n, int p, Rng& rng) {
  Matrix X(n, p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = u(rng);
  return X;
}

/// Tree with `leaves` leaves grown at random leaves with random rules; cells may be empty.
inline Tree random_tree(int leaves, int p, Rng& rng) {
  Tree t;
  std::uniform_real_distribution<double> u(0.05, 0.95);
  while (t.num_leaves() < leaves) {
    const auto ln = t.leaf_nodes();
    const int at = ln[std::uniform_int_distribution<int>(0, int(ln.size()) - 1)(rng)];
    t = t.grown(at, std::uniform_int_distribution<int>(0, p - 1)(rng), u(rng));
  }
  return t;
}

inline Ensemble random_ensemble(int m, int max_leaves, int p, Rng& rng, double leaf_sd = 1.0) {
  Ensemble e;
  std::normal_distribution<double> g(0.0, leaf_sd);
  for (int j = 0; j < m; ++j) {
    e.trees.push_back(random_tree(std::uniform_int_distribution<int>(1, max_leaves)(rng), p, rng));
    std::vector<double> v(e.trees.back().num_leaves());
    for (double& x : v) x = g(rng);
    e.leaf_values.push_back(v);
  }
  return e;
}

/// Leaf of x found by testing cell membership against every leaf's box of constraints.
inline int leaf_by_membership(const Tree& t, const double* x) {
  const auto parents = t.parents();
  for (int k : t.leaf_nodes()) {
    bool inside = true;
    for (int child = k, par = parents[k]; par >= 0; child = par, par = parents[par]) {
      const auto& n = t.node(par);
      const bool left = x[n.var] <= n.cut;
      if (left != (n.left == child)) inside = false;
    }
    if (inside) return t.node(k).leaf;
  }
  return -1;
}

/// Dense n x K_total selection matrix E = [E^1 ... E^m].
inline std::vector<std::vector<double>> selection_matrix(const Ensemble& e, const Matrix& X) {
  int total = 0;
  for (const auto& t : e.trees) total += t.num_leaves();
  std::vector<std::vector<double>> E(X.rows(), std::vector<double>(total, 0.0));
  for (std::size_t i = 0; i < X.rows(); ++i) {
    int offset = 0;
    for (const auto& t : e.trees) {
      E[i][offset + leaf_by_membership(t, X.row(i).data())] = 1.0;
      offset += t.num_leaves();
    }
  }
  return E;
}

/// Kolmogorov-Smirnov distance between a sample and a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

/// Statistics of a plausible sampler state: standard-normal scores, a random fit whose
/// scale follows the leaf variance, and leaf totals consistent with m trees.
inline cpbart::CStats random_cstats(Rng& rng) {
  cpbart::CStats s;
  s.n = std::uniform_int_distribution<int>(5, 400)(rng);
  s.m = std::uniform_int_distribution<int>(1, 75)(rng);
  const double c = std::exp(std::uniform_real_distribution<double>(-6.0, 0.5)(rng));
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < s.n; ++i) {
    const double z = g(rng);
    const double f = std::sqrt(s.m * c) * (0.5 * z + 0.5 * g(rng));
    s.sum_z2 += z * z;
    s.sum_zf += z * f;
  }
  s.K = s.m + std::uniform_int_distribution<int>(0, 2 * s.m)(rng);
  for (int k = 0; k < s.K; ++k) {
    const double mu = std::sqrt(c) * g(rng);
    s.mu += mu * mu;
  }
  s.a = 1.0;
  s.b = 9.0 / (14.0 * s.m);
  return s;
}

/// log of the extended likelihood integrated over the leaf values. The integrand is
/// Gaussian in M, so evaluating it at its maximizer M* with precision H = E'E + I/c
/// gives the integral exactly: log L(M*) + K/2 log 2pi - 1/2 log|H|.
inline double integrated_extended_loglik(std::span<const double> y, const Ensemble& ens,
                                         const Matrix& X, double c,
                                         const cpbart::MarginalModel& marg) {
  const auto E = selection_matrix(ens, X);
  const int n = static_cast<int>(y.size());
  const int K = static_cast<int>(E.front().size());
  const double s = cpbart::scale_s(c, ens.size());
  Eigen::MatrixXd Em(n, K);
  Eigen::VectorXd zt(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) Em(i, k) = E[i][k];
    zt[i] = cpbart::std_normal_quantile(marg.cdf(y[i])) / s;
  }
  const Eigen::MatrixXd H = Em.transpose() * Em + Eigen::MatrixXd::Identity(K, K) / c;
  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  const Eigen::VectorXd mstar = llt.solve(Em.transpose() * zt);
  Ensemble at = ens;
  int k = 0;
  for (auto& leaves : at.leaf_values)
    for (double& v : leaves) v = mstar[k++];
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return cpbart::log_extended_likelihood(y, at, X, c, marg) +
         0.5 * K * std::log(2.0 * std::numbers::pi) - 0.5 * logdet;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace testing
