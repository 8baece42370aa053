#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "cpbart/marginal.hpp"
#include "cpbart/matrix.hpp"
#include "cpbart/tree.hpp"

namespace cpbart {

/// (1 + m c)^{-1/2}. Throws std::invalid_argument for c <= 0 or m < 1.
double scale_s(double c, int m);

/// Leaf-variance scale with its derived standardizing scale s.
struct CopulaState {
  double c;
  int m;
  double s;

  static CopulaState make(double c, int m) { return {c, m, scale_s(c, m)}; }
};

/// Per-tree leaf indices of n points: assignments[j][i] is the leaf of point i in tree j.
using LeafAssignments = std::vector<std::vector<int>>;

LeafAssignments ensemble_assignments(const Ensemble& ens, const Matrix& X);

/// Largest n accepted by the dense verification tools below.
inline constexpr int kDenseGuard = 2000;

/// Correlation matrix s^2 (c E E' + I) of the pseudo-responses. Verification tool:
/// throws std::invalid_argument("omega is a verification tool") above kDenseGuard points.
Eigen::MatrixXd omega(const LeafAssignments& assignments, double c);

/// Standardized pseudo-responses z = Phi^{-1}(F_Y(y)).
std::vector<double> normal_scores(std::span<const double> y, const MarginalModel& marg);

/// y = F_Y^{-1}(Phi(s z~)), elementwise.
std::vector<double> transport_forward(std::span<const double> z_tilde, const CopulaState& st,
                                      const MarginalModel& marg);

/// z~ = Phi^{-1}(F_Y(y)) / s, elementwise.
std::vector<double> transport_inverse(std::span<const double> y, const CopulaState& st,
                                      const MarginalModel& marg);

/// log |det dR/dz~| = sum_i log(s phi(z_i) / p_Y(y_i)); -infinity if some p_Y(y_i) = 0.
double log_jacobian(std::span<const double> z, std::span<const double> y, const CopulaState& st,
                    const MarginalModel& marg);

/// log p(y, leaf values | c, trees): the likelihood augmented with the leaf values.
/// Exact (no constants dropped); O(n + K) after evaluating the ensemble.
double log_extended_likelihood(std::span<const double> y, const Ensemble& ens, const Matrix& X,
                               double c, const MarginalModel& marg);

/// Gaussian copula log density -1/2 log|Omega| - 1/2 z'(Omega^{-1} - I) z at u.
/// Verification tool with the same guard as omega().
double log_copula_density(std::span<const double> u, const LeafAssignments& assignments,
                          double c);

/// log N(z~; 0, c E E' + I): pseudo-response density with the leaf values integrated out.
double log_integrated_pseudo_density(std::span<const double> z_tilde,
                                     const LeafAssignments& assignments, double c);

}  // namespace cpbart
