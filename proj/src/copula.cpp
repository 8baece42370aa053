#include "cpbart/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cpbart/errors.hpp"
#include "cpbart/normal.hpp"

namespace cpbart {

namespace {

// c E E' + I.
Eigen::MatrixXd pseudo_covariance(const LeafAssignments& assignments, double c) {
  if (assignments.empty()) throw std::invalid_argument("no trees");
  const auto n = static_cast<Eigen::Index>(assignments.front().size());
  if (n > kDenseGuard) throw std::invalid_argument("omega is a verification tool");
  Eigen::MatrixXd shared = Eigen::MatrixXd::Zero(n, n);
  for (const auto& leaves : assignments) {
    if (static_cast<Eigen::Index>(leaves.size()) != n)
      throw std::invalid_argument("assignment lengths differ");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index l = 0; l < n; ++l)
        if (leaves[i] == leaves[l]) shared(i, l) += 1.0;
  }
  return c * shared + Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

double scale_s(double c, int m) {
  if (!(c > 0.0)) throw std::invalid_argument("nonpositive leaf variance");
  if (m < 1) throw std::invalid_argument("tree count must be positive");
  return 1.0 / std::sqrt(1.0 + m * c);
}

LeafAssignments ensemble_assignments(const Ensemble& ens, const Matrix& X) {
  LeafAssignments out;
  out.reserve(ens.trees.size());
  for (const auto& t : ens.trees) out.push_back(leaf_assignment(t, X));
  return out;
}

Eigen::MatrixXd omega(const LeafAssignments& assignments, double c) {
  const double s = scale_s(c, static_cast<int>(assignments.size()));
  return s * s * pseudo_covariance(assignments, c);
}

std::vector<double> normal_scores(std::span<const double> y, const MarginalModel& marg) {
  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) z[i] = std_normal_quantile(marg.cdf(y[i]));
  return z;
}

std::vector<double> transport_forward(std::span<const double> z_tilde, const CopulaState& st,
                                      const MarginalModel& marg) {
  std::vector<double> y(z_tilde.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double u = std::clamp(std_normal_cdf(st.s * z_tilde[i]), MarginalModel::kClip,
                                1.0 - MarginalModel::kClip);
    y[i] = marg.quantile(u);
  }
  return y;
}

std::vector<double> transport_inverse(std::span<const double> y, const CopulaState& st,
                                      const MarginalModel& marg) {
  auto z = normal_scores(y, marg);
  for (double& v : z) v /= st.s;
  return z;
}

double log_jacobian(std::span<const double> z, std::span<const double> y, const CopulaState& st,
                    const MarginalModel& marg) {
  if (z.size() != y.size()) throw std::invalid_argument("length mismatch");
  double lj = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double p = marg.pdf(y[i]);
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    lj += std::log(st.s) + std_normal_log_pdf(z[i]) - std::log(p);
  }
  return lj;
}

double log_extended_likelihood(std::span<const double> y, const Ensemble& ens, const Matrix& X,
                               double c, const MarginalModel& marg) {
  if (!(c > 0.0)) throw std::invalid_argument("nonpositive leaf variance");
  if (X.rows() != y.size()) throw std::invalid_argument("length mismatch");
  const double q = 1.0 + ens.size() * c;
  const double root_q = std::sqrt(q);
  const auto n = static_cast<double>(y.size());
  double ll = 0.5 * n * std::log(q);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double z = std_normal_quantile(marg.cdf(y[i]));
    const double r = z * root_q - evaluate_ensemble(ens, X.row(i));
    ll += -0.5 * (r * r - z * z) + std::log(marg.pdf(y[i]));
  }
  for (const auto& leaves : ens.leaf_values)
    for (double mu : leaves) ll += normal_log_pdf(mu, 0.0, c);
  return ll;
}

double log_copula_density(std::span<const double> u, const LeafAssignments& assignments,
                          double c) {
  const Eigen::MatrixXd om = omega(assignments, c);
  const auto n = om.rows();
  if (static_cast<Eigen::Index>(u.size()) != n) throw std::invalid_argument("length mismatch");
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = std_normal_quantile(u[i]);
  const Eigen::LLT<Eigen::MatrixXd> llt(om);
  if (llt.info() != Eigen::Success) throw NumericError("correlation matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  const double quad = z.dot(llt.solve(z)) - z.squaredNorm();
  return -0.5 * log_det - 0.5 * quad;
}

double log_integrated_pseudo_density(std::span<const double> z_tilde,
                                     const LeafAssignments& assignments, double c) {
  const Eigen::MatrixXd cov = pseudo_covariance(assignments, c);
  const auto n = cov.rows();
  if (static_cast<Eigen::Index>(z_tilde.size()) != n) throw std::invalid_argument("length mismatch");
  const Eigen::Map<const Eigen::VectorXd> z(z_tilde.data(), n);
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  return -static_cast<double>(n) * kLogSqrt2Pi - 0.5 * log_det - 0.5 * z.dot(llt.solve(z));
}

}  // namespace cpbart
