#pragma once

// Exhaustive posterior over single trees for tiny designs: every valid tree, its
// Galton-Watson mass, split-rule mass and N(0, c 11' + I) leaf likelihoods.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "cpbart/matrix.hpp"
#include "cpbart/tree.hpp"

namespace testing {

struct Subtree {
  std::vector<cpbart::Node> nodes;  // local indices, root at 0
  double log_weight;
};

inline double dense_leaf_loglik(const std::vector<double>& r, double c) {
  const int n = static_cast<int>(r.size());
  if (n == 0) return 0.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(n, n, c) + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = r[i];
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * v.dot(llt.solve(v));
}

class TreeEnumerator {
 public:
  TreeEnumerator(const cpbart::Matrix& X, std::vector<double> resid, int min_leaf, double nu,
                 double c)
      : X_(X), r_(std::move(resid)), min_leaf_(min_leaf), nu_(nu), c_(c) {}

  /// Normalized posterior probability of every valid tree, keyed by Tree::key().
  std::map<std::string, double> posterior() {
    std::vector<int> all(X_.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const auto subs = expand(all, 1);
    double top = -INFINITY;
    for (const auto& s : subs) top = std::max(top, s.log_weight);
    std::map<std::string, double> out;
    double z = 0.0;
    for (const auto& s : subs) {
      const double w = std::exp(s.log_weight - top);
      out[cpbart::Tree::from_nodes(s.nodes).key()] += w;
      z += w;
    }
    for (auto& [k, v] : out) v /= z;
    return out;
  }

 private:
  std::vector<double> cuts(const std::vector<int>& rows, int var) const {
    std::set<double> vals;
    for (int r : rows) vals.insert(X_(r, var));
    std::vector<double> out;
    for (double v : vals) {
      int left = 0;
      for (int r : rows) left += X_(r, var) <= v;
      if (left >= min_leaf_ && static_cast<int>(rows.size()) - left >= min_leaf_) out.push_back(v);
    }
    return out;
  }

  std::vector<Subtree> expand(const std::vector<int>& rows, int depth) {
    std::vector<double> rr;
    for (int r : rows) rr.push_back(r_[r]);
    const double split = std::pow(nu_, depth);
    std::vector<Subtree> out;
    out.push_back({{cpbart::Node{.leaf = 0}}, std::log(1.0 - split) + dense_leaf_loglik(rr, c_)});

    int usable = 0;
    for (int v = 0; v < static_cast<int>(X_.cols()); ++v) usable += !cuts(rows, v).empty();
    for (int v = 0; v < static_cast<int>(X_.cols()); ++v) {
      const auto cs = cuts(rows, v);
      for (double cut : cs) {
        std::vector<int> left, right;
        for (int r : rows) (X_(r, v) <= cut ? left : right).push_back(r);
        const auto ls = expand(left, depth + 1);
        const auto rs = expand(right, depth + 1);
        const double head = std::log(split) - std::log(double(usable)) - std::log(double(cs.size()));
        for (const auto& l : ls)
          for (const auto& r : rs) {
            Subtree t;
            const int lsz = static_cast<int>(l.nodes.size());
            t.nodes.push_back(cpbart::Node{.var = v, .cut = cut, .left = 1, .right = 1 + lsz});
            for (auto n : l.nodes) {
              if (!n.is_leaf()) n.left += 1, n.right += 1;
              t.nodes.push_back(n);
            }
            for (auto n : r.nodes) {
              if (!n.is_leaf()) n.left += 1 + lsz, n.right += 1 + lsz;
              t.nodes.push_back(n);
            }
            t.log_weight = head + l.log_weight + r.log_weight;
            out.push_back(std::move(t));
          }
      }
    }
    return out;
  }

  const cpbart::Matrix& X_;
  std::vector<double> r_;
  int min_leaf_;
  double nu_;
  double c_;
};

}  // namespace testing
