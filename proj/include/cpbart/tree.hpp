#pragma once

#include <span>
#include <string>
#include <vector>

#include "cpbart/matrix.hpp"

namespace cpbart {

/// One tree node. Internal nodes route x to `left` iff x[var] <= cut.
struct Node {
  int var = -1;  // -1 marks a leaf
  double cut = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;  // leaf index in 0..K-1 for leaves

  bool is_leaf() const { return var < 0; }
  friend bool operator==(const Node&, const Node&) = default;
};

/// Binary regression tree over [0,1]^p.
///
/// Nodes are stored in depth-first preorder (root at 0, left subtree before right)
/// and leaves are numbered in the same order, so structurally equal trees compare
/// equal node by node.
class Tree {
 public:
  /// Root-only tree.
  Tree();

  /// Validates and canonicalizes an arbitrary node list rooted at 0. Throws
  /// std::invalid_argument("invalid tree structure") if it is not a rooted binary tree.
  static Tree from_nodes(std::vector<Node> nodes);

  std::span<const Node> nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[i]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int num_leaves() const { return num_leaves_; }
  int num_internal() const { return size() - num_leaves_; }

  /// Node index of the leaf reached by x.
  int leaf_node(std::span<const double> x) const;
  /// Leaf index (0..K-1) of the leaf reached by x.
  int leaf_of(std::span<const double> x) const { return nodes_[leaf_node(x)].leaf; }

  /// Depth of every node, with the root at depth 1.
  std::vector<int> depths() const;
  /// Parent of every node (-1 for the root).
  std::vector<int> parents() const;

  /// Internal nodes whose children are both leaves.
  std::vector<int> prunable_nodes() const;
  std::vector<int> internal_nodes() const;
  std::vector<int> leaf_nodes() const;

  Tree grown(int leaf_node, int var, double cut) const;
  Tree pruned(int internal_node) const;
  Tree with_rule(int internal_node, int var, double cut) const;

  /// Compact textual key, e.g. "(0:0.5 L L)"; used for topology bookkeeping.
  std::string key() const;

  friend bool operator==(const Tree& a, const Tree& b) { return a.nodes_ == b.nodes_; }

 private:
  explicit Tree(std::vector<Node> canonical);
  std::vector<Node> nodes_;
  int num_leaves_ = 1;
};

/// Sum-of-trees model: trees plus their leaf-value vectors.
struct Ensemble {
  std::vector<Tree> trees;
  std::vector<std::vector<double>> leaf_values;

  int size() const { return static_cast<int>(trees.size()); }
  int total_leaves() const;
  double sum_squared_leaves() const;
};

/// Value of the leaf reached by x. Throws std::invalid_argument on size mismatch.
double evaluate_tree(const Tree& tree, std::span<const double> leaf_values,
                     std::span<const double> x);
double evaluate_ensemble(const Ensemble& ens, std::span<const double> x);

/// Leaf index of every row of X (the one-hot rows of the selection matrix).
std::vector<int> leaf_assignment(const Tree& tree, const Matrix& X);

/// True iff every leaf holds at least min_leaf rows of X.
bool check_validity(const Tree& tree, const Matrix& X, int min_leaf);

/// Training-set min/max of the retained covariates.
struct CovariateScaling {
  std::vector<std::string> names;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<std::string> dropped;  // constant training columns, ignored on input

  int size() const { return static_cast<int>(names.size()); }
  /// Map a point given in retained-covariate order to [0,1]^p, clipping.
  std::vector<double> apply(std::span<const double> raw) const;
};

/// Raw tabular data: covariates in original units plus the response.
struct RawData {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> covariate_names;
  std::string response_name = "y";

  RawData subset(std::span<const int> rows) const;
};

/// Covariates standardized to the unit cube plus the raw response.
struct Dataset {
  Matrix X;
  std::vector<double> y;
  CovariateScaling scaling;
  std::string response_name = "y";
  std::vector<std::string> warnings;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(X.cols()); }
};

/// Min-max standardize covariates; constant columns are dropped with a warning.
Dataset make_dataset(const RawData& raw);

/// Standardize the rows of `raw` using an existing scaling; columns are matched by name.
/// Throws DataError naming any missing covariate.
Matrix standardize_columns(const CovariateScaling& scaling, const Matrix& raw,
                           std::span<const std::string> raw_names);

}  // namespace cpbart
