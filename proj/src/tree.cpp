#include "cpbart/tree.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "cpbart/errors.hpp"

namespace cpbart {

namespace {

[[noreturn]] void invalid_structure() { throw std::invalid_argument("invalid tree structure"); }

// Copy the subtree rooted at `src` of `in` into `out` in preorder, renumbering leaves.
int copy_preorder(const std::vector<Node>& in, int src, std::vector<Node>& out, int& next_leaf,
                  std::vector<char>& seen) {
  if (src < 0 || src >= static_cast<int>(in.size()) || seen[src]) invalid_structure();
  seen[src] = 1;
  const Node& n = in[src];
  const int at = static_cast<int>(out.size());
  out.push_back(n);
  if (n.is_leaf()) {
    out[at].left = out[at].right = -1;
    out[at].cut = 0.0;
    out[at].leaf = next_leaf++;
    return at;
  }
  out[at].leaf = -1;
  const int l = copy_preorder(in, n.left, out, next_leaf, seen);
  const int r = copy_preorder(in, n.right, out, next_leaf, seen);
  out[at].left = l;
  out[at].right = r;
  return at;
}

}  // namespace

Tree::Tree() : nodes_{Node{.leaf = 0}}, num_leaves_(1) {}

Tree::Tree(std::vector<Node> canonical) : nodes_(std::move(canonical)) {
  num_leaves_ = static_cast<int>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

Tree Tree::from_nodes(std::vector<Node> nodes) {
  if (nodes.empty()) invalid_structure();
  std::vector<Node> out;
  out.reserve(nodes.size());
  std::vector<char> seen(nodes.size(), 0);
  int next_leaf = 0;
  copy_preorder(nodes, 0, out, next_leaf, seen);
  if (out.size() != nodes.size()) invalid_structure();  // unreachable nodes
  return Tree(std::move(out));
}

int Tree::leaf_node(std::span<const double> x) const {
  int i = 0;
  for (std::size_t guard = 0; guard <= nodes_.size(); ++guard) {
    const Node& n = nodes_[i];
    if (n.is_leaf()) return i;
    if (n.var >= static_cast<int>(x.size())) invalid_structure();
    i = (x[n.var] <= n.cut) ? n.left : n.right;
    if (i < 0 || i >= static_cast<int>(nodes_.size())) invalid_structure();
  }
  invalid_structure();
}

std::vector<int> Tree::depths() const {
  std::vector<int> d(nodes_.size(), 1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.is_leaf()) d[n.left] = d[n.right] = d[i] + 1;  // preorder: parent first
  }
  return d;
}

std::vector<int> Tree::parents() const {
  std::vector<int> p(nodes_.size(), -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.is_leaf()) p[n.left] = p[n.right] = static_cast<int>(i);
  }
  return p;
}

std::vector<int> Tree::prunable_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.is_leaf() && nodes_[n.left].is_leaf() && nodes_[n.right].is_leaf())
      out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Tree::internal_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Tree::leaf_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

Tree Tree::grown(int leaf_node, int var, double cut) const {
  std::vector<Node> nodes = nodes_;
  const int l = static_cast<int>(nodes.size());
  nodes.push_back(Node{.leaf = 0});
  nodes.push_back(Node{.leaf = 0});
  Node& n = nodes[leaf_node];
  n.var = var;
  n.cut = cut;
  n.left = l;
  n.right = l + 1;
  return from_nodes(std::move(nodes));
}

Tree Tree::pruned(int internal_node) const {
  std::vector<Node> nodes = nodes_;
  nodes[internal_node] = Node{.leaf = 0};
  // Rebuild from the root; the detached children are no longer reachable.
  std::vector<Node> out;
  out.reserve(nodes.size() - 2);
  std::vector<char> seen(nodes.size(), 0);
  int next_leaf = 0;
  copy_preorder(nodes, 0, out, next_leaf, seen);
  return Tree(std::move(out));
}

Tree Tree::with_rule(int internal_node, int var, double cut) const {
  std::vector<Node> nodes = nodes_;
  nodes[internal_node].var = var;
  nodes[internal_node].cut = cut;
  return Tree(std::move(nodes));
}

std::string Tree::key() const {
  std::string out;
  std::function<void(int)> rec = [&](int i) {
    const Node& n = nodes_[i];
    if (n.is_leaf()) {
      out += 'L';
      return;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%d:%.17g ", n.var, n.cut);
    out += buf;
    rec(n.left);
    out += ' ';
    rec(n.right);
    out += ')';
  };
  rec(0);
  return out;
}

int Ensemble::total_leaves() const {
  int k = 0;
  for (const auto& t : trees) k += t.num_leaves();
  return k;
}

double Ensemble::sum_squared_leaves() const {
  double s = 0.0;
  for (const auto& v : leaf_values)
    for (double mu : v) s += mu * mu;
  return s;
}

double evaluate_tree(const Tree& tree, std::span<const double> leaf_values,
                     std::span<const double> x) {
  if (static_cast<int>(leaf_values.size()) != tree.num_leaves())
    throw std::invalid_argument("leaf value count does not match tree");
  return leaf_values[tree.leaf_of(x)];
}

double evaluate_ensemble(const Ensemble& ens, std::span<const double> x) {
  if (ens.leaf_values.size() != ens.trees.size())
    throw std::invalid_argument("ensemble leaf values do not match trees");
  double f = 0.0;
  for (std::size_t j = 0; j < ens.trees.size(); ++j)
    f += evaluate_tree(ens.trees[j], ens.leaf_values[j], x);
  return f;
}

std::vector<int> leaf_assignment(const Tree& tree, const Matrix& X) {
  std::vector<int> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = tree.leaf_of(X.row(i));
  return out;
}

bool check_validity(const Tree& tree, const Matrix& X, int min_leaf) {
  std::vector<int> counts(tree.num_leaves(), 0);
  for (std::size_t i = 0; i < X.rows(); ++i) ++counts[tree.leaf_of(X.row(i))];
  return std::all_of(counts.begin(), counts.end(), [&](int c) { return c >= min_leaf; });
}

std::vector<double> CovariateScaling::apply(std::span<const double> raw) const {
  if (static_cast<int>(raw.size()) != size())
    throw std::invalid_argument("covariate count does not match scaling");
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j)
    out[j] = std::clamp((raw[j] - min[j]) / (max[j] - min[j]), 0.0, 1.0);
  return out;
}

RawData RawData::subset(std::span<const int> rows) const {
  RawData out;
  out.covariate_names = covariate_names;
  out.response_name = response_name;
  out.X = Matrix(rows.size(), X.cols());
  out.y.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(X.row(rows[r]).begin(), X.cols(), out.X.row(r).begin());
    out.y[r] = y[rows[r]];
  }
  return out;
}

Dataset make_dataset(const RawData& raw) {
  if (raw.X.rows() != raw.y.size()) throw DataError("covariate and response lengths differ");
  if (raw.covariate_names.size() != raw.X.cols())
    throw DataError("covariate names do not match columns");
  Dataset out;
  out.y = raw.y;
  out.response_name = raw.response_name;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < raw.X.cols(); ++j) {
    double lo = raw.X.rows() ? raw.X(0, j) : 0.0;
    double hi = lo;
    for (std::size_t i = 0; i < raw.X.rows(); ++i) {
      lo = std::min(lo, raw.X(i, j));
      hi = std::max(hi, raw.X(i, j));
    }
    if (!(lo < hi)) {
      out.warnings.push_back("dropping constant covariate '" + raw.covariate_names[j] + "'");
      out.scaling.dropped.push_back(raw.covariate_names[j]);
      continue;
    }
    keep.push_back(j);
    out.scaling.names.push_back(raw.covariate_names[j]);
    out.scaling.min.push_back(lo);
    out.scaling.max.push_back(hi);
  }
  if (keep.empty()) throw DataError("no non-constant covariates");
  out.X = Matrix(raw.X.rows(), keep.size());
  for (std::size_t i = 0; i < raw.X.rows(); ++i)
    for (std::size_t k = 0; k < keep.size(); ++k)
      out.X(i, k) = (raw.X(i, keep[k]) - out.scaling.min[k]) /
                    (out.scaling.max[k] - out.scaling.min[k]);
  return out;
}

Matrix standardize_columns(const CovariateScaling& scaling, const Matrix& raw,
                           std::span<const std::string> raw_names) {
  std::vector<std::size_t> idx;
  std::string missing;
  for (const auto& name : scaling.names) {
    const auto it = std::find(raw_names.begin(), raw_names.end(), name);
    if (it == raw_names.end()) {
      missing += (missing.empty() ? "" : ", ") + name;
      continue;
    }
    idx.push_back(static_cast<std::size_t>(it - raw_names.begin()));
  }
  if (!missing.empty()) throw DataError("missing covariate columns: " + missing);
  Matrix out(raw.rows(), idx.size());
  std::vector<double> buf(idx.size());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = raw(i, idx[k]);
    const auto z = scaling.apply(buf);
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace cpbart
