#include "cpbart/tree_mcmc.hpp"

#include "cpbart/normal.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cpbart {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// True iff some cut on `var` leaves at least min_leaf rows on both sides.
bool var_splittable(const Matrix& X, std::span<const int> rows, int var, int min_leaf,
                    std::vector<double>& buf) {
  const int n = static_cast<int>(rows.size());
  if (n < 2 * min_leaf) return false;
  buf.resize(n);
  for (int i = 0; i < n; ++i) buf[i] = X(rows[i], var);
  // The min_leaf-th smallest value is a valid cut iff it is strictly below the
  // min_leaf-th largest.
  std::nth_element(buf.begin(), buf.begin() + (min_leaf - 1), buf.end());
  const double low = buf[min_leaf - 1];
  std::nth_element(buf.begin(), buf.begin() + (n - min_leaf), buf.end());
  const double high = buf[n - min_leaf];
  return low < high;
}

std::vector<int> splittable_vars(const Matrix& X, std::span<const int> rows, int min_leaf) {
  std::vector<int> out;
  std::vector<double> buf;
  for (int v = 0; v < static_cast<int>(X.cols()); ++v)
    if (var_splittable(X, rows, v, min_leaf, buf)) out.push_back(v);
  return out;
}

bool cell_growable(const Matrix& X, std::span<const int> rows, int min_leaf) {
  std::vector<double> buf;
  for (int v = 0; v < static_cast<int>(X.cols()); ++v)
    if (var_splittable(X, rows, v, min_leaf, buf)) return true;
  return false;
}

// log rho(node) for one internal node with the given cell.
double log_rule_mass(const Matrix& X, std::span<const int> rows, const Node& node, int min_leaf) {
  const auto vars = splittable_vars(X, rows, min_leaf);
  if (std::find(vars.begin(), vars.end(), node.var) == vars.end()) return kNegInf;
  const auto cuts = split_candidates(X, rows, node.var, min_leaf);
  if (!std::binary_search(cuts.begin(), cuts.end(), node.cut)) return kNegInf;
  return -std::log(static_cast<double>(vars.size())) - std::log(static_cast<double>(cuts.size()));
}

struct Availability {
  bool grow;
  bool prune;
  bool change;
};

double move_prob(const MoveProbs& p, Availability a, MoveType move) {
  const double total = (a.grow ? p.grow : 0.0) + (a.prune ? p.prune : 0.0) +
                       (a.change ? p.change : 0.0);
  double mine = 0.0;
  switch (move) {
    case MoveType::Grow: mine = a.grow ? p.grow : 0.0; break;
    case MoveType::Prune: mine = a.prune ? p.prune : 0.0; break;
    case MoveType::Change: mine = a.change ? p.change : 0.0; break;
  }
  return total > 0.0 ? mine / total : 0.0;
}

struct TreeAnalysis {
  std::vector<std::vector<int>> cells;
  std::vector<int> growable_leaves;  // node indices
};

TreeAnalysis analyse(const Tree& tree, const Matrix& X, int min_leaf) {
  TreeAnalysis a;
  a.cells = node_cells(tree, X);
  for (int node : tree.leaf_nodes())
    if (cell_growable(X, a.cells[node], min_leaf)) a.growable_leaves.push_back(node);
  return a;
}

void split_rows(const Matrix& X, std::span<const int> rows, int var, double cut,
                std::vector<int>& left, std::vector<int>& right) {
  left.clear();
  right.clear();
  for (int r : rows) (X(r, var) <= cut ? left : right).push_back(r);
}

std::optional<Proposal> grow_from(const Tree& tree, const TreeAnalysis& an, const Matrix& X,
                                  Rng& rng, int min_leaf, const MoveProbs& probs) {
  const int G = static_cast<int>(an.growable_leaves.size());
  if (G == 0) return std::nullopt;
  const int leaf = an.growable_leaves[uniform_index(rng, G)];
  const auto& cell = an.cells[leaf];
  const auto vars = splittable_vars(X, cell, min_leaf);
  const int var = vars[uniform_index(rng, static_cast<int>(vars.size()))];
  const auto cuts = split_candidates(X, cell, var, min_leaf);
  const double cut = cuts[uniform_index(rng, static_cast<int>(cuts.size()))];
  Tree next = tree.grown(leaf, var, cut);

  std::vector<int> left, right;
  split_rows(X, cell, var, cut, left, right);
  const int G_next = G - 1 + (cell_growable(X, left, min_leaf) ? 1 : 0) +
                     (cell_growable(X, right, min_leaf) ? 1 : 0);
  const int N_next = static_cast<int>(next.prunable_nodes().size());

  const Availability here{true, tree.num_internal() > 0, tree.num_internal() > 0};
  const Availability there{G_next > 0, true, true};
  const double log_ratio = std::log(move_prob(probs, there, MoveType::Prune) / N_next) -
                           std::log(move_prob(probs, here, MoveType::Grow) / G);
  return Proposal{std::move(next), log_ratio};
}

std::optional<Proposal> prune_from(const Tree& tree, const TreeAnalysis& an, const Matrix& X,
                                   Rng& rng, int min_leaf, const MoveProbs& probs) {
  const auto prunable = tree.prunable_nodes();
  const int N = static_cast<int>(prunable.size());
  if (N == 0) return std::nullopt;
  const int node = prunable[uniform_index(rng, N)];
  const Node& nd = tree.node(node);
  const int G = static_cast<int>(an.growable_leaves.size());
  const auto is_growable = [&](int leaf) {
    return std::find(an.growable_leaves.begin(), an.growable_leaves.end(), leaf) !=
           an.growable_leaves.end();
  };
  const int G_next = G - (is_growable(nd.left) ? 1 : 0) - (is_growable(nd.right) ? 1 : 0) +
                     (cell_growable(X, an.cells[node], min_leaf) ? 1 : 0);
  Tree next = tree.pruned(node);
  const bool next_internal = next.num_internal() > 0;

  const Availability here{G > 0, true, true};
  const Availability there{G_next > 0, next_internal, next_internal};
  if (G_next == 0) return Proposal{std::move(next), kNegInf};  // grow cannot reverse it
  const double log_ratio = std::log(move_prob(probs, there, MoveType::Grow) / G_next) -
                           std::log(move_prob(probs, here, MoveType::Prune) / N);
  return Proposal{std::move(next), log_ratio};
}

std::optional<Proposal> change_from(const Tree& tree, const TreeAnalysis& an, const Matrix& X,
                                    Rng& rng, int min_leaf) {
  const auto internal = tree.internal_nodes();
  if (internal.empty()) return std::nullopt;
  const int node = internal[uniform_index(rng, static_cast<int>(internal.size()))];
  const auto& cell = an.cells[node];
  const auto vars = splittable_vars(X, cell, min_leaf);
  if (vars.empty()) return Proposal{tree, kNegInf};
  const int var = vars[uniform_index(rng, static_cast<int>(vars.size()))];
  const auto cuts = split_candidates(X, cell, var, min_leaf);
  const double cut = cuts[uniform_index(rng, static_cast<int>(cuts.size()))];
  Tree next = tree.with_rule(node, var, cut);
  if (next == tree) return Proposal{std::move(next), 0.0};
  if (!check_validity(next, X, min_leaf)) return Proposal{std::move(next), kNegInf};

  // The proposal ratio cancels the rule prior of the changed node itself; the rule
  // priors of internal descendants (whose cells moved) remain.
  const auto next_cells = node_cells(next, X);
  const auto parents = tree.parents();
  double log_ratio = 0.0;
  for (int d : internal) {
    if (d == node) continue;
    int up = parents[d];
    while (up >= 0 && up != node) up = parents[up];
    if (up != node) continue;
    log_ratio += log_rule_mass(X, next_cells[d], next.node(d), min_leaf) -
                 log_rule_mass(X, an.cells[d], tree.node(d), min_leaf);
  }
  if (std::isnan(log_ratio)) log_ratio = kNegInf;
  return Proposal{std::move(next), log_ratio};
}

}  // namespace

void SamplerConfig::validate() const {
  if (m < 1) throw std::invalid_argument("tree count must be positive");
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("nu must lie in (0, 1)");
  if (min_leaf < 1) throw std::invalid_argument("min_leaf must be at least 1");
  const auto& p = move_probs;
  if (p.grow < 0 || p.prune < 0 || p.change < 0 ||
      std::abs(p.grow + p.prune + p.change - 1.0) > 1e-9)
    throw std::invalid_argument("move probabilities must be nonnegative and sum to 1");
  if (p.grow <= 0.0 || p.prune <= 0.0)
    throw std::invalid_argument("grow and prune probabilities must be positive");
  if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
  if (b < 0.0) throw std::invalid_argument("b must be positive");
  if (iters < 1 || burnin < 0)
    throw std::invalid_argument("iteration counts out of range");
  hmc.validate();
}

double log_tree_prior(const Tree& tree, double nu) {
  const auto depth = tree.depths();
  double lp = 0.0;
  for (int i = 0; i < tree.size(); ++i) {
    const double split = std::pow(nu, depth[i]);
    lp += tree.node(i).is_leaf() ? std::log1p(-split) : std::log(split);
  }
  return lp;
}

std::vector<LeafStats> leaf_stats(int num_leaves, std::span<const double> residuals,
                                  std::span<const int> assignment) {
  std::vector<LeafStats> st(num_leaves);
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    auto& s = st[assignment[i]];
    ++s.n;
    s.sum += residuals[i];
    s.sum_sq += residuals[i] * residuals[i];
  }
  return st;
}

double log_marginal_leaf_likelihood(const Tree& tree, std::span<const double> residuals,
                                    std::span<const int> assignment, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("nonpositive leaf variance");
  double ll = 0.0;
  for (const auto& s : leaf_stats(tree.num_leaves(), residuals, assignment)) {
    if (s.n == 0) continue;
    const double prec = 1.0 + c * s.n;
    ll += -s.n * kLogSqrt2Pi - 0.5 * std::log(prec) -
          0.5 * (s.sum_sq - c * s.sum * s.sum / prec);
  }
  return ll;
}

std::vector<double> split_candidates(const Matrix& X, std::span<const int> rows, int var,
                                     int min_leaf) {
  const int n = static_cast<int>(rows.size());
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = X(rows[i], var);
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (int e = 0; e < n; ++e) {
    if (e + 1 < n && v[e + 1] == v[e]) continue;  // e is the last copy of v[e]
    if (e + 1 >= min_leaf && n - e - 1 >= min_leaf) out.push_back(v[e]);
  }
  return out;
}

std::vector<std::vector<int>> node_cells(const Tree& tree, const Matrix& X) {
  std::vector<std::vector<int>> cells(tree.size());
  for (int i = 0; i < static_cast<int>(X.rows()); ++i) {
    const auto x = X.row(i);
    int k = 0;
    for (;;) {
      cells[k].push_back(i);
      const Node& n = tree.node(k);
      if (n.is_leaf()) break;
      k = (x[n.var] <= n.cut) ? n.left : n.right;
    }
  }
  return cells;
}

double log_split_rule_prior(const Tree& tree, const Matrix& X, int min_leaf) {
  const auto cells = node_cells(tree, X);
  double lp = 0.0;
  for (int i : tree.internal_nodes()) lp += log_rule_mass(X, cells[i], tree.node(i), min_leaf);
  return lp;
}

std::optional<Proposal> propose_grow(const Tree& tree, const Matrix& X, Rng& rng, int min_leaf,
                                     const MoveProbs& probs) {
  return grow_from(tree, analyse(tree, X, min_leaf), X, rng, min_leaf, probs);
}

std::optional<Proposal> propose_prune(const Tree& tree, const Matrix& X, Rng& rng, int min_leaf,
                                      const MoveProbs& probs) {
  return prune_from(tree, analyse(tree, X, min_leaf), X, rng, min_leaf, probs);
}

std::optional<Proposal> propose_change(const Tree& tree, const Matrix& X, Rng& rng,
                                       int min_leaf) {
  if (tree.num_internal() == 0) return std::nullopt;
  return change_from(tree, analyse(tree, X, min_leaf), X, rng, min_leaf);
}

TreeStepResult mh_tree_step(const Tree& tree, std::span<const int> assignment,
                            std::span<const double> residuals, double c, const Matrix& X,
                            const SamplerConfig& cfg, Rng& rng) {
  const TreeAnalysis an = analyse(tree, X, cfg.min_leaf);
  const bool has_internal = tree.num_internal() > 0;
  const Availability avail{!an.growable_leaves.empty(), has_internal, has_internal};
  TreeStepResult out{tree, std::vector<int>(assignment.begin(), assignment.end()),
                     MoveType::Grow, false};
  if (!avail.grow && !avail.prune) return out;  // root-only and unsplittable

  const double pg = move_prob(cfg.move_probs, avail, MoveType::Grow);
  const double pp = move_prob(cfg.move_probs, avail, MoveType::Prune);
  const double u = uniform01(rng);
  std::optional<Proposal> prop;
  if (u < pg) {
    out.move = MoveType::Grow;
    prop = grow_from(tree, an, X, rng, cfg.min_leaf, cfg.move_probs);
  } else if (u < pg + pp) {
    out.move = MoveType::Prune;
    prop = prune_from(tree, an, X, rng, cfg.min_leaf, cfg.move_probs);
  } else {
    out.move = MoveType::Change;
    prop = change_from(tree, an, X, rng, cfg.min_leaf);
  }
  if (!prop || prop->log_ratio == kNegInf) return out;
  if (prop->tree == tree) {
    out.accepted = true;
    return out;
  }

  auto next_assignment = leaf_assignment(prop->tree, X);
  const double log_alpha =
      log_marginal_leaf_likelihood(prop->tree, residuals, next_assignment, c) -
      log_marginal_leaf_likelihood(tree, residuals, assignment, c) +
      log_tree_prior(prop->tree, cfg.nu) - log_tree_prior(tree, cfg.nu) + prop->log_ratio;
  if (std::log(uniform01(rng)) < log_alpha) {
    out.tree = std::move(prop->tree);
    out.assignment = std::move(next_assignment);
    out.accepted = true;
  }
  return out;
}

std::vector<double> sample_leaf_values(const Tree& tree, std::span<const double> residuals,
                                       std::span<const int> assignment, double c, Rng& rng) {
  if (!(c > 0.0)) throw std::invalid_argument("nonpositive leaf variance");
  const auto st = leaf_stats(tree.num_leaves(), residuals, assignment);
  std::vector<double> mu(st.size());
  for (std::size_t k = 0; k < st.size(); ++k) {
    const double prec = 1.0 + c * st[k].n;
    const double mean = c * st[k].sum / prec;
    const double sd = std::sqrt(c / prec);
    mu[k] = mean + sd * std_normal_draw(rng);
  }
  return mu;
}

double baseline_sigma_lambda(double sd, double prior_nu, double quantile) {
  const boost::math::chi_squared_distribution<double> chi(prior_nu);
  return sd * sd * boost::math::quantile(chi, 1.0 - quantile) / prior_nu;
}

double baseline_sigma_draw(std::span<const double> residuals, double prior_nu,
                           double prior_lambda, Rng& rng) {
  double ss = 0.0;
  for (double r : residuals) ss += r * r;
  const double dof = prior_nu + static_cast<double>(residuals.size());
  const double chi2 = std::chi_squared_distribution<double>(dof)(rng);
  return (prior_nu * prior_lambda + ss) / chi2;
}

}  // namespace cpbart
