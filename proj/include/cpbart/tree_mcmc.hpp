#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpbart/hmc.hpp"
#include "cpbart/matrix.hpp"
#include "cpbart/random.hpp"
#include "cpbart/tree.hpp"

namespace cpbart {

struct MoveProbs {
  double grow = 0.25;
  double prune = 0.25;
  double change = 0.5;
};

struct SamplerConfig {
  int m = 75;
  double nu = 0.45;  // depth-prior base: a node at depth d (root = 1) splits w.p. nu^d
  int min_leaf = 5;
  MoveProbs move_probs;
  double a = 1.0;
  double b = 0.0;  // <= 0 means 9 / (14 m)
  int iters = 4000;  // retained sweeps, after the burn-in
  int burnin = 1000;
  std::uint64_t seed = 1;
  HMCConfig hmc;
  bool update_c = true;  // false freezes c at its initial value

  double resolved_b() const { return b > 0.0 ? b : 9.0 / (14.0 * m); }
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

enum class MoveType { Grow, Prune, Change };

/// Galton-Watson log prior: sum of log(nu^d) over internal nodes and log(1 - nu^d)
/// over leaves, depths starting at 1 for the root.
double log_tree_prior(const Tree& tree, double nu);

struct LeafStats {
  int n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

std::vector<LeafStats> leaf_stats(int num_leaves, std::span<const double> residuals,
                                  std::span<const int> assignment);

/// log p(residuals | tree, c) with N(0, c) leaf values integrated out and unit noise.
/// Throws std::invalid_argument("nonpositive leaf variance") for c <= 0.
double log_marginal_leaf_likelihood(const Tree& tree, std::span<const double> residuals,
                                    std::span<const int> assignment, double c);

/// Sorted distinct values of column `var` over `rows` that split them into two
/// parts of at least min_leaf rows each (left part: values <= cut).
std::vector<double> split_candidates(const Matrix& X, std::span<const int> rows, int var,
                                     int min_leaf);

/// Rows of X reaching each node of the tree.
std::vector<std::vector<int>> node_cells(const Tree& tree, const Matrix& X);

/// Log prior mass of the split rules given the topology: at every internal node the
/// variable is uniform over covariates with at least one candidate cut, and the cut is
/// uniform over that variable's candidates. -infinity if some rule is not a candidate.
double log_split_rule_prior(const Tree& tree, const Matrix& X, int min_leaf);

/// A structural proposal. log_ratio = log q(T|T')/q(T'|T) + log of the split-rule prior
/// ratio; the Metropolis-Hastings log acceptance adds the changes in the marginal
/// likelihood and in log_tree_prior. -infinity marks a proposal outside the support.
struct Proposal {
  Tree tree;
  double log_ratio;
};

/// nullopt signals "move unavailable".
std::optional<Proposal> propose_grow(const Tree& tree, const Matrix& X, Rng& rng, int min_leaf,
                                     const MoveProbs& probs = {});
std::optional<Proposal> propose_prune(const Tree& tree, const Matrix& X, Rng& rng, int min_leaf,
                                      const MoveProbs& probs = {});
std::optional<Proposal> propose_change(const Tree& tree, const Matrix& X, Rng& rng,
                                       int min_leaf);

struct TreeStepResult {
  Tree tree;
  std::vector<int> assignment;
  MoveType move;
  bool accepted;
};

/// One Metropolis-Hastings structure update of a single tree against its partial
/// residuals. Move types are drawn with probabilities renormalized over the moves
/// available for the current tree.
TreeStepResult mh_tree_step(const Tree& tree, std::span<const int> assignment,
                            std::span<const double> residuals, double c, const Matrix& X,
                            const SamplerConfig& cfg, Rng& rng);

/// Conjugate draw of the leaf values: N(c R_k / (1 + c n_k), c / (1 + c n_k)).
std::vector<double> sample_leaf_values(const Tree& tree, std::span<const double> residuals,
                                       std::span<const int> assignment, double c, Rng& rng);

/// Scale parameter lambda of the scaled-inverse-chi^2(nu, lambda) prior placing
/// `quantile` of its mass below sd^2.
double baseline_sigma_lambda(double sd, double prior_nu, double quantile = 0.9);

/// Draw sigma^2 from (nu*lambda + sum r^2) / chi^2_{nu + n}.
double baseline_sigma_draw(std::span<const double> residuals, double prior_nu,
                           double prior_lambda, Rng& rng);

}  // namespace cpbart
