#pragma once

#include <cstdint>
#include <span>

#include "cpbart/matrix.hpp"
#include "cpbart/random.hpp"
#include "cpbart/tree.hpp"

namespace cpbart {

/// How the second gamma parameter of Cases 2 and 3 is read.
enum class GammaParam { ShapeScale, ShapeRate };

struct SimSpec {
  int case_id = 1;
  int n = 250;
  double rho = 0.3;
  std::uint64_t seed = 1;
  GammaParam gamma = GammaParam::ShapeScale;
  void validate() const;
};

inline constexpr double kCase1NoiseVar = 2.0787;
inline constexpr double kCase2NoiseVar = 1.6;
inline constexpr double kCase3Scale = 0.51;  // r3, with r3^2 = 0.2601

double friedman(std::span<const double> x);
/// (friedman(x) - 15) / (2 sqrt(5.5)).
double friedman_star(std::span<const double> x);

/// n draws from N(0, Sigma) with Sigma_lj = rho^|l-j| over 5 columns, each column then
/// min-max scaled to [0,1].
Matrix gen_covariates(int n, double rho, std::uint64_t seed);

/// Conditional law of Y given x for one of the three cases.
class CaseOracle {
 public:
  CaseOracle(int case_id, GammaParam gamma);
  int case_id() const { return case_id_; }
  double quantile(std::span<const double> x, double alpha) const;
  double density(std::span<const double> x, double y) const;
  double mean(std::span<const double> x) const;
  double variance(std::span<const double> x) const;
  /// One draw of Y given x.
  double draw(std::span<const double> x, Rng& rng) const;

 private:
  double gamma_second(double v) const;  // scale under the active parameterization
  int case_id_;
  GammaParam gamma_;
};

struct SimData {
  RawData raw;
  Dataset data;
  CaseOracle oracle;
};

/// Throws std::invalid_argument("unknown case") for case ids other than 1, 2, 3.
SimData gen_case(const SimSpec& spec);

/// Range of E(Y|x) over `points` sampled covariates divided by the root mean
/// conditional variance. Covariates come from stacked designs of `design_n` rows,
/// each min-max scaled on its own.
double monte_carlo_snr(int case_id, int points, std::uint64_t seed,
                       GammaParam gamma = GammaParam::ShapeScale, double rho = 0.3,
                       int design_n = 250);

}  // namespace cpbart
