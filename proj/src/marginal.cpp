#include "cpbart/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cpbart/errors.hpp"
#include "cpbart/normal.hpp"

namespace cpbart {

namespace {

constexpr double kWindow = 12.0;     // kernel truncation radius, in bandwidths
constexpr int kBracketPoints = 1024;
constexpr int kScorePoints = 4097;

// Type-7 sample quantile of sorted data.
double sorted_quantile(std::span<const double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

MarginalModel::MarginalModel(std::vector<double> centers, double bandwidth)
    : centers_(std::move(centers)), bandwidth_(bandwidth) {
  if (centers_.empty()) throw std::invalid_argument("marginal model needs at least one center");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
    throw std::invalid_argument("bandwidth must be positive");
  std::sort(centers_.begin(), centers_.end());
  support_lo_ = centers_.front() - 10.0 * bandwidth_;
  support_hi_ = centers_.back() + 10.0 * bandwidth_;
  build_tables();
}

void MarginalModel::cdf_pdf(double y, double& cdf, double& pdf) const {
  const double h = bandwidth_;
  const auto first = std::lower_bound(centers_.begin(), centers_.end(), y - kWindow * h);
  const auto last = std::upper_bound(first, centers_.end(), y + kWindow * h);
  double mass = static_cast<double>(first - centers_.begin());
  double dens = 0.0;
  for (auto it = first; it != last; ++it) {
    const double t = (y - *it) / h;
    mass += std_normal_cdf(t);
    dens += std_normal_pdf(t);
  }
  const auto n = static_cast<double>(centers_.size());
  cdf = mass / n;
  pdf = dens / (n * h);
}

double MarginalModel::raw_cdf(double y) const {
  double f, p;
  cdf_pdf(y, f, p);
  return f;
}

double MarginalModel::cdf(double y) const {
  return std::clamp(raw_cdf(y), kClip, 1.0 - kClip);
}

double MarginalModel::pdf(double y) const {
  double f, p;
  cdf_pdf(y, f, p);
  return p;
}

double MarginalModel::solve_quantile(double u, double lo, double hi, double guess) const {
  // Newton iterations safeguarded by bisection inside a bracket with F(lo) <= u <= F(hi).
  double y = std::clamp(guess, lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    double f, p;
    cdf_pdf(y, f, p);
    const double r = f - u;
    if (r == 0.0) return y;
    if (r < 0.0) lo = y; else hi = y;
    double next = (p > 0.0) ? y - r / p : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - y);
    y = next;
    if (step <= 1e-14 * (std::abs(y) + bandwidth_)) return y;
    if (hi - lo <= 1e-15 * (std::abs(y) + bandwidth_)) return y;
  }
  return y;
}

double MarginalModel::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile level out of range");
  if (u <= grid_cdf_.front()) return support_lo_;
  if (u >= grid_cdf_.back()) return support_hi_;
  const auto it = std::upper_bound(grid_cdf_.begin(), grid_cdf_.end(), u);
  const auto j = static_cast<std::size_t>(it - grid_cdf_.begin());
  const double lo = grid_y_[j - 1];
  const double hi = grid_y_[j];
  const double flo = grid_cdf_[j - 1];
  const double fhi = grid_cdf_[j];
  const double guess = (fhi > flo) ? lo + (u - flo) / (fhi - flo) * (hi - lo) : 0.5 * (lo + hi);
  return solve_quantile(u, lo, hi, guess);
}

void MarginalModel::build_tables() {
  grid_y_.resize(kBracketPoints);
  grid_cdf_.resize(kBracketPoints);
  const double dy = (support_hi_ - support_lo_) / (kBracketPoints - 1);
  for (int j = 0; j < kBracketPoints; ++j) {
    grid_y_[j] = (j == kBracketPoints - 1) ? support_hi_ : support_lo_ + j * dy;
    grid_cdf_[j] = raw_cdf(grid_y_[j]);
  }

  score_lo_ = std_normal_quantile(kClip);
  score_step_ = -2.0 * score_lo_ / (kScorePoints - 1);
  score_y_.resize(kScorePoints);
  score_dy_.resize(kScorePoints);
  for (int j = 0; j < kScorePoints; ++j) {
    const double z = score_lo_ + j * score_step_;
    const double y = quantile(std_normal_cdf(z));
    const double p = pdf(y);
    score_y_[j] = y;
    score_dy_[j] = std_normal_pdf(z) / std::max(p, 1e-300);
  }
}

double MarginalModel::quantile_of_normal_score(double z) const {
  const double t = (z - score_lo_) / score_step_;
  if (!(t > 0.0)) return score_y_.front();
  if (t >= kScorePoints - 1) return score_y_.back();
  const auto j = static_cast<std::size_t>(t);
  const double s = t - static_cast<double>(j);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * score_y_[j] + h10 * score_step_ * score_dy_[j] + h01 * score_y_[j + 1] +
         h11 * score_step_ * score_dy_[j + 1];
}

MarginalModel fit_kde(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) throw DataError("degenerate marginal sample");
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0) || sorted.front() == sorted.back()) throw DataError("degenerate marginal sample");
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double spread = (iqr > 0.0) ? std::min(sd, iqr / 1.34) : sd;
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  return MarginalModel(std::move(sorted), h);
}

}  // namespace cpbart
