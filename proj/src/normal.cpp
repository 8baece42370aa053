#include "cpbart/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <numbers>
#include <stdexcept>

namespace cpbart {

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile level out of range");
  // erfc_inv keeps full relative precision in the lower tail; use symmetry for the upper.
  if (u <= 0.5) return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - u));
}

}  // namespace cpbart
