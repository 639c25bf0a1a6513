#include "qavb/special_functions.hpp"

#include <cmath>
#include <numbers>

#include "qavb/error.hpp"

namespace qavb {

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("digamma: argument must be positive and finite");
  }
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^2n)
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 -
                                                                    inv2 / 12.0))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

double log_multivariate_gamma(double a, int dim) {
  double out = 0.25 * dim * (dim - 1) * std::log(std::numbers::pi);
  for (int d = 1; d <= dim; ++d) out += std::lgamma(a + 0.5 * (1 - d));
  return out;
}

}  // namespace qavb
