#pragma once

namespace qavb {

/// Digamma psi(x) for x > 0: recurrence up to x >= 6, then the asymptotic
/// series. Absolute error below 1e-12 on the positive axis.
/// Throws DomainError for x <= 0 or non-finite x.
double digamma(double x);

/// ln Gamma_D(a) = D(D-1)/4 ln(pi) + sum_{d=1..D} ln Gamma(a + (1-d)/2).
double log_multivariate_gamma(double a, int dim);

}  // namespace qavb
