#pragma once

namespace pcawald {

/// Φ(x).
double normal_cdf(double x);
/// Φ^{-1}(q), q in (0, 1).
double normal_quantile(double q);

/// P(χ²_df ≤ x) for x ≥ 0 and df ≥ 1.
double chisq_cdf(double x, int df);
/// Inverse of chisq_cdf, q in (0, 1).
double chisq_quantile(double q, int df);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

}  // namespace pcawald
