#pragma once

namespace tsb {

/// Asymptotic CDF of the scaled two-sample KS statistic:
/// F(x) = 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2), zero for x <= 0.
double kolmogorov_cdf(double x);

/// Density of the same law: 8x sum_{k>=1} (-1)^{k-1} k^2 exp(-2 k^2 x^2).
double kolmogorov_pdf(double x);

}  // namespace tsb
