#include "tsb/kolmogorov.hpp"

#include <cmath>

namespace tsb {

namespace {
constexpr double kTermTolerance = 1e-12;
constexpr int kMaxTerms = 200;
// Below this point both series values are < 1e-200; the series itself
// converges too slowly there to be worth summing.
constexpr double kTinyArgument = 0.05;
}  // namespace

double kolmogorov_cdf(double x) {
  if (x <= kTinyArgument) return 0.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= kMaxTerms; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += sign * term;
    if (term < kTermTolerance) break;
    sign = -sign;
  }
  const double value = 1.0 - 2.0 * sum;
  // below the term tolerance the alternating sum is cancellation noise
  if (value < kTermTolerance) return 0.0;
  return value > 1.0 ? 1.0 : value;
}

double kolmogorov_pdf(double x) {
  if (x <= kTinyArgument) return 0.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= kMaxTerms; ++k) {
    const double term = k * k * std::exp(-2.0 * k * k * x * x);
    sum += sign * term;
    if (term < kTermTolerance) break;
    sign = -sign;
  }
  const double value = 8.0 * x * sum;
  return value < 0.0 ? 0.0 : value;
}

}  // namespace tsb
