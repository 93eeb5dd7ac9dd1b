#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string_view>
#include <vector>

#include "tsb/data_matrix.hpp"
#include "tsb/deformations.hpp"
#include "tsb/models.hpp"
#include "tsb/rng.hpp"

namespace tsb {

enum class MetricKind { SW, MeanKS, SlicedKS, MMD, FGD, LLR };

const char* to_string(MetricKind kind);
std::optional<MetricKind> metric_kind_from_string(std::string_view name);

struct MetricConfig {
  Eigen::Index slices = 100;  // projection count for the sliced statistics
  std::vector<double> fgd_fit_fractions{1.0, 1.25, 1.5, 1.75, 2.0};
  Eigen::Index fgd_draws_per_size = 5;
};

/// Mean absolute gap of order statistics; both samples must have equal size.
double wasserstein_1d_sorted(const SortedSample& xs, const SortedSample& ys);

/// 1D transport distance averaged over fresh random projections.
double sliced_wasserstein(const DataMatrix& x, const DataMatrix& y,
                          const MetricConfig& cfg, RngStream& stream);

/// sqrt(nm/(n+m)) * sup |F_n - G_m|; sizes may differ.
double ks_1d(const SortedSample& xs, const SortedSample& ys);

/// Average of the scaled KS statistic over the feature marginals.
double mean_ks(const DataMatrix& x, const DataMatrix& y);

/// Average of the scaled KS statistic over fresh random projections.
double sliced_ks(const DataMatrix& x, const DataMatrix& y,
                 const MetricConfig& cfg, RngStream& stream);

/// (x.y/d + 1)^4
double poly_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Unbiased kernel discrepancy: diagonal-excluded within-sample means minus
/// twice the cross mean. May be negative.
double mmd_unbiased(const DataMatrix& x, const DataMatrix& y);

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased, n-1 denominator
};

GaussianSummary gaussian_summary(const DataMatrix& x);

/// tr sqrt(A^{1/2} B A^{1/2}) with negative eigenvalues floored at zero.
double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

double fgd_from_summaries(const GaussianSummary& a, const GaussianSummary& b);

/// ||mu1-mu2||^2 + tr(S1 + S2 - 2 sqrt(S1 S2)) from the sample summaries.
double fgd_finite(const DataMatrix& x, const DataMatrix& y);

/// Linear extrapolation of subsampled finite-size values to 1/n -> 0.
/// May be negative.
double fgd_inf(const DataMatrix& x, const DataMatrix& y,
               const MetricConfig& cfg, RngStream& stream);

/// -2 sum_y [log p(y) - log q_eps(y)]; requires a bijective deformation.
double llr(const ModelSpec& model, const Deformation& def, const DataMatrix& y);

/// Dispatch for the two-sample statistics (everything except LLR).
double evaluate_metric(MetricKind metric, const DataMatrix& x,
                       const DataMatrix& y, const MetricConfig& cfg,
                       RngStream& stream);

}  // namespace tsb
