#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>

#include "tsb/data_matrix.hpp"
#include "tsb/rng.hpp"

namespace tsb {

/// Gaussian mixture with diagonal per-component covariance.
struct MoGSpec {
  Eigen::Index d = 0;
  Eigen::Index q = 0;
  RowMatrixXd means;        // q x d
  RowMatrixXd stds;         // q x d, all positive
  Eigen::VectorXd weights;  // q entries summing to 1

  Eigen::VectorXd mixture_mean() const;
  Eigen::MatrixXd mixture_covariance() const;
  Eigen::MatrixXd mixture_correlation() const;
};

/// Full-covariance Gaussian with its Cholesky factor kept alongside.
struct CGSpec {
  Eigen::Index d = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd cholesky_factor;  // lower triangular
};

using ModelSpec = std::variant<MoGSpec, CGSpec>;

/// Means U[-5,5], stds U(0,1] (zero draws rejected), weights uniform then
/// normalized. Pure function of (d, q, stream identity).
MoGSpec build_mog(Eigen::Index d, Eigen::Index q, RngStream stream);

/// Mean U[-5,5]; covariance equals the correlation matrix of the mixture
/// built from the same stream, computed from the analytic mixture moments.
/// The component count defaults to ceil(sqrt(d)).
CGSpec build_cg(Eigen::Index d, RngStream stream);
CGSpec build_cg(Eigen::Index d, Eigen::Index mixture_q, RngStream stream);

/// Builds a CGSpec from a mean and covariance (symmetrized, eigenvalue
/// floored, Cholesky factored). Throws FactorizationFailure.
CGSpec make_cg(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

DataMatrix sample(const ModelSpec& model, Eigen::Index n, RngStream& stream);

double log_density(const ModelSpec& model, const Eigen::VectorXd& point);

Eigen::Index dimension(const ModelSpec& model);
Eigen::VectorXd model_mean(const ModelSpec& model);
Eigen::VectorXd model_marginal_std(const ModelSpec& model);

std::string model_to_json(const ModelSpec& model);
ModelSpec model_from_json(const std::string& text);

}  // namespace tsb
