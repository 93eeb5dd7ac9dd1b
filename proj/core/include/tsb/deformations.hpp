#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string_view>

#include "tsb/data_matrix.hpp"
#include "tsb/models.hpp"
#include "tsb/rng.hpp"

namespace tsb {

enum class DeformKind {
  Mu,
  SigmaDiag,
  SigmaOffDiag,
  PowPlus,
  PowMinus,
  NoiseNormal,
  NoiseUniform,
};

const char* to_string(DeformKind kind);
std::optional<DeformKind> deform_kind_from_string(std::string_view name);

/// Kinds with a known inverse and Jacobian (PowMinus only below eps = 1).
bool is_bijective(DeformKind kind);

/// Per-feature location/scale of the reference, used by the scale
/// deformation to keep the mean fixed.
struct ModelInfo {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

ModelInfo model_info_of(const ModelSpec& model);
ModelInfo standardized_model_info(Eigen::Index d);  // zero mean, unit scale

/// A frozen transform of fixed strength. The direction draws happen once
/// in make_deformation, so a family built from the same stream at varying
/// epsilon is nested; per-application randomness (shuffles, noise) is
/// re-derived from (deform_stream, iteration).
struct Deformation {
  DeformKind kind = DeformKind::Mu;
  double epsilon = 0.0;
  Eigen::Index d = 0;
  Eigen::VectorXd frozen_mu_dirs;     // entries in [-1, 1]
  Eigen::VectorXd frozen_sigma_dirs;  // entries in [0, 1]
  Eigen::VectorXd mu_shift;           // epsilon * frozen_mu_dirs
  Eigen::VectorXd sigma_scale;        // 1 + epsilon * frozen_sigma_dirs
  Eigen::VectorXd model_mean;
  Eigen::VectorXd model_std;
  RngStream deform_stream;
};

Deformation make_deformation(DeformKind kind, double epsilon,
                             const ModelInfo& info, RngStream stream);

DataMatrix apply(const Deformation& def, const DataMatrix& x,
                 std::uint64_t iteration);

Eigen::VectorXd inverse(const Deformation& def, const Eigen::VectorXd& y);

/// log |det dg/dx| evaluated at x (the pre-image).
double log_abs_det_jacobian(const Deformation& def, const Eigen::VectorXd& x);

/// log q_eps(y) = log p(g^{-1}(y)) - log |det dg/dx| (g^{-1}(y)).
double deformed_log_density(const ModelSpec& model, const Deformation& def,
                            const Eigen::VectorXd& y);

/// Descriptor (kind, epsilon, stream identity, frozen vectors) for run
/// manifests, so a scan's deformation family is auditable.
std::string deformation_to_json(const Deformation& def);

}  // namespace tsb
