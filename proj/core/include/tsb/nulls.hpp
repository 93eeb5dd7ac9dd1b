#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tsb/data_matrix.hpp"
#include "tsb/deformations.hpp"
#include "tsb/models.hpp"
#include "tsb/rng.hpp"
#include "tsb/statistics.hpp"

namespace tsb {

enum class NullSource { Generator, Bootstrap };

/// Sorted empirical statistic values under the null plus provenance.
struct NullDistribution {
  std::vector<double> values;                    // ascending
  std::vector<std::uint32_t> origin_iteration;   // same order as values
  std::size_t iterations = 0;
  MetricKind metric = MetricKind::SW;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  NullSource source = NullSource::Generator;
  std::optional<double> epsilon;  // set for the likelihood-ratio null
  double elapsed_seconds = 0.0;
};

struct CLThreshold {
  double alpha = 0.0;
  double t_alpha = 0.0;
};

/// Draws iters independent (X, Y) pairs from the model and records the
/// statistic of each pair. Deterministic given the stream identity.
NullDistribution estimate_null_generator(const ModelSpec& model,
                                         MetricKind metric,
                                         const MetricConfig& cfg,
                                         Eigen::Index n, std::size_t iters,
                                         const RngStream& stream);

/// Each iteration reshuffles the dataset, splits it in half, bootstraps a
/// size-n subsample from each half and records the statistic of the pair.
NullDistribution estimate_null_bootstrap(const DataMatrix& dataset,
                                         MetricKind metric,
                                         const MetricConfig& cfg,
                                         Eigen::Index n, std::size_t iters,
                                         const RngStream& stream,
                                         bool with_replacement = true);

/// Likelihood-ratio null at fixed deformation strength: iters draws of
/// Y ~ p scored by the ratio statistic.
NullDistribution estimate_null_llr(const ModelSpec& model,
                                   const Deformation& def, Eigen::Index m,
                                   std::size_t iters, const RngStream& stream);

/// Smallest sample value t with (#values >= t) / iterations <= alpha.
CLThreshold threshold(const NullDistribution& null, double alpha);

/// (1 + #values >= t_obs) / (1 + iterations); add-one keeps p > 0.
double p_value(const NullDistribution& null, double t_obs);

/// Standard normal quantile of 1 - p, clamped to [-38, 38].
double z_score(double p);

void save_null(const NullDistribution& null, const std::filesystem::path& csv_path,
               const std::filesystem::path& meta_path);
NullDistribution load_null(const std::filesystem::path& csv_path,
                           const std::filesystem::path& meta_path);

}  // namespace tsb
