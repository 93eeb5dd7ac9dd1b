#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <variant>
#include <vector>

#include "tsb/dataio.hpp"
#include "tsb/deformations.hpp"
#include "tsb/models.hpp"
#include "tsb/nulls.hpp"
#include "tsb/rng.hpp"
#include "tsb/statistics.hpp"

namespace tsb {

/// Repeated alternative-hypothesis tests at one deformation strength.
struct AltEvaluation {
  double epsilon = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t reps = 0;
};

struct EpsilonBound {
  double alpha = 0.0;
  double eps = 0.0;
  double eps_low = 0.0;
  double eps_up = 0.0;
  std::vector<AltEvaluation> evaluations;
  double elapsed_seconds = 0.0;
  bool converged = false;
  int nonmonotone_warnings = 0;
};

struct GeneratorProblem {
  ModelSpec model;
};

/// Finite-dataset problem: deformations act in standardized coordinates
/// and are mapped back; scale_features picks the space the statistic sees.
struct DatasetProblem {
  DataMatrix data;
  ScaleInfo scale;
  bool scale_features = false;
  bool with_replacement = true;
};

struct ScanProblem {
  std::variant<GeneratorProblem, DatasetProblem> source;
  DeformKind deform = DeformKind::Mu;
  MetricKind metric = MetricKind::SW;
  MetricConfig cfg;
  Eigen::Index n = 0;
  std::size_t reps = 100;
  double eps_max = 2.0;
  double tolerance = 1e-2;  // relative, both on the bracket and the gap
};

/// Cache of alternative evaluations keyed by the exact epsilon bits;
/// shared across the three bracket searches and across alpha levels.
using AltCache = std::map<std::uint64_t, AltEvaluation>;

AltEvaluation evaluate_alternative(const ScanProblem& problem, double epsilon,
                                   const RngStream& scan_stream);

/// Reusable noisy bracket search: finds eps where value_at crosses
/// threshold_at, halving [lo, hi]. Relative tolerances; once the bracket
/// is exhausted the residual gap is accepted under the wider noisy
/// tolerance, or when it is within three standard errors of zero
/// (se_at, when given, reports the evaluation noise at eps).
struct CrossingResult {
  double eps = 0.0;
  bool converged = false;
  double gap_rel = 0.0;
};

CrossingResult bisect_crossing(const std::function<double(double)>& value_at,
                               const std::function<double(double)>& threshold_at,
                               double lo, double hi, double rel_tol,
                               double noisy_rel_tol,
                               const std::function<double(double)>& se_at = {},
                               int max_iter = 80);

/// Locates the smallest rejected strength for a fixed-null metric, with the
/// one-sigma companions from the mean +/- std crossings.
EpsilonBound bisect_epsilon(const ScanProblem& problem,
                            const NullDistribution& null, double alpha,
                            const RngStream& scan_stream,
                            AltCache* shared_cache = nullptr);

/// Per-strength nulls of the likelihood-ratio statistic; they depend on
/// epsilon but not on alpha, so confidence levels can share them.
using LlrNullCache = std::map<std::uint64_t, NullDistribution>;

/// Likelihood-ratio variant: the null (and hence the threshold) is
/// re-estimated at every probed strength.
EpsilonBound bisect_epsilon_llr(const ScanProblem& problem,
                                std::size_t null_iters, double alpha,
                                const RngStream& scan_stream,
                                AltCache* shared_cache = nullptr,
                                LlrNullCache* shared_nulls = nullptr);

}  // namespace tsb
